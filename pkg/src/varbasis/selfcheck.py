"""Randomized check of the composition-law identities.

Each trial draws a fresh finite universe (1 to 16 labels), three vectors on
random sub-bases and two scalars, then evaluates every law. Results are
tallied per law; the first counterexample of each failing law is kept.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .algebra import (
    DEFAULT_ATOL,
    ZERO,
    Universe,
    VBVector,
    inter_add,
    scale,
    union_add,
    zero_empty,
    zero_full,
)


@dataclass
class LawResult:
    name: str
    cases: int = 0
    failures: int = 0
    counterexample: str | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} ({self.cases} cases, {self.failures} failures)"


@dataclass
class SelfCheckReport:
    trials: int
    seed: int
    laws: dict[str, LawResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.laws.values())

    def lines(self) -> list[str]:
        out = [f"selfcheck trials={self.trials} seed={self.seed}"]
        for r in self.laws.values():
            out.append(r.line())
            if r.counterexample:
                out.append(f"  counterexample: {r.counterexample}")
        out.append("all laws pass" if self.passed else "LAW VIOLATION")
        return out


def _random_value(rng: random.Random) -> float:
    roll = rng.random()
    if roll < 0.1:
        return 0.0
    if roll < 0.2:
        return float(rng.randint(-3, 3))
    return rng.uniform(-10.0, 10.0)


def random_universe(rng: random.Random, max_size: int = 16) -> Universe:
    size = rng.randint(1, max_size)
    start = rng.randint(0, 5)
    return Universe.range(size, start=start)


def random_vector(rng: random.Random, universe: Universe, p_full: float = 0.15) -> VBVector:
    labels = universe.ordered()
    if rng.random() < p_full:
        chosen = labels
    else:
        chosen = [l for l in labels if rng.random() < 0.5]
    return VBVector((l, _random_value(rng)) for l in chosen)


def _close(a: VBVector, b: VBVector, atol: float) -> bool:
    return a.isclose(b, atol)


def check_laws(trials: int = 1000, seed: int = 0, max_universe: int = 16,
               atol: float = DEFAULT_ATOL) -> SelfCheckReport:
    rng = random.Random(seed)
    report = SelfCheckReport(trials, seed)

    def record(name, ok, *witness):
        r = report.laws.setdefault(name, LawResult(name))
        r.cases += 1
        if not ok:
            r.failures += 1
            if r.counterexample is None:
                r.counterexample = " ; ".join(repr(w) for w in witness)

    laws = {"+∪": union_add, "+∩": inter_add}
    set_ops = {"+∪": frozenset.union, "+∩": frozenset.intersection}

    for _ in range(trials):
        u = random_universe(rng, max_universe)
        x, y, z = (random_vector(rng, u) for _ in range(3))
        a = rng.uniform(-5.0, 5.0)
        b = rng.uniform(-5.0, 5.0)
        full0 = zero_full(u)

        for sym, op in laws.items():
            xy = op(x, y)
            record(f"commutativity {sym}", xy == op(y, x), x, y)
            record(f"associativity {sym}", _close(op(op(x, y), z), op(x, op(y, z)), atol), x, y, z)
            record(f"basis depends only on bases {sym}",
                   xy.basis == set_ops[sym](x.basis, y.basis), x, y)
            record(f"distributivity over {sym}",
                   _close(scale(a, xy), op(scale(a, x), scale(a, y)), atol), a, x, y)
            record(f"distributivity over scalar addition ({sym})",
                   _close(scale(a + b, x), op(scale(a, x), scale(b, x)), atol), a, b, x)

        record("scalar associativity", _close(scale(a * b, x), scale(a, scale(b, x)), atol), a, b, x)
        record("scalar identity", scale(1.0, x) == x, x)
        record("scale keeps basis", scale(0.0, x).basis == x.basis, x)

        # neutral elements
        record("neutral element of +∪ (empty basis)",
               union_add(x, zero_empty()) == x and union_add(zero_empty(), x) == x, x)
        record("neutral element of +∩ (full zero vector)",
               inter_add(x, full0) == x and inter_add(full0, x) == x, x)

        # non-invertibility under +∪: result is the empty vector only for two empty operands
        w = ZERO if rng.random() < 0.2 else x
        v = ZERO if rng.random() < 0.2 else y
        s = union_add(w, v)
        record("+∪ inverse only for the empty vector",
               (s != zero_empty()) or (w == ZERO and v == ZERO), w, v)

        # non-invertibility under +∩: reaching the full zero vector forces full bases and y = -x
        xf = random_vector(rng, u, p_full=0.6)
        yf = scale(-1.0, xf) if rng.random() < 0.5 else random_vector(rng, u, p_full=0.6)
        hits = inter_add(xf, yf).isclose(full0, atol)
        if hits:
            ok = (xf.basis == u.labels and yf.basis == u.labels
                  and all(abs(xv + yv) <= atol for (_, xv), (_, yv) in zip(xf.items(), yf.items())))
        else:
            ok = True
        record("+∩ inverse only on the full basis with negated coordinates", ok, xf, yf)
        if xf.basis != u.labels:
            record("+∩ no inverse for a strictly smaller basis",
                   not inter_add(xf, yf).isclose(full0, atol), xf, yf)

    return report
