"""Parameter/scenario documents and arc serialization.

Both input formats are line-oriented and sectioned::

    # comment
    [section]
    tokens ...

Parameter documents hold ``[universe]``, ``[growth]``, ``[susceptibility]``
and ``[interaction]``. Scenario documents hold ``[initial]``,
``[antibiotic]``, ``[therapy]``, ``[jumps]``, ``[run]`` and optionally
``[appear_payload]`` and ``[names]``. See README.md for the full grammar.

Outputs are comma-separated text: a time series with one column per universe
label (empty field = species absent) and an event log with one line per
jump. Plot data is emitted as whitespace-separated blocks, one per species.
"""

from __future__ import annotations

import contextlib
import io
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping

from .algebra import Label, Universe, VBVector
from .errors import ParseError
from .flow import NO_ANTIBIOTIC, AntibioticSignal, GlobalParams, IntegratorSettings, Scheme
from .hybrid import HybridArc, JumpConfig

ABSENT = ""


@dataclass(frozen=True)
class Scenario:
    initial_state: VBVector
    antibiotic: AntibioticSignal = NO_ANTIBIOTIC
    therapy_events: tuple[tuple[float, VBVector], ...] = ()
    jump_config: JumpConfig = field(default_factory=JumpConfig)
    horizon: float = 600.0
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    seed_label_names: Mapping[Label, str] | None = None

    def __post_init__(self):
        events = tuple((float(t), v) for t, v in self.therapy_events)
        object.__setattr__(self, "therapy_events", events)
        if self.horizon < 0:
            raise ValueError(f"negative horizon {self.horizon}")
        times = [t for t, _ in events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("therapy events must be strictly increasing in time")
        if any(t < 0 or t >= self.horizon for t in times):
            raise ValueError("therapy event times must lie in [0, horizon)")

    def labels(self) -> frozenset[Label]:
        out = set(self.initial_state.basis) | set(self.jump_config.appear_payload.basis)
        for _, v in self.therapy_events:
            out |= v.basis
        return frozenset(out)


def data_path(name: str) -> Path:
    """Path of a file shipped in ``varbasis/data``."""
    return Path(str(resources.files("varbasis") / "data" / name))


# -- tokenizer -------------------------------------------------------------

def _read_text(source) -> tuple[str, str]:
    if isinstance(source, (str, os.PathLike)) and not (isinstance(source, str) and "\n" in source):
        path = Path(source)
        try:
            return path.read_text(encoding="utf-8"), str(path)
        except OSError as exc:
            raise ParseError(f"cannot read: {exc.strerror}", source=str(path)) from exc
    if hasattr(source, "read"):
        return source.read(), getattr(source, "name", "<stream>")
    return str(source), "<string>"


_PARAMS_SECTIONS = ("universe", "growth", "susceptibility", "interaction")
_SCENARIO_SECTIONS = ("initial", "appear_payload", "antibiotic", "therapy", "jumps", "run", "names")


def _sections(text: str, name: str) -> Iterator[tuple[str | None, int, list[str]]]:
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            yield section, lineno, []
            continue
        if section is None:
            raise ParseError("content before the first [section]", name, lineno)
        yield section, lineno, line.split()


def _label(tok: str, name: str, lineno: int) -> Label:
    try:
        value = int(tok)
    except ValueError:
        raise ParseError(f"label {tok!r} is not an integer", name, lineno) from None
    if value < 0:
        raise ParseError(f"label {value} is negative", name, lineno)
    return value


def _real(tok: str, name: str, lineno: int, what: str = "value") -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"{what} {tok!r} is not a number", name, lineno) from None


def _bool(tok: str, name: str, lineno: int) -> bool:
    low = tok.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ParseError(f"expected a boolean, got {tok!r}", name, lineno)


def _key_value(tokens: list[str], name: str, lineno: int) -> tuple[str, str]:
    joined = " ".join(tokens)
    if "=" in joined:
        key, _, value = joined.partition("=")
    elif len(tokens) == 2:
        key, value = tokens
    else:
        raise ParseError("expected 'key = value'", name, lineno)
    key, value = key.strip().lower(), value.strip()
    if not key or not value:
        raise ParseError("expected 'key = value'", name, lineno)
    return key, value


class _LabelValues:
    """Collects ``label value`` lines for one section, rejecting duplicates."""

    def __init__(self, section):
        self.section = section
        self.values: dict[Label, float] = {}
        self.lines: dict[Label, int] = {}

    def add(self, tokens, name, lineno):
        if len(tokens) != 2:
            raise ParseError(f"[{self.section}] expects 'label value'", name, lineno)
        label = _label(tokens[0], name, lineno)
        if label in self.values:
            raise ParseError(f"label {label} repeated in [{self.section}]", name, lineno)
        self.values[label] = _real(tokens[1], name, lineno)
        self.lines[label] = lineno


# -- parameters ------------------------------------------------------------

def load_params(source) -> GlobalParams:
    """Parse a parameter document into :class:`GlobalParams`.

    The interaction matrix rows and columns follow the order in which the
    known labels are listed under ``[universe]``.
    """
    text, name = _read_text(source)
    known: list[Label] = []
    reserve: list[Label] = []
    names: dict[Label, str] = {}
    growth = _LabelValues("growth")
    eps = _LabelValues("susceptibility")
    rows: list[tuple[int, list[float]]] = []
    seen = set()
    universe_line = None
    for section, lineno, tokens in _sections(text, name):
        if not tokens:
            if section not in _PARAMS_SECTIONS:
                raise ParseError(f"unknown section [{section}]", name, lineno)
            if section in seen:
                raise ParseError(f"section [{section}] repeated", name, lineno)
            seen.add(section)
            if section == "universe":
                universe_line = lineno
            continue
        if section == "universe":
            if tokens[0].lower() in ("reserve", "unknown"):
                reserve.extend(_label(t, name, lineno) for t in tokens[1:])
            else:
                label = _label(tokens[0], name, lineno)
                known.append(label)
                if len(tokens) > 1:
                    names[label] = " ".join(tokens[1:])
        elif section == "growth":
            growth.add(tokens, name, lineno)
        elif section == "susceptibility":
            eps.add(tokens, name, lineno)
        elif section == "interaction":
            rows.append((lineno, [_real(t, name, lineno, "matrix entry") for t in tokens]))
        else:
            raise ParseError(f"unknown section [{section}]", name, lineno)

    for required in ("universe", "growth", "susceptibility", "interaction"):
        if required not in seen:
            raise ParseError(f"missing section [{required}]", name)
    try:
        universe = Universe(tuple(known), tuple(reserve), names or None)
    except ValueError as exc:
        raise ParseError(str(exc), name, universe_line) from None
    n = len(known)
    if not n:
        raise ParseError("[universe] lists no known labels", name, universe_line)

    for table in (growth, eps):
        extra = [l for l in table.values if l not in known]
        if extra:
            raise ParseError(
                f"[{table.section}] names label {extra[0]} which is not a known universe label",
                name, table.lines[extra[0]],
            )
        missing = [l for l in known if l not in table.values]
        if missing:
            raise ParseError(
                f"[{table.section}] has {len(table.values)} entries for {n} known labels; missing {missing}",
                name,
            )
    if len(rows) != n:
        at = rows[-1][0] if rows else None
        raise ParseError(
            f"dimension mismatch: [interaction] has {len(rows)} rows but there are {n} growth rates",
            name, at,
        )
    for lineno, row in rows:
        if len(row) != n:
            raise ParseError(
                f"dimension mismatch: [interaction] row has {len(row)} columns, expected {n}",
                name, lineno,
            )
    interactions = {
        (p, q): rows[i][1][j] for i, p in enumerate(known) for j, q in enumerate(known)
    }
    return GlobalParams(universe, dict(growth.values), interactions, dict(eps.values))


def dump_params(params: GlobalParams) -> str:
    u = params.universe
    out = ["[universe]"]
    for label in u.known:
        nm = u.names.get(label) if u.names else None
        out.append(f"{label} {nm}" if nm else str(label))
    if u.unknown_reserve:
        out.append("reserve " + " ".join(str(l) for l in u.unknown_reserve))
    out.append("[growth]")
    out.extend(f"{l} {params.growth[l]!r}" for l in u.known)
    out.append("[susceptibility]")
    out.extend(f"{l} {params.susceptibility[l]!r}" for l in u.known)
    out.append("[interaction]")
    for p in u.known:
        out.append(" ".join(repr(params.interactions[(p, q)]) for q in u.known))
    return "\n".join(out) + "\n"


# -- scenarios -------------------------------------------------------------

_JUMP_KEYS = {
    "alpha": float,
    "beta": float,
    "xi_plus": float,
    "xi_minus": float,
    "enable_auto_appear": bool,
    "enable_auto_extinct": bool,
}


def load_scenario(source, universe: Universe | None = None) -> Scenario:
    """Parse a scenario document.

    Args:
        source: path, open text stream, or the document text itself.
        universe: when given, every label mentioned must belong to it.
    """
    text, name = _read_text(source)
    initial = _LabelValues("initial")
    payload = _LabelValues("appear_payload")
    pieces = []
    events: list[tuple[float, int, _LabelValues]] = []
    jump_kw: dict = {}
    run_kw: dict = {}
    names: dict[Label, str] = {}
    label_lines: list[tuple[Label, int]] = []

    for section, lineno, tokens in _sections(text, name):
        if not tokens:
            if section not in _SCENARIO_SECTIONS:
                raise ParseError(f"unknown section [{section}]", name, lineno)
            continue
        if section == "initial":
            initial.add(tokens, name, lineno)
            label_lines.append((int(tokens[0]), lineno))
        elif section == "appear_payload":
            payload.add(tokens, name, lineno)
            label_lines.append((int(tokens[0]), lineno))
        elif section == "antibiotic":
            if len(tokens) != 3:
                raise ParseError("[antibiotic] expects 't_start t_end level'", name, lineno)
            a, b, c = (_real(t, name, lineno) for t in tokens)
            if not a < b:
                raise ParseError(f"antibiotic interval [{a}, {b}) is empty", name, lineno)
            pieces.append((a, b, c))
        elif section == "therapy":
            if tokens[0].startswith("@"):
                rest = tokens[0][1:] or (tokens[1] if len(tokens) > 1 else "")
                if not rest or len(tokens) > (1 if tokens[0] != "@" else 2):
                    raise ParseError("expected '@ <time>'", name, lineno)
                t = _real(rest, name, lineno, "event time")
                if events and t <= events[-1][0]:
                    raise ParseError(
                        f"therapy events must be strictly increasing; {t} follows {events[-1][0]}",
                        name, lineno,
                    )
                events.append((t, lineno, _LabelValues(f"therapy @ {t:g}")))
            else:
                if not events:
                    raise ParseError("therapy entry before any '@ <time>' line", name, lineno)
                events[-1][2].add(tokens, name, lineno)
                label_lines.append((int(tokens[0]), lineno))
        elif section == "jumps":
            key, value = _key_value(tokens, name, lineno)
            if key not in _JUMP_KEYS:
                raise ParseError(f"unknown [jumps] key {key!r}", name, lineno)
            kind = _JUMP_KEYS[key]
            jump_kw[key] = _bool(value, name, lineno) if kind is bool else _real(value, name, lineno, key)
        elif section == "run":
            key, value = _key_value(tokens, name, lineno)
            if key in ("horizon", "dt"):
                run_kw[key] = (_real(value, name, lineno, key), lineno)
            elif key == "scheme":
                try:
                    run_kw[key] = (Scheme.parse(value), lineno)
                except ValueError as exc:
                    raise ParseError(str(exc), name, lineno) from None
            else:
                raise ParseError(f"unknown [run] key {key!r}", name, lineno)
        elif section == "names":
            names[_label(tokens[0], name, lineno)] = " ".join(tokens[1:])
        else:
            raise ParseError(f"unknown section [{section}]", name, lineno)

    if universe is not None:
        for label, lineno in label_lines:
            if label not in universe:
                raise ParseError(f"label {label} is not in the universe", name, lineno)

    horizon, hline = run_kw.get("horizon", (600.0, None))
    if not horizon >= 0 or math.isinf(horizon):
        raise ParseError(f"horizon must be a non-negative finite number, got {horizon}", name, hline)
    for t, lineno, _ in events:
        if t < 0 or t >= horizon:
            raise ParseError(f"therapy time {t} outside [0, horizon={horizon})", name, lineno)

    dt, dline = run_kw.get("dt", (0.01, None))
    scheme = run_kw.get("scheme", (Scheme.CRANK_NICOLSON_SEMI_IMPLICIT, None))[0]
    try:
        integrator = IntegratorSettings(scheme, dt)
    except ValueError as exc:
        raise ParseError(str(exc), name, dline) from None
    try:
        jump_config = JumpConfig(appear_payload=VBVector(payload.values), **jump_kw)
    except ValueError as exc:
        raise ParseError(str(exc), name) from None
    try:
        antibiotic = AntibioticSignal(tuple(pieces))
    except ValueError as exc:
        raise ParseError(str(exc), name) from None
    return Scenario(
        initial_state=VBVector(initial.values),
        antibiotic=antibiotic,
        therapy_events=tuple((t, VBVector(lv.values)) for t, _, lv in events),
        jump_config=jump_config,
        horizon=horizon,
        integrator=integrator,
        seed_label_names=names or None,
    )


def dump_scenario(scenario: Scenario) -> str:
    """Serialize a scenario so that ``load_scenario(dump_scenario(s)) == s``."""
    cfg = scenario.jump_config
    out = ["[initial]"]
    out.extend(f"{k} {v!r}" for k, v in scenario.initial_state.items())
    out.append("[antibiotic]")
    out.extend(f"{a!r} {b!r} {c!r}" for a, b, c in scenario.antibiotic.pieces)
    out.append("[therapy]")
    for t, v in scenario.therapy_events:
        out.append(f"@ {t!r}")
        out.extend(f"{k} {x!r}" for k, x in v.items())
    out.append("[jumps]")
    for key in _JUMP_KEYS:
        value = getattr(cfg, key)
        out.append(f"{key} = {str(value).lower() if isinstance(value, bool) else repr(value)}")
    if not cfg.appear_payload.is_empty():
        out.append("[appear_payload]")
        out.extend(f"{k} {x!r}" for k, x in cfg.appear_payload.items())
    out.append("[run]")
    out.append(f"horizon = {scenario.horizon!r}")
    out.append(f"dt = {scenario.integrator.dt!r}")
    out.append(f"scheme = {scenario.integrator.scheme.value}")
    if scenario.seed_label_names:
        out.append("[names]")
        out.extend(f"{k} {v}" for k, v in sorted(scenario.seed_label_names.items()))
    return "\n".join(out) + "\n"


# -- outputs ---------------------------------------------------------------

def fmt(x: float) -> str:
    """Shortest round-trip repr (at most 17 significant digits)."""
    return repr(float(x))


def _labelset(labels) -> str:
    return ";".join(str(l) for l in sorted(labels))


@contextlib.contextmanager
def _open_sink(sink):
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            yield fh
    else:
        yield sink


def write_timeseries(arc: HybridArc, sink) -> None:
    """One row per sample: ``t,k`` then one cell per universe label (empty = absent)."""
    columns = arc.universe.ordered()
    with _open_sink(sink) as fh:
        fh.write(",".join(["t", "k", *map(str, columns)]) + "\n")
        for seg in arc.segments:
            pos = {l: i for i, l in enumerate(seg.labels)}
            idx = [pos.get(l) for l in columns]
            prefix_k = str(seg.k)
            for t, row in zip(seg.times.tolist(), seg.values.tolist()):
                cells = [ABSENT if i is None else fmt(row[i]) for i in idx]
                fh.write(fmt(t) + "," + prefix_k + "," + ",".join(cells) + "\n")


def write_events(arc: HybridArc, sink) -> None:
    with _open_sink(sink) as fh:
        fh.write("t,k,kind,affected,pre_basis,post_basis\n")
        for j in arc.jumps:
            fh.write(
                f"{fmt(j.time.t)},{j.time.k},{j.kind.value},{_labelset(j.affected)},"
                f"{_labelset(j.pre_basis)},{_labelset(j.post_basis)}\n"
            )


def read_events(source) -> list[dict]:
    """Parse an event log written by :func:`write_events`."""
    text, _ = _read_text(source)
    lines = text.splitlines()
    out = []
    for line in lines[1:]:
        t, k, kind, affected, pre, post = line.split(",")
        split = lambda s: frozenset(int(x) for x in s.split(";") if x)
        out.append({
            "t": float(t), "k": int(k), "kind": kind,
            "affected": split(affected), "pre_basis": split(pre), "post_basis": split(post),
        })
    return out


def check_hybrid_time(events, timeseries=None) -> list[str]:
    """Check an emitted arc's hybrid time domain from its output files alone.

    The event log must number jumps ``0, 1, ...`` at nondecreasing times.
    When a time series is given, its ``(t, k)`` rows must be lexicographically
    nondecreasing, ``k`` must rise one step at a time, and every row of
    segment ``k`` must lie in ``[tau_k, tau_{k+1}]`` where ``tau_{k+1}`` is
    the time of jump ``k``. Returns the violations found (empty when valid).
    """
    rows = read_events(events)
    problems = []
    for i, r in enumerate(rows):
        if r["k"] != i:
            problems.append(f"event {i} has k={r['k']}")
    for i, (a, b) in enumerate(zip(rows, rows[1:])):
        if b["t"] < a["t"]:
            problems.append(f"event {i + 1} at t={b['t']!r} precedes event {i} at t={a['t']!r}")
    if timeseries is None:
        return problems

    text, _ = _read_text(timeseries)
    samples = [(float(t), int(k)) for t, k, *_ in (l.split(",") for l in text.splitlines()[1:] if l)]
    jump_t = [r["t"] for r in rows]
    prev = None
    for n, (t, k) in enumerate(samples):
        if prev is not None:
            if (t, k) < prev:
                problems.append(f"sample {n} ({t!r}, {k}) precedes ({prev[0]!r}, {prev[1]})")
            if k - prev[1] > 1:
                problems.append(f"sample {n} skips from k={prev[1]} to k={k}")
        if k > len(jump_t):
            problems.append(f"sample {n} has k={k} but only {len(jump_t)} jumps were logged")
        else:
            lo = jump_t[k - 1] if k > 0 else samples[0][0]
            hi = jump_t[k] if k < len(jump_t) else math.inf
            if not lo <= t <= hi:
                problems.append(f"sample {n} at t={t!r} lies outside [{lo!r}, {hi!r}] for k={k}")
        prev = (t, k)
    if samples and samples[-1][1] != len(jump_t):
        problems.append(f"last sample has k={samples[-1][1]} after {len(jump_t)} jumps")
    return problems


def emit_plot_data(arc: HybridArc, sink) -> None:
    """Write gnuplot-style blocks: one per species ever present, then events.

    Blocks are separated by two blank lines. Inside a species block a single
    blank line marks a span where the species is absent, so line plots break
    instead of dropping to zero. The event block lists ``t k label marker
    abundance kind`` with marker ``appear`` or ``disappear``; abundance is
    taken after an appearance and before a disappearance.
    """
    labels = arc.labels_ever_present()
    blocks = []
    for label in labels:
        lines = [f"# species {label} {arc.universe.name(label)}".rstrip(), "# t k abundance"]
        gap = False
        started = False
        for seg in arc.segments:
            if label not in seg.labels:
                gap = started
                continue
            if gap:
                lines.append("")
                gap = False
            col = seg.labels.index(label)
            for t, v in zip(seg.times.tolist(), seg.values[:, col].tolist()):
                lines.append(f"{fmt(t)} {seg.k} {fmt(v)}")
            started = True
        blocks.append("\n".join(lines))
    if arc.jumps:
        lines = ["# events", "# t k label marker abundance kind"]
        for j in arc.jumps:
            if j.kind.grows:
                marker, state = "appear", j.post_state
            else:
                marker, state = "disappear", j.pre_state
            for label in sorted(j.affected):
                lines.append(f"{fmt(j.time.t)} {j.time.k} {label} {marker} {fmt(state[label])} {j.kind.value}")
        blocks.append("\n".join(lines))
    with _open_sink(sink) as fh:
        if blocks:
            fh.write("\n\n\n".join(blocks) + "\n")


def read_plot_data(text: str) -> dict[str, list[list[list[str]]]]:
    """Split plot-data text into ``{block title: [span, ...]}`` where a span is a list of rows."""
    out: dict[str, list[list[list[str]]]] = {}
    for raw in text.split("\n\n\n"):
        raw = raw.strip("\n")
        if not raw:
            continue
        title = raw.splitlines()[0].lstrip("# ").strip()
        spans = []
        for chunk in raw.split("\n\n"):
            rows = [l.split() for l in chunk.splitlines() if l and not l.startswith("#")]
            if rows:
                spans.append(rows)
        out[title] = spans
    return out


def render(writer, arc: HybridArc) -> str:
    buf = io.StringIO()
    writer(arc, buf)
    return buf.getvalue()
