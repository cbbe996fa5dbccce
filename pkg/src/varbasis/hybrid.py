"""Hybrid flow/jump execution of gLV dynamics on a variable basis.

Between jumps the coordinates flow under :mod:`varbasis.flow` with a fixed
basis. Jumps change the basis (or, for a pure injection, only the values):

* exogenous therapy events ``v`` are applied with ``union_add`` when they name
  a new species and with ``inter_add`` when their basis is strictly inside the
  current one (the retained species);
* autonomous extinction removes every present species whose abundance falls
  in ``(0, beta]``;
* autonomous appearance fires when a coordinate reaches ``alpha``; each label
  may trigger it at most once per run, which keeps the basis from growing
  without bound while the coordinate stays above the threshold.

Within one hybrid instant the order is: scheduled exogenous events, then
extinction, then appearance. Each applied jump increments the counter k.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, NamedTuple

import numpy as np

from .algebra import (
    ZERO,
    Label,
    Universe,
    VBVector,
    inter_add,
    scale,
    union_add,
    unit_from,
    unit_on,
)
from .errors import ConfigError, ContractError, DivergenceError
from .flow import KERNELS, GlobalParams, restrict

if TYPE_CHECKING:
    from .scenario_io import Scenario

log = logging.getLogger(__name__)


class HybridTime(NamedTuple):
    """Ordinary time ``t`` (days) and jump counter ``k``; tuples order lexicographically."""

    t: float
    k: int


class ExoKind(enum.Enum):
    ADD = "ADD"
    REMOVE = "REMOVE"
    NONE = "NONE"


class JumpKind(str, enum.Enum):
    EXOGENOUS_ADD = "EXOGENOUS_ADD"
    EXOGENOUS_REMOVE = "EXOGENOUS_REMOVE"
    AUTO_APPEAR = "AUTO_APPEAR"
    AUTO_EXTINCT = "AUTO_EXTINCT"

    @property
    def grows(self) -> bool:
        return self in (JumpKind.EXOGENOUS_ADD, JumpKind.AUTO_APPEAR)


@dataclass(frozen=True)
class JumpRecord:
    time: HybridTime
    kind: JumpKind
    pre_state: VBVector
    post_state: VBVector
    affected: frozenset[Label]
    triggers: frozenset[Label] = frozenset()

    @property
    def pre_basis(self) -> frozenset[Label]:
        return self.pre_state.basis

    @property
    def post_basis(self) -> frozenset[Label]:
        return self.post_state.basis

    def basis_consistent(self) -> bool:
        """Check the kind's basis-inclusion rule.

        Growing kinds need ``post ⊋ pre``, except an exogenous injection on
        exactly the current basis, which keeps the basis unchanged.
        """
        pre, post = self.pre_basis, self.post_basis
        if self.kind is JumpKind.EXOGENOUS_ADD and pre == post:
            return not self.affected
        if self.kind.grows:
            return post > pre
        return post < pre


@dataclass(frozen=True)
class JumpConfig:
    alpha: float = math.inf
    beta: float = 1e-6
    xi_plus: float = 0.01
    xi_minus: float = 0.0
    enable_auto_appear: bool = False
    enable_auto_extinct: bool = True
    appear_payload: VBVector = ZERO

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise ConfigError(f"beta must be > 0, got {self.beta}")
        if self.enable_auto_appear and self.enable_auto_extinct and not self.beta < self.alpha:
            raise ConfigError(
                f"beta ({self.beta}) must be below alpha ({self.alpha}) when both autonomous jump sets are enabled"
            )
        if self.appear_payload is None:
            object.__setattr__(self, "appear_payload", ZERO)


@dataclass
class ZenoGuard:
    """Fire-once bookkeeping for autonomous jumps."""

    fired_appear: set[Label] = field(default_factory=set)
    fired_extinct_bases: set[tuple[int, frozenset]] = field(default_factory=set)


# -- exogenous jumps -------------------------------------------------------

def classify_exogenous(x: VBVector, v: VBVector) -> ExoKind:
    """Membership of ``(x, v)`` in the exogenous add/remove jump sets.

    ``v.basis == x.basis`` counts as ADD: a pure abundance injection that
    leaves the basis unchanged.
    """
    if v.is_empty():
        return ExoKind.NONE
    if v.basis < x.basis:
        return ExoKind.REMOVE
    return ExoKind.ADD


def apply_exogenous(x: VBVector, v: VBVector, time: HybridTime | None = None):
    kind = classify_exogenous(x, v)
    if kind is ExoKind.NONE:
        raise ContractError("exogenous jump with an empty-basis input is not a jump")
    if time is None:
        time = HybridTime(0.0, 0)
    if kind is ExoKind.ADD:
        post = union_add(x, v)
        rec = JumpRecord(time, JumpKind.EXOGENOUS_ADD, x, post, frozenset(v.basis - x.basis))
    else:
        post = inter_add(x, v)
        rec = JumpRecord(time, JumpKind.EXOGENOUS_REMOVE, x, post, frozenset(x.basis - v.basis))
    return post, rec


# -- autonomous jumps ------------------------------------------------------

def detect_auto_extinct(x: VBVector, cfg: JumpConfig) -> frozenset[Label]:
    """Labels with ``0 < x_j <= beta``; exact zeros are not extinct."""
    return frozenset(k for k, v in x.items() if 0.0 < v <= cfg.beta)


def apply_auto_extinct(x: VBVector, doomed, cfg: JumpConfig, time: HybridTime | None = None):
    """Drop ``doomed`` and shift every retained coordinate by ``xi_minus``.

    Returns ``(x, None)`` when nothing is doomed. Dooming the whole basis
    yields the empty-basis vector.
    """
    doomed = frozenset(doomed)
    if not doomed:
        return x, None
    if not doomed <= x.basis:
        raise ContractError(f"labels {sorted(doomed - x.basis)} are not present")
    keep = x.basis - doomed
    post = inter_add(x, scale(cfg.xi_minus, unit_on(keep)))
    if time is None:
        time = HybridTime(0.0, 0)
    return post, JumpRecord(time, JumpKind.AUTO_EXTINCT, x, post, doomed)


def detect_auto_appear(x: VBVector, cfg: JumpConfig, guard: ZenoGuard) -> frozenset[Label]:
    """Labels at or above ``alpha`` that have not triggered an appearance before."""
    return frozenset(k for k, v in x.items() if v >= cfg.alpha and k not in guard.fired_appear)


def apply_auto_appear(x: VBVector, cfg: JumpConfig, guard: ZenoGuard,
                      time: HybridTime | None = None, triggers=None):
    if triggers is None:
        triggers = detect_auto_appear(x, cfg, guard)
    triggers = frozenset(triggers)
    payload = cfg.appear_payload
    overlap = payload.basis & x.basis
    if overlap:
        raise ConfigError(
            f"appearance payload labels {sorted(overlap)} are already present; the payload basis must be disjoint from the state basis"
        )
    g = union_add(scale(cfg.xi_plus, unit_from(x)), payload)
    post = union_add(x, g)
    guard.fired_appear |= triggers
    if time is None:
        time = HybridTime(0.0, 0)
    return post, JumpRecord(time, JumpKind.AUTO_APPEAR, x, post, frozenset(payload.basis), triggers)


# -- the solution object ---------------------------------------------------

@dataclass
class Segment:
    """One flow interval at fixed basis: sample times and a (samples x |basis|) array."""

    k: int
    labels: tuple[Label, ...]
    times: np.ndarray
    values: np.ndarray

    @property
    def basis(self) -> frozenset[Label]:
        return frozenset(self.labels)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> VBVector:
        return VBVector.from_arrays(self.labels, self.values[i].tolist())

    def states(self) -> Iterator[VBVector]:
        for i in range(len(self.times)):
            yield self.state(i)

    def series(self, label: Label) -> np.ndarray:
        return self.values[:, self.labels.index(label)]


@dataclass
class HybridArc:
    universe: Universe
    segments: list[Segment] = field(default_factory=list)
    jumps: list[JumpRecord] = field(default_factory=list)
    horizon: float = 0.0

    @property
    def final_state(self) -> VBVector:
        if not self.segments:
            return ZERO
        return self.segments[-1].state(-1)

    def jump_counts(self) -> dict[str, int]:
        counts = {kind.value: 0 for kind in JumpKind}
        for j in self.jumps:
            counts[j.kind.value] += 1
        return counts

    def labels_ever_present(self) -> tuple[Label, ...]:
        seen: set[Label] = set()
        for seg in self.segments:
            seen.update(seg.labels)
        return tuple(sorted(seen))

    def n_samples(self) -> int:
        return sum(len(s) for s in self.segments)

    def hybrid_times(self) -> list[HybridTime]:
        """``(tau_k, k)`` for every segment start."""
        return [HybridTime(s.t_start, s.k) for s in self.segments]

    def validate(self) -> list[str]:
        """Return a list of structural violations (empty when the arc is well formed)."""
        problems = []
        if len(self.segments) != len(self.jumps) + 1:
            problems.append(f"{len(self.segments)} segments for {len(self.jumps)} jumps")
        for i, seg in enumerate(self.segments):
            if seg.k != i:
                problems.append(f"segment {i} has k={seg.k}")
            if len(seg.times) and np.any(np.diff(seg.times) < 0):
                problems.append(f"segment {i} times decrease")
            if seg.values.shape != (len(seg.times), len(seg.labels)):
                problems.append(f"segment {i} value array has shape {seg.values.shape}")
        for i, (a, b) in enumerate(zip(self.segments, self.segments[1:])):
            if b.t_start != a.t_end:
                problems.append(f"segments {i} and {i + 1} are not contiguous")
            jump = self.jumps[i] if i < len(self.jumps) else None
            if jump is None:
                continue
            if jump.time != HybridTime(a.t_end, a.k):
                problems.append(f"jump {i} at {jump.time} does not close segment {i}")
            if frozenset(a.labels) != jump.pre_basis or frozenset(b.labels) != jump.post_basis:
                problems.append(f"jump {i} bases disagree with adjacent segments")
            if not jump.basis_consistent():
                problems.append(f"jump {i} ({jump.kind.value}) violates its basis rule")
        return problems


# -- the run loop ----------------------------------------------------------

def _grid_digits(dt: float) -> int:
    return max(9, int(math.ceil(-math.log10(dt))) + 6)


def _schedule(events, dt: float, n_steps: int) -> dict[int, list[VBVector]]:
    by_step: dict[int, list[VBVector]] = {}
    for t, v in events:
        n = min(max(int(round(t / dt)), 0), n_steps)
        by_step.setdefault(n, []).append(v)
    return by_step


class _Recorder:
    """Accumulates samples of the current segment and closes it at each jump."""

    def __init__(self, universe, horizon):
        self.arc = HybridArc(universe=universe, horizon=horizon)
        self.k = 0
        self._labels: tuple[Label, ...] = ()
        self._times: list[float] = []
        self._rows: list[np.ndarray] = []

    def open(self, state: VBVector, t: float):
        self._labels = state.labels
        self._times = [t]
        self._rows = [np.array(state.values, dtype=float)]

    def sample(self, t: float, xa: np.ndarray):
        self._times.append(t)
        self._rows.append(xa)

    def close(self):
        n = len(self._labels)
        values = np.vstack(self._rows) if n else np.zeros((len(self._times), 0))
        self.arc.segments.append(Segment(self.k, self._labels, np.array(self._times), values))

    def jump(self, record: JumpRecord):
        self.close()
        self.arc.jumps.append(record)
        self.k += 1
        self.open(record.post_state, record.time.t)


def run(params: GlobalParams, scenario: "Scenario") -> HybridArc:
    """Integrate the scenario over ``[0, horizon]`` and return the hybrid arc."""
    universe = params.universe
    cfg: JumpConfig = scenario.jump_config
    settings = scenario.integrator
    horizon = float(scenario.horizon)
    if not horizon >= 0:
        raise ConfigError(f"horizon must be non-negative, got {horizon}")
    universe.check(scenario.initial_state.basis)
    for _, v in scenario.therapy_events:
        universe.check(v.basis)
    universe.check(cfg.appear_payload.basis)

    dt = settings.dt
    kernel = KERNELS[settings.scheme]
    n_steps = 0 if horizon == 0 else max(1, int(math.ceil(horizon / dt - 1e-9)))
    digits = _grid_digits(dt)

    def grid(n: int) -> float:
        return min(round(n * dt, digits), horizon)

    schedule = _schedule(scenario.therapy_events, dt, n_steps)
    u_signal = scenario.antibiotic
    guard = ZenoGuard()
    rec = _Recorder(universe, horizon)
    restricted = {}

    def params_for(basis):
        if basis not in restricted:
            restricted[basis] = restrict(params, basis)
        return restricted[basis]

    x = scenario.initial_state
    rec.open(x, 0.0)

    def instant(n: int, x: VBVector) -> VBVector:
        t = grid(n)
        for v in schedule.get(n, ()):
            if classify_exogenous(x, v) is ExoKind.NONE:
                continue
            x, record = apply_exogenous(x, v, HybridTime(t, rec.k))
            log.debug("t=%g k=%d %s %s", t, rec.k, record.kind.value, sorted(record.affected))
            rec.jump(record)
        if cfg.enable_auto_extinct:
            while x.basis:
                doomed = detect_auto_extinct(x, cfg)
                key = (n, x.basis)
                if not doomed or key in guard.fired_extinct_bases:
                    break
                guard.fired_extinct_bases.add(key)
                x, record = apply_auto_extinct(x, doomed, cfg, HybridTime(t, rec.k))
                log.debug("t=%g k=%d AUTO_EXTINCT %s", t, rec.k, sorted(doomed))
                rec.jump(record)
        if cfg.enable_auto_appear and x.basis:
            triggers = detect_auto_appear(x, cfg, guard)
            if triggers:
                x, record = apply_auto_appear(x, cfg, guard, HybridTime(t, rec.k), triggers)
                log.debug("t=%g k=%d AUTO_APPEAR triggers=%s", t, rec.k, sorted(triggers))
                rec.jump(record)
        return x

    x = instant(0, x)
    basis = x.basis
    rp = params_for(basis)
    xa = np.array(x.values, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_steps + 1):
            if not basis:
                break
            t0 = grid(n - 1)
            t1 = grid(n)
            xa = kernel(xa, rp, u_signal, t0, t1 - t0)
            if not np.all(np.isfinite(xa)):
                last = HybridTime(t0, rec.k)
                raise DivergenceError(f"non-finite coordinate after step from t={t0} (k={rec.k})", last)
            rec.sample(t1, xa)
            if n in schedule or cfg.enable_auto_extinct or cfg.enable_auto_appear:
                if _may_jump(n, xa, schedule, cfg, guard, rp.labels):
                    x = instant(n, VBVector.from_arrays(rp.labels, xa.tolist()))
                    basis = x.basis
                    rp = params_for(basis)
                    xa = np.array(x.values, dtype=float)
    if not basis and rec._times[-1] < horizon:
        rec.sample(horizon, np.zeros(0))
    rec.close()
    return rec.arc


def _may_jump(n, xa, schedule, cfg, guard, labels) -> bool:
    if n in schedule:
        return True
    if cfg.enable_auto_extinct and np.any((xa > 0.0) & (xa <= cfg.beta)):
        return True
    if cfg.enable_auto_appear:
        hits = xa >= cfg.alpha
        if np.any(hits):
            return any(labels[i] not in guard.fired_appear for i in np.flatnonzero(hits))
    return False
