"""Continuous gLV dynamics restricted to the current basis.

The vector field is ``x * (rho + W @ x + u(t) * eps)`` on the labels of the
current basis. Three fixed-step schemes are available: explicit Euler,
classical RK4 and a diagonal semi-implicit Crank-Nicolson step.

The array kernels (``*_array``) are what the hybrid loop calls in its inner
loop; the VBVector-level wrappers check bases and are the public surface.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .algebra import Label, Universe, VBVector
from .errors import ConfigError, ContractError, DivergenceError, StepSizeError

CN_SINGULAR_TOL = 1e-12


class Scheme(str, enum.Enum):
    EXPLICIT_EULER = "euler"
    EXPLICIT_RK4 = "rk4"
    CRANK_NICOLSON_SEMI_IMPLICIT = "cn"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "euler": cls.EXPLICIT_EULER,
            "explicit_euler": cls.EXPLICIT_EULER,
            "rk4": cls.EXPLICIT_RK4,
            "explicit_rk4": cls.EXPLICIT_RK4,
            "cn": cls.CRANK_NICOLSON_SEMI_IMPLICIT,
            "crank_nicolson": cls.CRANK_NICOLSON_SEMI_IMPLICIT,
            "crank_nicolson_semi_implicit": cls.CRANK_NICOLSON_SEMI_IMPLICIT,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown scheme {value!r}; expected euler, rk4 or cn") from None


@dataclass(frozen=True)
class IntegratorSettings:
    scheme: Scheme = Scheme.CRANK_NICOLSON_SEMI_IMPLICIT
    dt: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive and finite, got {self.dt}")


@dataclass(frozen=True)
class AntibioticSignal:
    """Piecewise-constant input: ``level`` on each half-open ``[start, end)``, 0 elsewhere."""

    pieces: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        pieces = tuple(sorted((float(a), float(b), float(c)) for a, b, c in self.pieces))
        for a, b, _ in pieces:
            if not a < b:
                raise ConfigError(f"antibiotic interval [{a}, {b}) is empty")
        for (_, b0, _), (a1, _, _) in zip(pieces, pieces[1:]):
            if a1 < b0:
                raise ConfigError("antibiotic intervals overlap")
        object.__setattr__(self, "pieces", pieces)

    def __call__(self, t: float) -> float:
        for a, b, level in self.pieces:
            if a <= t < b:
                return level
        return 0.0

    def left(self, t: float) -> float:
        """Left limit ``u(t-)``, used for the end-of-step RK4 stage."""
        for a, b, level in self.pieces:
            if a < t <= b:
                return level
        return 0.0


NO_ANTIBIOTIC = AntibioticSignal()


@dataclass(frozen=True)
class GlobalParams:
    """Universe-indexed growth rates, interaction matrix and susceptibilities.

    ``interactions[(p, q)]`` is the effect of species q on species p. Missing
    interaction pairs among known labels are a configuration error; use 0.0
    explicitly for no interaction.
    """

    universe: Universe
    growth: Mapping[Label, float]
    interactions: Mapping[tuple[Label, Label], float]
    susceptibility: Mapping[Label, float] = field(default_factory=dict)

    def __post_init__(self):
        known = self.universe.known
        for name, table in (("growth", self.growth), ("susceptibility", self.susceptibility)):
            missing = [i for i in known if i not in table]
            if missing:
                raise ConfigError(f"{name} missing for labels {missing}")
        for p in known:
            for q in known:
                if (p, q) not in self.interactions:
                    raise ConfigError(f"interaction ({p}, {q}) missing")

    @classmethod
    def from_dense(cls, labels, rho, w, eps=None, universe: Universe | None = None) -> "GlobalParams":
        labels = tuple(int(i) for i in labels)
        rho = np.asarray(rho, dtype=float)
        w = np.asarray(w, dtype=float)
        eps = np.zeros(len(labels)) if eps is None else np.asarray(eps, dtype=float)
        n = len(labels)
        if rho.shape != (n,) or eps.shape != (n,) or w.shape != (n, n):
            raise ConfigError("dense parameter shapes do not match the label count")
        if universe is None:
            universe = Universe(labels)
        return cls(
            universe=universe,
            growth={l: float(r) for l, r in zip(labels, rho)},
            interactions={(p, q): float(w[i, j]) for i, p in enumerate(labels) for j, q in enumerate(labels)},
            susceptibility={l: float(e) for l, e in zip(labels, eps)},
        )


@dataclass(frozen=True)
class RestrictedParams:
    """Dense parameters over one basis, in ascending label order."""

    labels: tuple[Label, ...]
    rho: np.ndarray
    w: np.ndarray
    eps: np.ndarray

    @property
    def basis(self) -> frozenset[Label]:
        return frozenset(self.labels)


def restrict(params: GlobalParams, basis) -> RestrictedParams:
    labels = tuple(sorted(basis))
    for p in labels:
        if p not in params.growth:
            raise ConfigError(f"no growth rate for label {p}")
        if p not in params.susceptibility:
            raise ConfigError(f"no susceptibility for label {p}")
    n = len(labels)
    w = np.empty((n, n))
    for i, p in enumerate(labels):
        for j, q in enumerate(labels):
            try:
                w[i, j] = params.interactions[(p, q)]
            except KeyError:
                raise ConfigError(f"no interaction entry for labels ({p}, {q})") from None
    rho = np.array([params.growth[p] for p in labels], dtype=float)
    eps = np.array([params.susceptibility[p] for p in labels], dtype=float)
    return RestrictedParams(labels, rho, w, eps)


# -- array kernels ---------------------------------------------------------

def rhs_array(x: np.ndarray, rp: RestrictedParams, u: float) -> np.ndarray:
    return x * (rp.rho + rp.w @ x + u * rp.eps)


def euler_array(x, rp, u_signal, t, dt):
    return x + dt * rhs_array(x, rp, u_signal(t))


def rk4_array(x, rp, u_signal, t, dt):
    u0 = u_signal(t)
    um = u_signal(t + 0.5 * dt)
    u1 = getattr(u_signal, "left", u_signal)(t + dt)
    k1 = rhs_array(x, rp, u0)
    k2 = rhs_array(x + 0.5 * dt * k1, rp, um)
    k3 = rhs_array(x + 0.5 * dt * k2, rp, um)
    k4 = rhs_array(x + dt * k3, rp, u1)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def cn_array(x, rp, u_signal, t, dt):
    r = rp.rho + rp.w @ x + u_signal(t) * rp.eps
    half = 0.5 * dt * r
    denom = 1.0 - half
    bad = np.abs(denom) < CN_SINGULAR_TOL
    if bad.any():
        idx = [rp.labels[i] for i in np.flatnonzero(bad)]
        raise StepSizeError(
            f"semi-implicit step singular for labels {idx} at t={t}; reduce dt (currently {dt})"
        )
    return x * (1.0 + half) / denom


KERNELS = {
    Scheme.EXPLICIT_EULER: euler_array,
    Scheme.EXPLICIT_RK4: rk4_array,
    Scheme.CRANK_NICOLSON_SEMI_IMPLICIT: cn_array,
}


def step_array(x, rp, u_signal, t, dt, scheme) -> np.ndarray:
    return KERNELS[Scheme.parse(scheme)](x, rp, u_signal, t, dt)


# -- VBVector-level API ----------------------------------------------------

def _dense(x: VBVector, rp: RestrictedParams) -> np.ndarray:
    if x.basis != rp.basis:
        raise ContractError(
            f"state basis {sorted(x.basis)} does not match parameter basis {sorted(rp.basis)}"
        )
    return np.array(x.values, dtype=float)


def _as_signal(u):
    if callable(u):
        return u
    level = float(u)
    return lambda t: level


def _finish(x_new: np.ndarray, rp: RestrictedParams, t: float) -> VBVector:
    if not np.all(np.isfinite(x_new)):
        raise DivergenceError(f"non-finite coordinate after step from t={t}")
    return VBVector.from_arrays(rp.labels, x_new.tolist())


def flow_rhs(x: VBVector, rp: RestrictedParams, u: float) -> VBVector:
    """Evaluate ``x * (rho + W x + u eps)`` on x's basis."""
    return VBVector.from_arrays(rp.labels, rhs_array(_dense(x, rp), rp, float(u)).tolist())


def step_explicit(x: VBVector, rp: RestrictedParams, u_signal, t: float, dt: float,
                  scheme=Scheme.EXPLICIT_EULER) -> VBVector:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.CRANK_NICOLSON_SEMI_IMPLICIT:
        raise ContractError("step_explicit takes euler or rk4")
    xa = _dense(x, rp)
    with np.errstate(over="ignore", invalid="ignore"):
        out = KERNELS[scheme](xa, rp, _as_signal(u_signal), t, dt)
    return _finish(out, rp, t)


def step_crank_nicolson(x: VBVector, rp: RestrictedParams, u_signal, t: float, dt: float) -> VBVector:
    """Semi-implicit step with the bracket frozen at the start of the step.

    Per coordinate: ``x_new = x * (1 + dt*r/2) / (1 - dt*r/2)`` where
    ``r = rho + W x + u(t) eps``. Zero coordinates stay exactly zero.
    """
    xa = _dense(x, rp)
    with np.errstate(over="ignore", invalid="ignore"):
        out = cn_array(xa, rp, _as_signal(u_signal), t, dt)
    return _finish(out, rp, t)


def step(x: VBVector, rp: RestrictedParams, u_signal, t: float, dt: float, scheme) -> VBVector:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.CRANK_NICOLSON_SEMI_IMPLICIT:
        return step_crank_nicolson(x, rp, u_signal, t, dt)
    return step_explicit(x, rp, u_signal, t, dt, scheme)
