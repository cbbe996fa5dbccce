"""Command-line entry point.

Usage::

    varbasis simulate --params P --scenario S [--out DIR] [overrides]
    varbasis validate --params P --scenario S
    varbasis selfcheck [--trials N] [--seed N]

Exit codes: 0 success, 1 algebra law violation (selfcheck), 2 input or
configuration error, 3 numerical divergence. Command-line overrides take
precedence over the values in the scenario file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .algebra import VBVector
from .errors import ConfigError, DivergenceError, DomainError, ParseError, StepSizeError
from .flow import IntegratorSettings, Scheme
from .hybrid import ExoKind, HybridArc, classify_exogenous, run
from .scenario_io import (
    Scenario,
    emit_plot_data,
    load_params,
    load_scenario,
    write_events,
    write_timeseries,
)
from .selfcheck import check_laws

EXIT_OK = 0
EXIT_LAW = 1
EXIT_INPUT = 2
EXIT_DIVERGED = 3

TIMESERIES = "timeseries.csv"
EVENTS = "events.csv"
PLOT_DATA = "plot_data.dat"
REPORT = "report.json"

log = logging.getLogger("varbasis")

_LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging():
    """Attach one stderr handler to the package logger at the ``VARBASIS_LOG`` level."""
    name = os.environ.get("VARBASIS_LOG", "info").strip().lower()
    for h in [h for h in log.handlers if getattr(h, "_varbasis_cli", False)]:
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler._varbasis_cli = True
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(_LOG_LEVELS.get(name, logging.INFO))
    log.propagate = False
    if name not in _LOG_LEVELS:
        log.warning("unknown VARBASIS_LOG value %r; using info", name)


@dataclass
class RunReport:
    status: int
    jump_counts: dict[str, int]
    final_basis: list[int]
    final_state: dict[str, float]
    final_time: float
    wall_seconds: float
    message: str = ""

    @classmethod
    def from_arc(cls, arc: HybridArc, wall: float) -> "RunReport":
        final = arc.final_state
        return cls(
            status=EXIT_OK,
            jump_counts=arc.jump_counts(),
            final_basis=list(final.labels),
            final_state={str(k): v for k, v in final.items()},
            final_time=arc.segments[-1].t_end if arc.segments else 0.0,
            wall_seconds=wall,
        )

    def lines(self) -> list[str]:
        out = [f"status {self.status}"]
        if self.message:
            out.append(self.message)
        for kind, n in self.jump_counts.items():
            out.append(f"jumps {kind} {n}")
        if self.final_basis or self.final_state:
            out.append("final basis " + (";".join(map(str, self.final_basis)) or "(empty)"))
            for k, v in self.final_state.items():
                out.append(f"final x[{k}] {v!r}")
        out.append(f"final t {self.final_time!r}")
        out.append(f"wall {self.wall_seconds:.3f}s")
        return out


def apply_overrides(scenario: Scenario, *, beta=None, dt=None, scheme=None,
                    no_auto_extinct=False, horizon=None) -> Scenario:
    """Return ``scenario`` with command-line overrides applied.

    A shorter horizon drops therapy events at or after it.
    """
    cfg = scenario.jump_config
    if beta is not None:
        cfg = dataclasses.replace(cfg, beta=beta)
    if no_auto_extinct:
        cfg = dataclasses.replace(cfg, enable_auto_extinct=False)
    integ = scenario.integrator
    if dt is not None or scheme is not None:
        integ = IntegratorSettings(
            Scheme.parse(scheme) if scheme is not None else integ.scheme,
            dt if dt is not None else integ.dt,
        )
    events = scenario.therapy_events
    h = scenario.horizon
    if horizon is not None:
        h = horizon
        events = tuple((t, v) for t, v in events if t < h)
    return dataclasses.replace(
        scenario, jump_config=cfg, integrator=integ, horizon=h, therapy_events=events
    )


def _load_inputs(params_path, scenario_path):
    params = load_params(params_path)
    scenario = load_scenario(scenario_path, universe=params.universe)
    return params, scenario


def cmd_simulate(params_path, scenario_path, out_dir, overrides=None, stdout=None) -> RunReport:
    stdout = stdout or sys.stdout
    overrides = overrides or {}
    started = time.perf_counter()
    try:
        params, scenario = _load_inputs(params_path, scenario_path)
        scenario = apply_overrides(scenario, **overrides)
        missing = sorted(l for l in scenario.labels() if l not in params.growth)
        if missing:
            raise ConfigError(f"labels {missing} have no parameters")
        arc = run(params, scenario)
    except (ParseError, ConfigError, DomainError, ValueError) as exc:
        log.error("%s", exc)
        report = RunReport(EXIT_INPUT, {}, [], {}, 0.0, time.perf_counter() - started, f"error: {exc}")
        print("\n".join(report.lines()), file=stdout)
        return report
    except (DivergenceError, StepSizeError) as exc:
        last = getattr(exc, "last_valid", None)
        msg = f"diverged: {exc}"
        if last is not None:
            msg += f"; last valid hybrid time t={last.t!r} k={last.k}"
        log.error("%s", msg)
        report = RunReport(EXIT_DIVERGED, {}, [], {}, last.t if last else 0.0,
                           time.perf_counter() - started, msg)
        print("\n".join(report.lines()), file=stdout)
        return report

    problems = arc.validate()
    for p in problems:
        log.warning("arc check: %s", p)
    out = Path(out_dir)
    report = RunReport.from_arc(arc, time.perf_counter() - started)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_timeseries(arc, out / TIMESERIES)
        write_events(arc, out / EVENTS)
        emit_plot_data(arc, out / PLOT_DATA)
        (out / REPORT).write_text(json.dumps(dataclasses.asdict(report), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        log.error("cannot write outputs to %s: %s", out, exc)
        report = RunReport(EXIT_INPUT, {}, [], {}, 0.0, report.wall_seconds, f"error: cannot write to {out}: {exc}")
        print("\n".join(report.lines()), file=stdout)
        return report
    log.info("wrote %s, %s, %s, %s to %s", TIMESERIES, EVENTS, PLOT_DATA, REPORT, out)
    print("\n".join(report.lines()), file=stdout)
    return report


def validate_inputs(params_path, scenario_path) -> tuple[int, list[str]]:
    """Parse both documents and cross-check them without simulating."""
    try:
        params, scenario = _load_inputs(params_path, scenario_path)
    except (ParseError, ConfigError, DomainError, ValueError) as exc:
        return EXIT_INPUT, [f"error: {exc}"]
    errors, notes = [], []
    known = set(params.universe.known)
    for label in sorted(scenario.labels()):
        if label not in known:
            errors.append(f"error: label {label} is a reserved unknown label with no parameters")
    cfg = scenario.jump_config
    if cfg.enable_auto_appear and cfg.enable_auto_extinct and not cfg.beta < cfg.alpha:
        errors.append(f"error: beta={cfg.beta} must be below alpha={cfg.alpha}")
    if cfg.appear_payload.basis & scenario.initial_state.basis:
        errors.append("error: appearance payload overlaps the initial basis")

    # basis evolution under exogenous events alone
    basis = scenario.initial_state.basis
    for t, v in scenario.therapy_events:
        kind = classify_exogenous(VBVector((l, 0.0) for l in basis), v)
        if kind is ExoKind.NONE:
            notes.append(f"note: event at t={t:g} is empty and will be ignored")
            continue
        if kind is ExoKind.REMOVE:
            notes.append(f"ok: t={t:g} removal retains {sorted(v.basis)} of {sorted(basis)}")
            basis = v.basis
        else:
            notes.append(f"ok: t={t:g} addition of {sorted(v.basis - basis)}")
            basis = basis | v.basis
    if cfg.enable_auto_extinct:
        notes.append("note: autonomous extinction may shrink the basis; a planned removal naming an extinct label becomes an addition")
    status = EXIT_INPUT if errors else EXIT_OK
    return status, errors + notes + (["valid"] if not errors else [])


def selfcheck(trials, seed) -> tuple[int, list[str]]:
    report = check_laws(trials=trials, seed=seed)
    return (EXIT_OK if report.passed else EXIT_LAW), report.lines()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varbasis", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write outputs")
    sim.add_argument("--params", required=True)
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--out", default="out")
    sim.add_argument("--dt", type=float)
    sim.add_argument("--beta", type=float)
    sim.add_argument("--scheme", choices=[s.value for s in Scheme])
    sim.add_argument("--no-auto-extinct", action="store_true")
    sim.add_argument("--horizon", type=float)

    val = sub.add_parser("validate", help="parse and cross-check inputs")
    val.add_argument("--params", required=True)
    val.add_argument("--scenario", required=True)

    chk = sub.add_parser("selfcheck", help="randomized algebra law suite")
    chk.add_argument("--trials", type=int, default=1000)
    chk.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.command == "simulate":
        overrides = {
            "beta": args.beta,
            "dt": args.dt,
            "scheme": args.scheme,
            "no_auto_extinct": args.no_auto_extinct,
            "horizon": args.horizon,
        }
        return cmd_simulate(args.params, args.scenario, args.out, overrides).status
    if args.command == "validate":
        status, lines = validate_inputs(args.params, args.scenario)
    else:
        status, lines = selfcheck(args.trials, args.seed)
    print("\n".join(lines))
    return status


if __name__ == "__main__":
    sys.exit(main())
