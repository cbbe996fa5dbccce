import json

import numpy as np
import pytest

from varbasis import check_hybrid_time
from varbasis.cli import (
    EVENTS,
    PLOT_DATA,
    REPORT,
    TIMESERIES,
    apply_overrides,
    cmd_simulate,
    main,
    selfcheck,
    validate_inputs,
)
from varbasis.scenario_io import data_path, load_scenario

PARAMS = str(data_path("synthetic11.params"))
REFERENCE = str(data_path("reference.scenario"))


def read_series(path):
    lines = path.read_text().splitlines()
    rows = [l.split(",") for l in lines[1:]]
    return rows


@pytest.fixture(scope="module")
def reference_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ref")
    return cmd_simulate(PARAMS, REFERENCE, out, stdout=open("/dev/null", "w")), out


class TestSimulate:
    def test_reference_defaults(self, reference_run):
        report, out = reference_run
        assert report.status == 0
        counts = report.jump_counts
        assert counts["EXOGENOUS_ADD"] + counts["EXOGENOUS_REMOVE"] == 3
        assert counts["AUTO_EXTINCT"] == 1 and counts["AUTO_APPEAR"] == 0
        for name in (TIMESERIES, EVENTS, PLOT_DATA, REPORT):
            assert (out / name).is_file()
        saved = json.loads((out / REPORT).read_text())
        assert saved["jump_counts"] == counts
        assert saved["final_time"] == 600.0
        assert check_hybrid_time(out / EVENTS, out / TIMESERIES) == []

    def test_no_auto_extinct(self, tmp_path, capsys):
        assert main(["simulate", "--params", PARAMS, "--scenario", REFERENCE,
                     "--out", str(tmp_path), "--no-auto-extinct"]) == 0
        counts = json.loads((tmp_path / REPORT).read_text())["jump_counts"]
        assert counts["EXOGENOUS_ADD"] + counts["EXOGENOUS_REMOVE"] == 3
        assert counts["AUTO_EXTINCT"] == 0 and counts["AUTO_APPEAR"] == 0
        assert "jumps AUTO_EXTINCT 0" in capsys.readouterr().out

    def test_missing_scenario(self, tmp_path, capsys):
        status = main(["simulate", "--params", PARAMS, "--scenario", str(tmp_path / "none.scenario"),
                       "--out", str(tmp_path)])
        assert status == 2
        assert "cannot read" in capsys.readouterr().out

    def test_parse_error_reports_location(self, tmp_path, capsys):
        bad = tmp_path / "bad.scenario"
        bad.write_text("[initial]\n1 0.5\n[run]\nhorizon = soon\n")
        assert main(["simulate", "--params", PARAMS, "--scenario", str(bad), "--out", str(tmp_path)]) == 2
        assert f"{bad}:4:" in capsys.readouterr().out

    def test_divergence(self, tmp_path, capsys):
        params = tmp_path / "boom.params"
        params.write_text("[universe]\n1\n[growth]\n1 1\n[susceptibility]\n1 0\n[interaction]\n1\n")
        scenario = tmp_path / "boom.scenario"
        scenario.write_text("[initial]\n1 1\n[run]\nhorizon = 10\ndt = 0.01\nscheme = rk4\n")
        status = main(["simulate", "--params", str(params), "--scenario", str(scenario), "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert status == 3
        assert "last valid hybrid time t=" in out
        # blow-up of x' = x + x^2 from 1 happens at t = ln 2
        t_last = float(out.split("last valid hybrid time t=")[1].split()[0])
        assert 0.5 < t_last < 0.75

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        report = cmd_simulate(PARAMS, REFERENCE, blocker / "sub", {"horizon": 1.0}, stdout=open("/dev/null", "w"))
        assert report.status == 2 and "cannot write" in report.message

    def test_overrides_beat_file(self):
        s = load_scenario(REFERENCE)
        o = apply_overrides(s, beta=1e-3, dt=0.02, scheme="rk4", no_auto_extinct=True, horizon=300.0)
        assert o.jump_config.beta == 1e-3 and not o.jump_config.enable_auto_extinct
        assert o.integrator.dt == 0.02 and o.integrator.scheme.value == "rk4"
        assert o.horizon == 300.0 and [t for t, _ in o.therapy_events] == [190.0]
        assert apply_overrides(s) == s

    def test_bad_flag_value(self, capsys):
        assert main(["simulate", "--params", PARAMS, "--scenario", REFERENCE, "--scheme", "leapfrog"]) == 2

    def test_dt_halving_within_order_bound(self, tmp_path):
        # before the first event the flow is smooth; CN differences shrink by about 2 per halving
        finals = []
        for dt in ("0.04", "0.02", "0.01"):
            out = tmp_path / dt
            assert main(["simulate", "--params", PARAMS, "--scenario", REFERENCE, "--out", str(out),
                         "--dt", dt, "--horizon", "10", "--no-auto-extinct"]) == 0
            last = read_series(out / TIMESERIES)[-1]
            assert float(last[0]) == 10.0
            finals.append(np.array([float(c) for c in last[2:] if c]))
        d1 = np.max(np.abs(finals[0] - finals[1]))
        d2 = np.max(np.abs(finals[1] - finals[2]))
        assert d1 / d2 == pytest.approx(2.0, abs=0.2)
        # the difference itself is first order: a generous constant times dt
        assert d2 < 1.0 * 0.02


class TestValidate:
    def test_reference(self, capsys):
        assert main(["validate", "--params", PARAMS, "--scenario", REFERENCE]) == 0
        out = capsys.readouterr().out
        assert "valid" in out.splitlines()[-1]
        assert "t=560 removal retains [1, 2, 4]" in out

    def test_unknown_label(self, tmp_path):
        s = tmp_path / "s.scenario"
        s.write_text("[initial]\n1 0.7\n[therapy]\n@ 560\n12 0.1\n")
        status, lines = validate_inputs(PARAMS, s)
        assert status == 2
        assert ":5:" in lines[0] and "12" in lines[0]

    def test_reserved_label(self, tmp_path):
        p = tmp_path / "p.params"
        p.write_text("[universe]\n1\nreserve 2\n[growth]\n1 1\n[susceptibility]\n1 0\n[interaction]\n-1\n")
        s = tmp_path / "s.scenario"
        s.write_text("[initial]\n1 0.7\n[therapy]\n@ 5\n2 0.1\n")
        status, lines = validate_inputs(p, s)
        assert status == 2 and "reserved" in lines[0]

    @pytest.mark.parametrize("beta, alpha", [("2", "1"), ("1", "1")])
    def test_beta_not_below_alpha(self, tmp_path, beta, alpha):
        s = tmp_path / "s.scenario"
        s.write_text(f"[initial]\n1 0.7\n[jumps]\nbeta = {beta}\nalpha = {alpha}\n"
                     "enable_auto_appear = true\nenable_auto_extinct = true\n")
        assert main(["validate", "--params", PARAMS, "--scenario", str(s)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["validate", "--params", str(tmp_path / "x"), "--scenario", REFERENCE]) == 2


class TestSelfcheck:
    def test_passes(self, capsys):
        assert main(["selfcheck", "--trials", "1000", "--seed", "42"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and "commutativity" in out

    def test_reproducible(self):
        assert selfcheck(200, 7) == selfcheck(200, 7)

    def test_reports_every_law(self):
        status, lines = selfcheck(50, 1)
        assert status == 0
        assert sum(l.startswith("PASS") for l in lines) >= 10


class TestLogging:
    def test_quiet(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("VARBASIS_LOG", "quiet")
        main(["simulate", "--params", PARAMS, "--scenario", REFERENCE, "--out", str(tmp_path), "--horizon", "1"])
        assert capsys.readouterr().err == ""

    def test_info(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("VARBASIS_LOG", "info")
        main(["simulate", "--params", PARAMS, "--scenario", REFERENCE, "--out", str(tmp_path), "--horizon", "1"])
        err = capsys.readouterr().err
        assert "INFO" in err and "DEBUG" not in err

    def test_debug(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("VARBASIS_LOG", "debug")
        main(["simulate", "--params", PARAMS, "--scenario", REFERENCE, "--out", str(tmp_path), "--horizon", "200"])
        assert "DEBUG varbasis.hybrid: t=190" in capsys.readouterr().err

    def test_quiet_still_reports_errors(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("VARBASIS_LOG", "quiet")
        main(["simulate", "--params", PARAMS, "--scenario", str(tmp_path / "nope"), "--out", str(tmp_path)])
        assert "ERROR" in capsys.readouterr().err
