import json
import math
from dataclasses import replace

import jsonschema
import numpy as np
import pytest

from vvlab.audit import AUDIT_JSON_SCHEMA
from vvlab.cli import main
from vvlab.errors import EmptyBand, InsufficientPoints
from vvlab.flow_solver import SolverConfig, solve
from vvlab.harness import (
    ExperimentConfig,
    SweepRecord,
    SweepResult,
    emit_report,
    euler_reference,
    fit_rate,
    generate_initial_data,
    load_config,
    parse_initial_data,
    read_sweep_csv,
    run_audit,
    run_sweep,
)
from vvlab.spectral import sup_norm

SMALL = dict(N=32, T=0.25, dt=0.01, n_values=(1, 2, 3, 4), seed=3)


@pytest.fixture(scope="module")
def small_sweep():
    config = ExperimentConfig(**SMALL)
    sweep = run_sweep(config)
    return config, sweep, fit_rate(sweep)


def write_cfg(path, **over):
    values = dict(SMALL, **over)
    lines = []
    for k, v in values.items():
        if isinstance(v, tuple):
            v = ",".join(map(str, v))
        lines.append(f"{k} = {v}")
    path.write_text("# test config\n" + "\n".join(lines) + "\n")
    return path


class TestConfig:
    def test_load(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path / "a.cfg", box_length="2pi", ceiling_cz=5.0,
                                    initial_data="taylor_green"))
        assert cfg.N == 32 and cfg.n_values == (1, 2, 3, 4)
        assert cfg.box_length == 2 * math.pi
        assert cfg.ceilings["cz"] == 5.0 and cfg.ceilings["gauss"] == 2.0
        assert cfg.initial_data == "taylor_green"

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "b.cfg"
        path.write_text("bogus = 1\n")
        with pytest.raises(ValueError, match="unknown key"):
            load_config(path)

    @pytest.mark.parametrize("over", [dict(n_values=()), dict(n_values=(3, 2)), dict(alpha=1.0),
                                      dict(T=3.0), dict(initial_data="gaussian")])
    def test_validation(self, over):
        with pytest.raises(ValueError):
            ExperimentConfig(**dict(SMALL, **over))

    def test_parse_initial_data(self):
        assert parse_initial_data("random_band(1, 4)") == ("random_band", 1.0, 4.0)
        assert parse_initial_data("file:/x.npy") == ("file", "/x.npy")

    def test_slope_floor(self):
        assert ExperimentConfig(**SMALL).slope_floor == pytest.approx(0.35)
        assert ExperimentConfig(**dict(SMALL, min_slope=0.2)).slope_floor == 0.2


class TestInitialData:
    def test_taylor_green(self):
        cfg = ExperimentConfig(**dict(SMALL, initial_data="taylor_green", omega_sup_target=2.0, T=1.0))
        w = generate_initial_data(cfg)
        x, y = cfg.grid.coordinates
        np.testing.assert_allclose(w.values(), -2 * np.cos(x) * np.cos(y), atol=1e-14)

    def test_random_band(self):
        cfg = ExperimentConfig(**SMALL)
        w = generate_initial_data(cfg)
        assert abs(sup_norm(w) - 1.0) <= 1e-10
        assert w.mean == 0.0
        i1, i2 = cfg.grid.index
        outside = np.hypot(i1, i2) > 4
        assert np.abs(w.coeffs[outside]).max() <= 1e-15
        np.testing.assert_array_equal(w.coeffs, generate_initial_data(cfg).coeffs)
        other = generate_initial_data(replace(cfg, seed=4))
        assert not np.array_equal(w.coeffs, other.coeffs)

    def test_empty_band(self):
        with pytest.raises(EmptyBand):
            generate_initial_data(ExperimentConfig(**dict(SMALL, initial_data="random_band(1.2,1.3)")))

    def test_file(self, tmp_path):
        cfg = ExperimentConfig(**SMALL)
        x, y = cfg.grid.coordinates
        np.save(tmp_path / "w.npy", 5.0 + 3 * np.sin(2 * x))
        w = generate_initial_data(replace(cfg, initial_data=f"file:{tmp_path / 'w.npy'}"))
        np.testing.assert_allclose(w.values(), np.sin(2 * x), atol=1e-14)


def _synthetic(errors_of_nu, ns=(2, 3, 4, 5, 6)):
    recs = [SweepRecord(n, 2.0 ** (-2 * n), errors_of_nu(2.0 ** (-2 * n))) for n in ns]
    return SweepResult(recs, 1.0, 0.9, 1.0, 1.0)


class TestFit:
    def test_exact_power_law(self):
        fit = fit_rate(_synthetic(lambda nu: 0.3 * nu**0.5))
        assert abs(fit.slope - 0.5) <= 1e-9
        assert fit.intercept == pytest.approx(math.log(0.3), abs=1e-9)
        assert fit.n_range == (2, 6)

    def test_scale_invariance(self):
        a = fit_rate(_synthetic(lambda nu: nu**0.7 * (1 + 0.2 * math.sin(1 / nu))))
        b = fit_rate(_synthetic(lambda nu: 1e3 * nu**0.7 * (1 + 0.2 * math.sin(1 / nu))))
        assert a.slope == pytest.approx(b.slope, abs=1e-12)

    def test_skips_failed_and_needs_three(self):
        sweep = _synthetic(lambda nu: nu)
        sweep.records[0].failed = True
        sweep.records[1].failed = True
        assert fit_rate(sweep).n_range == (4, 6)
        sweep.records[2].failed = True
        with pytest.raises(InsufficientPoints):
            fit_rate(sweep)


class TestSweep:
    def test_checks_pass(self, small_sweep):
        config, sweep, fit = small_sweep
        errors = [r.error_sup for r in sweep.records]
        assert errors == sorted(errors, reverse=True)
        assert fit.slope >= config.slope_floor
        assert all(a.passed for a in sweep.all_audits())

    def test_report_round_trip(self, small_sweep, tmp_path):
        _, sweep, fit = small_sweep
        paths = emit_report(sweep, fit, tmp_path)
        assert sorted(p.name for p in paths) == ["audits.json", "plotdata.csv", "rate.json", "sweep.csv"]
        back = read_sweep_csv(tmp_path / "sweep.csv")
        for a, b in zip(sweep.records, back):
            assert (a.n, a.nu, a.error_sup) == (b.n, b.nu, b.error_sup)
            assert (a.decomposition.low, a.decomposition.mid, a.decomposition.tail) == (
                b.decomposition.low, b.decomposition.mid, b.decomposition.tail)
        audits = json.loads((tmp_path / "audits.json").read_text())
        assert audits and any(a["name"].startswith("commutator[n=") for a in audits)
        for a in audits:
            jsonschema.validate(a, AUDIT_JSON_SCHEMA)
        rate = json.loads((tmp_path / "rate.json").read_text())
        assert rate["slope"] == fit.slope
        assert rate["reference"]["short_time_guard"] == pytest.approx(0.25)

    def test_no_partial_report(self, small_sweep, tmp_path):
        _, sweep, fit = small_sweep
        thin = SweepResult(sweep.records[:2], sweep.T, sweep.alpha, sweep.omega0_sup, sweep.v0_sup)
        out = tmp_path / "out"
        with pytest.raises(InsufficientPoints):
            emit_report(thin, fit, out)
        assert not out.exists()

    def test_euler_self_comparison(self, small_sweep):
        config, _, _ = small_sweep
        w = generate_initial_data(config)
        cfg = SolverConfig(config.grid, config.dt, config.T)
        a, b = solve(w, 0.0, cfg), solve(w, 0.0, cfg)
        assert max(sup_norm(x.velocity - y.velocity) for x, y in zip(a.states, b.states)) == 0.0
        # the doubled-resolution reference differs only by product truncation
        ref = euler_reference(config, w)
        assert max(sup_norm(x.velocity - y.velocity) for x, y in zip(a.states, ref.states)) <= 1e-5

    def test_reference_recompute(self, small_sweep):
        config, _, _ = small_sweep
        w = generate_initial_data(config)
        a, b = euler_reference(config, w), euler_reference(config, w)
        for x, y in zip(a.states, b.states):
            np.testing.assert_array_equal(x.omega.coeffs, y.omega.coeffs)

    def test_parallel_matches_serial(self, small_sweep, monkeypatch):
        config, sweep, _ = small_sweep
        monkeypatch.setenv("VVLAB_WORKERS", "2")
        par = run_sweep(config)
        assert [r.error_sup for r in par.records] == [r.error_sup for r in sweep.records]


class TestAuditEntry:
    @pytest.mark.parametrize("lemma", ["bernstein", "cz", "gauss", "c1", "max_principle", "velocity", "key"])
    def test_lemmas(self, lemma):
        audits, extra = run_audit(ExperimentConfig(**SMALL), lemma)
        assert audits and all(a.passed for a in audits)
        if lemma == "key":
            assert set(extra["n=1"]) == {"initial", "advect", "visc", "tau", "comm", "advect_linf", "advect_ratio"}

    def test_unknown(self):
        with pytest.raises(ValueError):
            run_audit(ExperimentConfig(**SMALL), "nope")


class TestCli:
    def test_run_and_fit(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path / "run.cfg", output_dir=tmp_path / "out")
        assert main(["run", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert "PASS slope" in out and "FAIL" not in out
        assert main(["fit", "--input", str(tmp_path / "out" / "sweep.csv")]) == 0
        fitted = json.loads(capsys.readouterr().out)
        rate = json.loads((tmp_path / "out" / "rate.json").read_text())
        assert fitted["slope"] == pytest.approx(rate["slope"], rel=1e-12)

    def test_audit(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path / "a.cfg")
        assert main(["audit", "--config", str(cfg), "--lemma", "cz"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["audits"][0]["name"] == "cz"

    def test_bad_lemma_exits(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["audit", "--config", str(write_cfg(tmp_path / "a.cfg")), "--lemma", "nope"])
