import json
import math

import numpy as np
import pytest

from kinklab.cli import main
from kinklab.field import Grid
from kinklab.scenario import Scenario, ScenarioError, build_perturbation
from kinklab.experiments import run_experiment

SQRT2 = math.sqrt(2.0)

QUARTIC_KINK = {
    "name": "qk",
    "experiment": "kink_check",
    "potential": {"kind": "quartic", "a": 1.0},
    "grid": {"L": 20.0, "h": 0.01},
}


def write_scenario(tmp_path, cfg, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


class TestScenarioParsing:
    def test_unknown_experiment_rejected(self):
        with pytest.raises(ScenarioError):
            Scenario.from_dict({**QUARTIC_KINK, "experiment": "nope"})

    def test_bad_potential_rejected(self):
        with pytest.raises(ScenarioError):
            Scenario.from_dict({**QUARTIC_KINK, "potential": {"kind": "quartic", "a": -1.0}})

    def test_round_trip(self):
        sc = Scenario.from_dict(QUARTIC_KINK)
        again = Scenario.from_dict(sc.as_dict())
        assert again.as_dict() == sc.as_dict()


class TestPerturbation:
    def test_seed_reproducibility_bitwise(self, flat_profile):
        g = Grid.make(30.0, 0.05)
        spec = {"shape": "gaussian", "amplitude": 1e-2, "seed": 7, "noise": 0.1}
        X1, _ = build_perturbation(spec, g, flat_profile, 0.0, 2.6)
        X2, _ = build_perturbation(spec, g, flat_profile, 0.0, 2.6)
        assert np.array_equal(X1.psi, X2.psi)
        assert np.array_equal(X1.pi, X2.pi)
        X3, _ = build_perturbation({**spec, "seed": 8}, g, flat_profile, 0.0, 2.6)
        assert not np.array_equal(X1.psi, X3.psi)

    def test_amplitude_normalization(self, flat_profile):
        from kinklab.field import norm_E_alpha, norm_W

        g = Grid.make(30.0, 0.05)
        for shape in ("gaussian", "wavelet"):
            X, _ = build_perturbation(
                {"shape": shape, "amplitude": 3e-3}, g, flat_profile, 0.0, 2.6
            )
            assert max(norm_E_alpha(X, 2.6), norm_W(X)) == pytest.approx(3e-3, rel=1e-9)

    def test_orthogonality_after_projection(self, flat_profile):
        from kinklab.symplectic import omega, tangent_frame

        g = Grid.make(30.0, 0.05)
        X, frame = build_perturbation({"shape": "gaussian", "amplitude": 1e-2}, g, flat_profile, 0.0, 2.6)
        assert abs(omega(X, frame.tau1)) <= 1e-12
        assert abs(omega(X, frame.tau2)) <= 1e-12

    def test_tau_mixture_spans_frame(self, flat_profile):
        g = Grid.make(30.0, 0.05)
        X, frame = build_perturbation(
            {"shape": "tau_mixture", "amplitude": 1.0, "c1": 0.0, "c2": 1.0},
            g,
            flat_profile,
            0.0,
            2.6,
        )
        corr = float(np.dot(X.psi, frame.tau2.psi) + np.dot(X.pi, frame.tau2.pi))
        assert corr != 0.0

    def test_unknown_shape_rejected(self, flat_profile):
        g = Grid.make(30.0, 0.05)
        with pytest.raises(ScenarioError):
            build_perturbation({"shape": "sawtooth"}, g, flat_profile, 0.0, 2.6)


class TestRunCli:
    def test_kink_check_run(self, tmp_path, capsys):
        cfg = {**QUARTIC_KINK, "output_dir": str(tmp_path / "out")}
        code = main(["run", str(write_scenario(tmp_path, cfg))])
        assert code == 0
        outdir = tmp_path / "out" / "qk"
        for name in ("profile.csv", "verdict.json", "config_echo.json", "manifest.json"):
            assert (outdir / name).exists()
        verdict = json.loads((outdir / "verdict.json").read_text())
        assert verdict["tanh_error"] <= 1e-6
        assert verdict["passed"]

    def test_config_echo_reproduces_run(self, tmp_path):
        cfg = {**QUARTIC_KINK, "output_dir": str(tmp_path / "o1")}
        assert main(["run", str(write_scenario(tmp_path, cfg))]) == 0
        echoed = json.loads((tmp_path / "o1" / "qk" / "config_echo.json").read_text())
        echoed["output_dir"] = str(tmp_path / "o2")
        assert main(["run", str(write_scenario(tmp_path, echoed, "echo.json"))]) == 0
        a = (tmp_path / "o1" / "qk" / "profile.csv").read_bytes()
        b = (tmp_path / "o2" / "qk" / "profile.csv").read_bytes()
        assert a == b  # bit-reproducible artifacts

    def test_expected_failure_scenario_passes(self, tmp_path):
        # a spectrum scenario on the quartic *expects* the certification to fail
        cfg = {
            "name": "spec_quartic",
            "experiment": "spectrum",
            "potential": {"kind": "quartic", "a": 1.0},
            "grid": {"L": 20.0, "h": 0.02},
            "output_dir": str(tmp_path / "out"),
            "expect": {"report.u2_passed": False, "certification.passed": False},
        }
        assert main(["run", str(write_scenario(tmp_path, cfg))]) == 0
        rep = json.loads((tmp_path / "out" / "spec_quartic" / "verdict.json").read_text())
        eigs = rep["report"]["eigenvalues"]
        assert any(abs(e - 1.5) < 1e-2 for e in eigs)

    def test_expectation_mismatch_exits_1(self, tmp_path):
        cfg = {
            **QUARTIC_KINK,
            "output_dir": str(tmp_path / "out"),
            "expect": {"tail.flagged": True},  # wrong on purpose
        }
        assert main(["run", str(write_scenario(tmp_path, cfg))]) == 1

    def test_malformed_config_exits_2(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["run", str(path)]) == 2
        path2 = write_scenario(tmp_path, {"experiment": "nope", "potential": {}}, "bad2.json")
        assert main(["run", str(path2)]) == 2

    def test_numerical_failure_exits_3(self, tmp_path):
        cfg = {
            "name": "blowup",
            "experiment": "nonlinear_decay",
            "potential": {"kind": "flat_well", "a": 1.0, "m": SQRT2, "delta": 0.3, "barrier_height": 1.0},
            "grid": {"L": 30.0, "h": 0.05},
            "evolve": {"dt": 0.04, "T": 8.0, "sample_dt": 0.2},
            "perturbation": {"shape": "gaussian", "amplitude": 1e6},
            "output_dir": str(tmp_path / "out"),
        }
        with np.errstate(over="ignore", invalid="ignore"):
            assert main(["run", str(write_scenario(tmp_path, cfg))]) == 3

    def test_report_command(self, tmp_path, capsys):
        cfg = {**QUARTIC_KINK, "output_dir": str(tmp_path / "out")}
        main(["run", str(write_scenario(tmp_path, cfg))])
        capsys.readouterr()
        assert main(["report", str(tmp_path / "out")]) == 0
        out = capsys.readouterr().out
        assert "kink_check" in out and "PASS" in out


class TestSweep:
    def test_axis_sweep_aggregates(self, tmp_path):
        cfg = {**QUARTIC_KINK, "grid": {"L": 20.0, "h": 0.02}, "output_dir": str(tmp_path / "out")}
        tpl = write_scenario(tmp_path, cfg, "template.json")
        code = main(["sweep", str(tpl), "--axis", "h=0.02,0.01", "--out", str(tmp_path / "sw")])
        assert code == 0
        table = (tmp_path / "sw" / "sweep.csv").read_text().strip().splitlines()
        assert table[0].startswith("h,")
        assert len(table) == 3
        assert (tmp_path / "sw" / "h=0.02" / "verdict.json").exists()

    def test_empty_axes_single_run(self, tmp_path):
        cfg = {**QUARTIC_KINK, "output_dir": str(tmp_path / "out")}
        tpl = write_scenario(tmp_path, cfg, "template.json")
        assert main(["sweep", str(tpl), "--out", str(tmp_path / "sw")]) == 0
        assert (tmp_path / "sw" / "single" / "verdict.json").exists()

    def test_unknown_axis_rejected(self, tmp_path):
        tpl = write_scenario(tmp_path, QUARTIC_KINK, "template.json")
        assert main(["sweep", str(tpl), "--axis", "zeta=1,2"]) == 2
