"""Experiment drivers: compose the physics modules into named experiments,
write CSV/JSON artifacts, and return verdict dictionaries.

Every driver takes a Scenario plus an output directory and returns
(verdict, passed).  The runner turns these into exit codes.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from . import analysis, spectral
from .evolve import (
    EvolveConfig,
    evolve_linearized,
    free_kg,
    linearized_hamiltonian,
)
from .field import Grid, PerturbationState, norm_E_alpha, norm_Linf, norm_W, snapshot_to_csv
from .history import RunHistory
from .kink import (
    SolitonParams,
    build_profile,
    lattice_profile,
    profile_to_csv,
    soliton_state,
    tail_rate,
)
from .potential import check_U1
from .scenario import Scenario, ScenarioError, build_perturbation, tracked_nonlinear_run

__all__ = ["run_experiment", "run_scenario_file", "run_sweep", "EXIT_OK", "EXIT_ASSERT", "EXIT_CONFIG", "EXIT_NUMERIC"]

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n")


def _profile_domain(p) -> float:
    return max(20.0, math.ceil(28.0 / p.m))


def _lookup(d, dotted):
    cur = d
    for part in dotted.split("."):
        cur = cur[part]
    return cur


def _check_expectations(scenario: Scenario, verdict: dict, passed: bool) -> bool:
    for key, want in scenario.expect.items():
        got = _lookup(verdict, key)
        if isinstance(want, bool) or want is None:
            ok = got == want
        else:
            ok = abs(float(got) - float(want)) <= 1e-9
        verdict.setdefault("expectations", {})[key] = {"want": want, "got": got, "ok": ok}
        passed = passed and ok
    return passed


# -- individual experiments ----------------------------------------------------


def exp_kink_check(scenario: Scenario, outdir: Path):
    p = scenario.make_potential()
    L = float(scenario.grid.get("L", _profile_domain(p)))
    h = float(scenario.grid.get("h", 0.01))
    profile = build_profile(p, L, h)
    profile_to_csv(profile, outdir / "profile.csv")
    residual = float(np.max(np.abs(0.5 * profile.s_prime**2 - p.u(profile.s))))
    rates = tail_rate(profile)
    verdict = {
        "first_integral_residual": residual,
        "tail": {
            "lam_minus": rates.lam_minus,
            "lam_plus": rates.lam_plus,
            "flagged": rates.flagged,
        },
        "s0": float(profile.s_at(np.array([0.0]))[0]),
        "u1": check_U1(p, 1e-10).as_dict(),
    }
    passed = residual <= 1e-10 and not rates.flagged
    if p.kind == "quartic":
        tanh_err = float(np.max(np.abs(profile.s - p.a * np.tanh(profile.x / math.sqrt(2)))))
        verdict["tanh_error"] = tanh_err
        passed = passed and tanh_err <= 1e-6
    verdict["rate_matches_m"] = bool(
        abs(rates.lam_plus - p.m) <= 0.02 * p.m and abs(rates.lam_minus - p.m) <= 0.02 * p.m
    )
    passed = passed and verdict["rate_matches_m"]
    return verdict, passed


def exp_spectrum(scenario: Scenario, outdir: Path):
    p = scenario.make_potential()
    profile = build_profile(p, _profile_domain(p), 0.01)
    grid = Grid.make(float(scenario.grid.get("L", 20.0)), float(scenario.grid.get("h", 0.01)))
    rep = spectral.spectral_report(p, profile, float(scenario.soliton.get("v", 0.0)), grid)
    cert = spectral.certify_U2(p, v_list=tuple(scenario.extra.get("v_list", [0.5])), profile=profile,
                               L=grid.L, h=grid.h)
    (outdir / "spectral_report.json").write_text(rep.to_json(indent=2) + "\n")
    (outdir / "certification.json").write_text(cert.to_json(indent=2) + "\n")
    n_modes = int(scenario.extra.get("export_modes", 2))
    op = spectral.assemble_Hv(p, profile, 0.0, grid)
    vals, vecs = spectral.discrete_spectrum(op, max(n_modes, 1))
    for j in range(min(n_modes, vecs.shape[1])):
        np.savetxt(
            outdir / f"mode_{j}.csv",
            np.column_stack([grid.x, vecs[:, j]]),
            delimiter=",",
            header="x,u",
            comments="",
        )
    verdict = {"report": rep.as_dict(), "certification": cert.as_dict()}
    return verdict, True  # expectations decide pass/fail for spectra


def exp_resonance(scenario: Scenario, outdir: Path):
    p = scenario.make_potential()
    profile = build_profile(p, _profile_domain(p), 0.01)
    grid = Grid.make(float(scenario.grid.get("L", 20.0)), float(scenario.grid.get("h", 0.01)))
    res = spectral.resonance_test(p, profile, float(scenario.soliton.get("v", 0.0)), grid)
    _write_json(outdir / "resonance.json", res.as_dict())
    return {"resonance": res.as_dict()}, True


def exp_linear_decay(scenario: Scenario, outdir: Path):
    p = scenario.make_potential()
    profile = build_profile(p, _profile_domain(p), 0.01)
    grid = scenario.make_grid()
    v = float(scenario.soliton.get("v", 0.3))
    beta = scenario.beta
    X0, frame = build_perturbation(scenario.perturbation, grid, profile, v, beta)
    dt = float(scenario.evolve.get("dt", 0.4 * grid.h))
    T = float(scenario.evolve.get("T", 50.0))
    sample_dt = float(scenario.evolve.get("sample_dt", 0.5))
    cfg = EvolveConfig(dt=dt, T=T, sample_stride=int(round(sample_dt / dt)))
    observers = {
        "E_minus_beta": lambda X: norm_E_alpha(X, -beta),
        "Linf": lambda X: norm_Linf(X.psi),
        "W": lambda X: norm_W(X),
        "energy": lambda X: linearized_hamiltonian(X, v, v, p, profile),
    }
    hist = evolve_linearized(
        X0, v, p, profile, cfg, observers=observers,
        reproject_stride=int(round(sample_dt / dt)),
    )
    hist.to_csv(outdir / "norms.csv", columns=["E_minus_beta", "Linf", "W", "energy"])
    window = tuple(scenario.extra.get("fit_window", (5.0, T)))
    fitE = analysis.fit_power_law(hist.t, hist.column("E_minus_beta"), window)
    fitL = analysis.fit_power_law(hist.t, hist.column("Linf"), window)
    verdict = {
        "fits": [
            {"series": "E_minus_beta", **fitE.as_dict()},
            {"series": "Linf", **fitL.as_dict()},
        ],
    }
    passed = -1.8 <= fitE.exponent <= -1.2 and -0.8 <= fitL.exponent <= -0.3
    return verdict, passed


def _main_run(scenario: Scenario, snap_dt: float, field_snap_dt: float = 0.0):
    p = scenario.make_potential()
    profile0 = build_profile(p, _profile_domain(p), 0.01)
    grid = scenario.make_grid()
    profile = lattice_profile(profile0, grid)
    sigma0 = SolitonParams(float(scenario.soliton.get("b", 0.0)), float(scenario.soliton.get("v", 0.0)))
    X0, frame = build_perturbation(scenario.perturbation, grid, profile, sigma0.v, scenario.beta)
    Y_sol = soliton_state(profile, sigma0, grid)
    Y0 = Y_sol.copy()
    Y0.psi += X0.psi
    Y0.pi += X0.pi
    dt = float(scenario.evolve.get("dt", 0.025))
    T = float(scenario.evolve.get("T", 100.0))
    sample_dt = float(scenario.evolve.get("sample_dt", 0.25))
    cfg = EvolveConfig(
        dt=dt,
        T=T,
        scheme=scenario.evolve.get("scheme", "leapfrog"),
        boundary=scenario.evolve.get("boundary", "clamped_vacuum"),
        sample_stride=int(round(sample_dt / dt)),
    )
    hist = tracked_nonlinear_run(
        p, profile, grid, Y0, sigma0, cfg,
        beta=scenario.beta, nu=scenario.nu,
        snap_dt=snap_dt, field_snap_dt=field_snap_dt,
    )
    return p, profile, grid, hist


def _modulation_cross_check(hist: RunHistory):
    """Finite differences of the tracked (c, v) against the modulation
    right-hand sides.  The error budget combines the sampling-truncation
    term (third differences) with the series' own noise floor amplified by
    the difference quotient."""
    out = {}
    t = hist.t
    dt = float(np.median(np.diff(t)))
    for series, rhs in (("c", "cdot"), ("v", "vdot")):
        y = hist.column(series)
        fd = np.gradient(y, t, edge_order=2)
        err = np.abs(fd - hist.column(rhs))[2:-2]
        d3 = np.abs(np.diff(y, 3)) / (6.0 * dt)
        noise = float(np.median(np.abs(np.diff(y, 2)))) / dt
        budget = float(np.max(d3)) + 3.0 * noise + 1e-15
        out[series] = {
            "max_error": float(np.max(err)),
            "budget": budget,
            "ok": bool(np.max(err) <= 10.0 * budget),
        }
    return out


def exp_nonlinear_decay(scenario: Scenario, outdir: Path):
    field_snap_dt = float(scenario.extra.get("field_snap_dt", 10.0))
    p, profile, grid, hist = _main_run(scenario, snap_dt=0.0, field_snap_dt=field_snap_dt)
    hist.to_csv(outdir / "norms.csv", columns=["E_minus_beta", "Linf", "W", "energy"])
    hist.to_csv(
        outdir / "tracking.csv",
        columns=["b", "v", "c", "cdot", "vdot", "residual_1", "residual_2"],
    )
    t = hist.t
    T = float(t[-1])
    m1, m2 = analysis.majorants(hist, scenario.beta)
    i_dec = int(np.argmin(np.abs(t - T / 10.0)))
    plateau = {
        "m1_growth": float(m1[-1] / m1[i_dec] - 1.0),
        "m2_growth": float(m2[-1] / m2[i_dec] - 1.0),
    }
    fitE = analysis.fit_power_law(t, hist.column("E_minus_beta"), (5.0, T))
    virial_fit, virial_ok = analysis.virial_check(hist, scenario.nu, window=(1.0, T))
    cross = _modulation_cross_check(hist)
    # |v - v_plus| tail decay, v_plus from the expected quadratic-in-1/t tail
    tail = t >= T / 2.0
    basis = np.vstack([np.ones(np.count_nonzero(tail)), (1.0 + t[tail]) ** -2.0]).T
    v_plus = float(np.linalg.lstsq(basis, hist.column("v")[tail], rcond=None)[0][0])
    dv = np.abs(hist.column("v") - v_plus)
    fit_v = analysis.fit_power_law(t, np.maximum(dv, 1e-18), (T / 8.0, T / 2.0))
    energy_series = hist.column("energy")
    drift = float(np.max(np.abs(energy_series - energy_series[0])) / abs(energy_series[0]))
    weighted = {}
    field_snaps = hist.meta.get("field_snapshots", [])
    if field_snaps:
        b_of_t = lambda s: float(np.interp(s, t, hist.column("b")))
        for sw in scenario.extra.get("sigma_w", [1.0, 2.0]):
            res = analysis.weighted_energy_check(field_snaps, float(sw), b_of_t, p)
            weighted[str(sw)] = {k: res[k] for k in ("max_ratio", "growth_exponent", "passed")}
    verdict = {
        "fits": [{"series": "E_minus_beta", **fitE.as_dict()},
                 {"series": "v_minus_vplus", **fit_v.as_dict()}],
        "majorant_plateaus": plateau,
        "virial": {"fit": virial_fit.as_dict(), "passed": virial_ok},
        "modulation_cross_check": cross,
        "v_plus": v_plus,
        "energy_drift": drift,
        "weighted_energy": weighted,
    }
    passed = (
        plateau["m1_growth"] <= 0.05
        and plateau["m2_growth"] <= 0.05
        and fit_v.exponent <= -1.5
        and virial_ok
        and all(c["ok"] for c in cross.values())
        and all(wv["passed"] for wv in weighted.values())
    )
    return verdict, passed


def exp_asymptotics(scenario: Scenario, outdir: Path):
    snap_dt = float(scenario.extra.get("snap_dt", 0.05))
    # the free-flow integral needs snapshots at the snapshot cadence, and
    # snapshots only exist at sample times
    scenario.evolve["sample_dt"] = min(float(scenario.evolve.get("sample_dt", 0.25)), snap_dt)
    p, profile, grid, hist = _main_run(scenario, snap_dt=snap_dt)
    dispersion = scenario.extra.get("dispersion", "lattice")
    res = analysis.extract_asymptotics(
        hist, p, profile, dispersion=dispersion, dt=float(scenario.evolve.get("dt", 0.025))
    )
    np.savetxt(
        outdir / "remainder.csv",
        np.column_stack([res.r_t, res.r_norms]),
        delimiter=",",
        header="t,remainder_E",
        comments="",
    )
    T = float(res.r_t[-1])
    fit = analysis.fit_power_law(res.r_t, res.r_norms, (T / 4.0, T))
    ratio = res.tail_estimate / res.phi_norm if res.phi_norm > 0 else float("inf")
    verdict = {
        "asymptotics": {
            "v_plus": res.v_plus,
            "q_plus": res.q_plus,
            "remainder_exponent": fit.exponent,
            "phi_norm": res.phi_norm,
            "tail_estimate": res.tail_estimate,
            "tail_ratio": ratio,
        }
    }
    passed = -0.8 <= fit.exponent <= -0.3 and ratio < 0.10
    return verdict, passed


_EXPERIMENTS = {
    "kink_check": exp_kink_check,
    "spectrum": exp_spectrum,
    "resonance": exp_resonance,
    "linear_decay": exp_linear_decay,
    "nonlinear_decay": exp_nonlinear_decay,
    "asymptotics": exp_asymptotics,
}


def run_experiment(scenario: Scenario, outdir) -> tuple:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json(outdir / "config_echo.json", scenario.as_dict())
    verdict, passed = _EXPERIMENTS[scenario.experiment](scenario, outdir)
    passed = _check_expectations(scenario, verdict, passed)
    verdict["passed"] = bool(passed)
    _write_json(outdir / "verdict.json", verdict)
    manifest = {
        "name": scenario.name,
        "experiment": scenario.experiment,
        "passed": bool(passed),
        "artifacts": sorted(f.name for f in outdir.iterdir() if f.is_file()),
    }
    _write_json(outdir / "manifest.json", manifest)
    return verdict, bool(passed)


def run_scenario_file(path, outdir=None) -> int:
    """Exit code contract: 0 pass, 1 assertion failure, 2 config error,
    3 numerical failure."""
    try:
        scenario = Scenario.from_json(path)
    except (ScenarioError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}")
        return EXIT_CONFIG
    outdir = Path(outdir) if outdir else Path(scenario.output_dir) / scenario.name
    try:
        verdict, passed = run_experiment(scenario, outdir)
    except ScenarioError as exc:
        print(f"config error: {exc}")
        return EXIT_CONFIG
    except Exception as exc:  # numerical/integration failures
        print(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    print(f"{scenario.name}: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_ASSERT


# -- parameter sweeps -----------------------------------------------------------

_AXIS_PATHS = {
    "v0": ("soliton", "v"),
    "d0": ("perturbation", "amplitude"),
    "barrier_height": ("potential", "barrier_height"),
    "h": ("grid", "h"),
}


def _apply_axis(cfg: dict, axis: str, value: float):
    section, key = _AXIS_PATHS[axis]
    cfg.setdefault(section, {})[key] = value


def run_sweep(template_path, axes: dict, outdir=None, max_workers=None) -> int:
    """One run per axis-grid point; partial failures are recorded per cell
    and do not abort the sweep.  Cells execute concurrently (cap with the
    KINKLAB_THREADS environment variable); outputs merge deterministically."""
    from concurrent.futures import ThreadPoolExecutor

    try:
        with open(template_path) as f:
            base = json.load(f)
        for axis in axes:
            if axis not in _AXIS_PATHS:
                raise ScenarioError(f"unknown sweep axis {axis!r} (have {sorted(_AXIS_PATHS)})")
        Scenario.from_dict(base)
    except (ScenarioError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}")
        return EXIT_CONFIG

    outdir = Path(outdir) if outdir else Path(base.get("output_dir", "out")) / (base.get("name", "sweep") + "_sweep")
    outdir.mkdir(parents=True, exist_ok=True)
    names = sorted(axes)
    grids = [axes[n] for n in names]
    cells = [()]
    for vals in grids:
        cells = [c + (v,) for c in cells for v in vals]

    if max_workers is None:
        max_workers = int(os.environ.get("KINKLAB_THREADS", "0")) or min(4, os.cpu_count() or 1)

    def run_cell(cell):
        cfg = json.loads(json.dumps(base))
        cell_id = "_".join(f"{n}={v:g}" for n, v in zip(names, cell))
        for n, v in zip(names, cell):
            _apply_axis(cfg, n, v)
        cfg["name"] = cell_id or "single"
        try:
            scenario = Scenario.from_dict(cfg)
            verdict, passed = run_experiment(scenario, outdir / (cell_id or "single"))
            return cell_id, cell, ("pass" if passed else "fail"), verdict
        except Exception as exc:
            return cell_id, cell, f"error: {exc}", {}

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(run_cell, cells))
    results.sort(key=lambda r: r[0])

    rows = []
    for cell_id, cell, status, verdict in results:
        row = {n: v for n, v in zip(names, cell)}
        row["cell"] = cell_id or "single"
        row["status"] = status
        for fit in verdict.get("fits", []):
            row[f"exponent_{fit['series']}"] = fit["exponent"]
        if "asymptotics" in verdict:
            row["exponent_remainder"] = verdict["asymptotics"]["remainder_exponent"]
        rows.append(row)
    cols = sorted({k for row in rows for k in row}, key=lambda c: (c not in names, c))
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(str(row.get(c, "")) for c in cols))
    (outdir / "sweep.csv").write_text("\n".join(lines) + "\n")
    _write_json(outdir / "manifest.json", {"cells": [r[0] or "single" for r in results],
                                           "axes": {n: list(map(float, axes[n])) for n in names}})
    print(f"sweep: {sum(1 for r in results if r[2] == 'pass')}/{len(results)} cells passed")
    return EXIT_OK if all(r[2] == "pass" for r in results) else EXIT_ASSERT
