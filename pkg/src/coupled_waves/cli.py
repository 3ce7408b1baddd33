"""Command-line front end: ``coupled-waves <command> --config FILE --out CSV``.

Exit status is 0 when every check of the command passes, 1 when a check
fails and 2 on bad input (the message carries ``file:line:column`` for
config errors).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import carleman, counterexample, frequency, timedomain
from .core import InputError, graph_norm_sq
from .scenario import ScenarioConfig, load

STABILITY_TOL = 0.2
BUDGET_TOL = 1e-8
CONSERVATION_TOL = 1e-8
MONOTONE_TOL = 1e-10


class Outcome:
    """Summary values and named checks collected by one command."""

    def __init__(self, command: str):
        self.command = command
        self.values: dict[str, Any] = {}
        self.checks: dict[str, bool] = {}

    def check(self, name: str, ok) -> None:
        self.checks[name] = bool(ok)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict:
        return {"command": self.command, "passed": self.passed, "checks": self.checks, "values": _jsonable(self.values)}


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _rel_change(a: float, b: float) -> float:
    if not (np.isfinite(a) and np.isfinite(b)):
        return np.inf
    return abs(b - a) / max(abs(a), 1e-300)


# --------------------------------------------------------------------------
# commands


def run_simulate(cfg: ScenarioConfig, out: Path | None, refine: bool = False) -> Outcome:
    res = Outcome("simulate")
    for tag, c in [("", cfg)] + ([("refined_", cfg.refined())] if refine else []):
        grid = c.grid()
        A = c.generator(grid)
        U0 = c.initial_state(grid, A)
        reports = timedomain.simulate(timedomain.SimulationConfig(grid, A.coeffs, U0, c.dt, c.T, c.stride), A)
        g0 = graph_norm_sq(U0, A)
        if out is not None and not tag:
            timedomain.write_reports_csv(out, reports, g0)
        E0, ET = reports[0].E, reports[-1].E
        res.values[f"{tag}n"] = c.n
        res.values[f"{tag}E0"] = E0
        res.values[f"{tag}ET"] = ET
        res.values[f"{tag}ET_over_E0"] = ET / E0 if E0 > 0 else 1.0
        res.values[f"{tag}C_log"] = timedomain.fit_log_decay(reports, g0).C_log if g0 > 0 else 0.0
        res.check(f"{tag}monotone", timedomain.monotonicity_violation(reports) <= MONOTONE_TOL)
        res.check(f"{tag}energy_budget", timedomain.energy_budget_defect(reports) <= BUDGET_TOL)
        if not np.any(A.coeffs.beta) or c.initial == "counterexample":
            res.check(f"{tag}conserved", abs(res.values[f"{tag}ET_over_E0"] - 1.0) <= CONSERVATION_TOL)
    if refine and res.values["C_log"] > 0:
        res.values["C_log_change"] = _rel_change(res.values["C_log"], res.values["refined_C_log"])
    return res


def run_spectrum(cfg: ScenarioConfig, out: Path | None, refine: bool = False) -> Outcome:
    res = Outcome("spectrum")
    for tag, c in [("", cfg)] + ([("refined_", cfg.refined())] if refine else []):
        A = c.generator()
        if A.size > frequency.DENSE_EIG_LIMIT:
            raise InputError(f"4n = {A.size} exceeds the dense eigensolver limit {frequency.DENSE_EIG_LIMIT}")
        spec = frequency.spectrum(A)
        tol = frequency.eig_tolerance(A)
        fit = frequency.fit_spectral_region(spec.values, tol=tol)
        if out is not None and not tag:
            frequency.write_spectrum_csv(out, spec)
        res.values[f"{tag}n"] = c.n
        res.values[f"{tag}max_real"] = float(spec.values.real.max())
        res.values[f"{tag}max_residual"] = float(spec.residuals.max())
        res.values[f"{tag}feasible"] = fit.feasible
        res.values[f"{tag}C_region"] = fit.C_region
        res.values[f"{tag}near_axis"] = int(fit.imaginary.size)
        res.check(f"{tag}residuals", spec.residuals.max() <= tol)
        res.check(f"{tag}dissipative", spec.values.real.max() <= tol)
    if refine and res.values["feasible"]:
        change = _rel_change(res.values["C_region"], res.values["refined_C_region"])
        res.values["C_region_change"] = change
        res.check("C_region_stable", res.values["refined_feasible"] and change < STABILITY_TOL)
    return res


def _write_sweep(out: Path, sweep: frequency.SweepResult, hy: np.ndarray) -> None:
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma", "resolvent_norm", "log_norm", "hille_yosida_ratio", "flag"])
        for p, r in zip(sweep.points, hy):
            val = float(p.value)
            log = np.log(val) if np.isfinite(val) else np.inf
            w.writerow([f"{p.gamma.imag:.17g}", f"{val:.17g}", f"{log:.17g}", f"{r:.17g}", p.flag or "ok"])


def run_resolvent(cfg: ScenarioConfig, out: Path | None, refine: bool = False) -> Outcome:
    """Resolvent sweep on ``i [sigma_min, sigma_max]`` plus a Hille-Yosida
    column ``Re(gamma) ||(A - gamma)^{-1}||`` at ``gamma = 1 + i sigma``."""
    res = Outcome("resolvent")
    for tag, c in [("", cfg)] + ([("refined_", cfg.refined())] if refine else []):
        A = c.generator()
        sweep = frequency.resolvent_sweep(A, c.sigma_min, c.sigma_max, c.count)
        hy = np.array([frequency.hille_yosida_ratio(A, 1.0 + 1j * s) for s in sweep.sigmas])
        if out is not None and not tag:
            _write_sweep(out, sweep, hy)
        peak_sigma, peak = sweep.peak()
        res.values[f"{tag}n"] = c.n
        res.values[f"{tag}C_res"] = sweep.C_res
        res.values[f"{tag}peak_sigma"] = peak_sigma
        res.values[f"{tag}peak_norm"] = peak
        res.values[f"{tag}flagged"] = sweep.flagged
        res.check(f"{tag}hille_yosida", np.all(hy <= 1.0 + 1e-8))
        res.check(f"{tag}C_res_finite", np.isfinite(sweep.C_res) and sweep.flagged == 0)
    if refine:
        change = _rel_change(res.values["C_res"], res.values["refined_C_res"])
        res.values["C_res_change"] = change
        res.check("C_res_stable", change < STABILITY_TOL)
    return res


def run_carleman(cfg: ScenarioConfig, out: Path | None) -> Outcome:
    res = Outcome("carleman")
    results = []
    for mu in cfg.mu:
        rs = carleman.carleman_sweep(cfg.family, mu, cfg.lambdas, cfg.C, cfg.length, cfg.omega0)
        results.extend(rs)
        thr = carleman.lambda_threshold(rs)
        res.values[f"lambda_threshold_mu{mu:g}"] = thr if thr is not None else "none"
        res.values[f"max_ratio_mu{mu:g}"] = max(r.ratio for r in rs)
        res.check(f"threshold_mu{mu:g}", thr is not None)
    if out is not None:
        carleman.write_carleman_csv(out, results)
    return res


COUNTEREXAMPLE_LADDER = (199, 399, 799)


def run_counterexample(out: Path | None, T: float = 10.0, ladder=COUNTEREXAMPLE_LADDER) -> Outcome:
    """Closed form versus simulation on three grids with ``dt = h``."""
    res = Outcome("counterexample")
    errors = []
    for i, n in enumerate(ladder):
        grid = counterexample.grid(n)
        last = i == len(ladder) - 1
        rep = counterexample.compare_with_simulation(grid, grid.h, T, keep_rows=last and out is not None)
        errors.append(rep.max_rel_error)
        res.values[f"n{n}_max_rel_error"] = rep.max_rel_error
        res.values[f"n{n}_energy_drift"] = rep.energy_drift
        if last:
            res.check("error_below_5pct", rep.max_rel_error <= 0.05)
            res.check("energy_conserved", rep.energy_drift <= CONSERVATION_TOL)
            if out is not None:
                with open(out, "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(["t", "x", "y_exact", "y_sim", "z_exact", "z_sim", "abs_err"])
                    for row in rep.rows:
                        w.writerow([f"{v:.17g}" for v in row])
    res.check("error_decreasing", all(b < a for a, b in zip(errors, errors[1:])))
    return res


def run_report(cfg: ScenarioConfig, out: Path | None, refine: bool = False) -> Outcome:
    """simulate, spectrum and resolvent for one scenario; CSVs go to the
    directory ``out`` as ``simulate.csv``, ``spectrum.csv``, ``resolvent.csv``."""
    res = Outcome("report")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for name, fn in (("simulate", run_simulate), ("spectrum", run_spectrum), ("resolvent", run_resolvent)):
        sub = fn(cfg, out / f"{name}.csv" if out is not None else None, refine)
        res.values[name] = sub.values
        for k, v in sub.checks.items():
            res.check(f"{name}.{k}", v)
    return res


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coupled-waves", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["simulate", "spectrum", "resolvent", "carleman", "counterexample", "report"])
    p.add_argument("--config", type=Path, help="scenario file ([section] key = value)")
    p.add_argument("--out", type=Path, help="CSV path (directory for 'report')")
    p.add_argument("--refine", action="store_true", help="rerun with n -> 2n + 1 and compare")
    p.add_argument(
        "--json-summary",
        nargs="?",
        const="-",
        default=None,
        metavar="PATH",
        help="write a JSON summary to PATH (stdout when PATH is omitted)",
    )
    return p


def _print_summary(res: Outcome, stream) -> None:
    for k, v in res.values.items():
        if isinstance(v, dict):
            continue
        print(f"{k} = {v:.10g}" if isinstance(v, float) else f"{k} = {v}", file=stream)
    for k, ok in res.checks.items():
        print(f"check {k}: {'pass' if ok else 'FAIL'}", file=stream)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "counterexample":
            res = run_counterexample(args.out)
        else:
            if args.config is None:
                raise InputError(f"'{args.command}' needs --config")
            cfg = load(args.config)
            if args.command == "carleman":
                res = run_carleman(cfg, args.out)
            else:
                fn = {"simulate": run_simulate, "spectrum": run_spectrum, "resolvent": run_resolvent, "report": run_report}
                res = fn[args.command](cfg, args.out, args.refine)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    to_stdout_json = args.json_summary == "-"
    _print_summary(res, sys.stderr if to_stdout_json else sys.stdout)
    if args.json_summary is not None:
        text = json.dumps(res.as_dict(), indent=2, sort_keys=True)
        if to_stdout_json:
            print(text)
        else:
            Path(args.json_summary).write_text(text + "\n")
    return 0 if res.passed else 1


if __name__ == "__main__":
    sys.exit(main())
