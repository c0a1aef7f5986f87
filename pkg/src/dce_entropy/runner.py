"""Scenario orchestration: executes a ScenarioConfig against the computing
backends and emits deterministic CSV series plus JSON reports.

Grid points are dispatched to a thread pool (numpy releases the GIL in the
kernels that dominate) and merged by grid index, so output order and
content are independent of scheduling; reruns of the same config on the
same build produce bit-identical CSV.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .cavity import ConfigurationError, MirrorTrajectory, build_coupling_tables
from .config import ScenarioConfig
from . import fieldmodes, fock, gaussian, perturbative, resonance
from .perturbative import RegimeError


class CrosscheckError(RuntimeError):
    """Raised when backend consensus fails a documented tolerance."""


# documented crosscheck tolerances (relative unless stated).  All oracle
# runs snap tau to complete fundamental cycles (w1*T multiple of 2 pi) so
# non-resonant boundary terms cancel; the residuals are then O(epsilon)
# with O(tau^2) pipeline-specific corrections, and 5*epsilon covers every
# pair at epsilon = 1e-3, tau <= 0.1.  coherence_identity is |C - S_d| on
# the Fock oracle, absolute.
CROSSCHECK_TOLERANCES = {
    "fock_vs_closed_N": 5.0e-3,
    "fock_vs_closed_Sd": 5.0e-3,
    "field_vs_closed_N": 5.0e-3,
    "gaussian_vs_closed_N": 5.0e-3,
    "gaussian_vs_closed_Sd": 5.0e-3,
    "coherence_identity": 1.0e-8,
}


@dataclass
class RunReport:
    """Everything one scenario produced, ready for serialization."""

    pipeline: str
    config: dict
    columns: list
    records: list  # list of tuples matching columns
    diagnostics: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    version: str = __version__

    def to_json_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "config": self.config,
            "columns": list(self.columns),
            "records": [list(r) for r in self.records],
            "diagnostics": self.diagnostics,
            "wall_time_s": self.wall_time_s,
            "version": self.version,
        }


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)  # shortest round-trip decimal, locale-free
    return str(value)


def write_csv(report: RunReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(report.columns) + "\n")
        for rec in report.records:
            fh.write(",".join(_fmt(v) for v in rec) + "\n")


def write_json(report: RunReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pool_map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_entropy_sweep(config: ScenarioConfig) -> RunReport:
    """Closed-form N and S_d over (p, tau) grids; Fig.-style dataset."""
    config.validate()
    t0 = time.time()
    points = [(p, tau) for p in config.p_list for tau in config.tau_grid]

    def one(point):
        p, tau = point
        N = perturbative.particle_number(p, tau)
        if 0.5 * N >= 1.0:
            raise RegimeError(
                f"N/2 = {0.5 * N} >= 1 at (p={p}, tau={tau})")
        return (p, tau, N, perturbative.diagonal_entropy_closed_form(p, tau))

    records = _pool_map(one, points, config.resolved_threads())

    # ordering check: S_d nondecreasing in p at fixed tau
    by_tau = {}
    for p, tau, _N, S in records:
        by_tau.setdefault(tau, []).append((p, S))
    ordered = all(
        all(s2 >= s1 - 1e-15 for (_, s1), (_, s2) in zip(vals, vals[1:]))
        for vals in (sorted(v) for v in by_tau.values()))
    return RunReport(
        pipeline="short-time", config=config.to_dict(),
        columns=["p", "tau", "N", "S_d"], records=records,
        diagnostics={"entropy_monotone_in_p": bool(ordered)},
        wall_time_s=time.time() - t0)


def run_resonance_study(config: ScenarioConfig) -> RunReport:
    """Long-time SVA + Gaussian pipeline over the tau grid and mode list."""
    config.validate()
    if config.pipeline not in ("resonance", "gaussian"):
        raise ConfigurationError(
            f"pipeline must be resonance or gaussian, got {config.pipeline}")
    tau_end = config.tau_grid[-1]
    if tau_end > 20.0:
        raise ConfigurationError(f"tau_end={tau_end} > 20")
    t0 = time.time()
    taus = np.asarray(config.tau_grid, dtype=float)
    if taus[0] != 0.0:
        taus = np.concatenate([[0.0], taus])
    traj = resonance.integrate(k_max=config.k_max, tau_end=tau_end,
                               tol=config.tol, modes=tuple(config.mode_list),
                               taus=taus)
    records = []
    n_cut = config.n_cut if config.n_cut else None
    for m in config.mode_list:
        a1, b1 = traj.first_row(m)
        covs = gaussian.variances_by_ode(traj, m)
        for i, cov in enumerate(covs):
            if cov.tau not in config.tau_grid:
                continue
            pops = gaussian.populations(cov, n_cut=n_cut)
            records.append((
                cov.tau, m, float(a1[i]), float(b1[i]),
                cov.sigma_q, cov.sigma_p, cov.particle_number(),
                gaussian.mode_diagonal_entropy(pops),
                gaussian.renyi2_entropy(cov), pops.n_cut))
    records.sort(key=lambda r: (r[0], r[1]))

    diagnostics = {}
    if tau_end >= 10.0 and 1 in config.mode_list:
        i10 = int(np.argmin(np.abs(taus - 10.0)))
        a1, _ = traj.first_row(1)
        sq, sp = traj.variances(1)
        slope = ((sp[-1] - sp[len(sp) // 2])
                 / (taus[-1] - taus[len(sp) // 2]))
        diagnostics["alpha_11_residual_vs_2_over_pi"] = \
            abs(a1[i10] - 2 / math.pi) / (2 / math.pi)
        diagnostics["sigma_q1_residual_vs_2_over_pi2"] = \
            abs(sq[i10] - 2 / math.pi ** 2) / (2 / math.pi ** 2)
        diagnostics["sigma_p1_slope_residual_vs_16_over_pi2"] = \
            abs(slope - 16 / math.pi ** 2) / (16 / math.pi ** 2)
    for m, mu, coef in ((1, 0, 32.0), (3, 1, 608.0 / 27.0)):
        if tau_end >= 10.0 and m in config.mode_list:
            sq, sp = traj.variances(m)
            i10 = int(np.argmin(np.abs(taus - 10.0)))
            S_R = 0.5 * math.log(sq[i10] * sp[i10])
            ref = 0.5 * math.log(coef * 10.0 / math.pi ** 4)
            diagnostics[f"S_R{m}_tau10_vs_asymptote"] = S_R - ref
    return RunReport(
        pipeline=config.pipeline, config=config.to_dict(),
        columns=["tau", "m", "alpha_1m", "beta_1m", "sigma_q", "sigma_p",
                 "N_m", "S_d", "S_R2", "n_cut"],
        records=records, diagnostics=diagnostics,
        wall_time_s=time.time() - t0)


def run_field_oracle(config: ScenarioConfig) -> RunReport:
    """Exact mode-function integration at each tau (snapped to complete
    drive cycles so extraction happens with the mirror at rest)."""
    config.validate()
    t0 = time.time()
    k_max = min(config.k_max, 32)  # oracle cost grows as k_max^2 equations
    tables = build_coupling_tables(k_max,
                                   max(config.resolved_l_sum_max(), 4 * k_max))
    tol = min(config.tol, 1e-8)

    def one(tau):
        trajectory = MirrorTrajectory.nearest_complete_cycles(
            tau, config.epsilon, config.p, align_fundamental=True)
        state = fieldmodes.integrate_modes(trajectory, tables, k_max=k_max,
                                           tol=tol)
        alpha, beta = fieldmodes.extract_bogoliubov(
            state, trajectory.L0, trajectory=trajectory)
        N = fieldmodes.particle_number_from_beta(beta)
        defect = float(fieldmodes.unitarity_defect(alpha, beta)[:k_max // 2].max())
        return (trajectory.tau, N, abs(beta[0, 0]), defect)

    taus = [t for t in config.tau_grid if t > 0]
    records = _pool_map(one, taus, config.resolved_threads())
    return RunReport(
        pipeline="field-oracle", config=config.to_dict(),
        columns=["tau", "N", "abs_beta_11", "unitarity_defect"],
        records=records,
        diagnostics={"k_max": k_max, "tol": tol},
        wall_time_s=time.time() - t0)


def run_fock_oracle(config: ScenarioConfig) -> RunReport:
    """Truncated-Fock evolution at each tau (snapped to complete cycles)."""
    config.validate()
    t0 = time.time()
    mode_count = min(config.k_max, 4)
    tables = build_coupling_tables(max(mode_count, 16))

    def one(tau):
        trajectory = MirrorTrajectory.nearest_complete_cycles(
            tau, config.epsilon, config.p, align_fundamental=True)
        rho = fock.evolve_trajectory_vacuum(
            trajectory, tables, mode_count=mode_count, n_max=config.n_max,
            tol=config.tol).validate()
        C, S_vn, N = fock.coherence_and_particles(rho)
        return (trajectory.tau, N, fock.diagonal_entropy(rho), S_vn, C)

    taus = [t for t in config.tau_grid if t > 0]
    records = _pool_map(one, taus, config.resolved_threads())
    return RunReport(
        pipeline="fock-oracle", config=config.to_dict(),
        columns=["tau", "N", "S_d", "S_vn", "C"],
        records=records,
        diagnostics={"mode_count": mode_count, "n_max": config.n_max},
        wall_time_s=time.time() - t0)


def run_crosscheck(config: ScenarioConfig) -> RunReport:
    """Four-backend consensus on N and S_d in the short-time window.

    Requested taus are snapped to the nearest complete drive cycle so the
    oracles extract at a resting mirror; all backends are then compared at
    the snapped tau.  Raises CrosscheckError when any documented tolerance
    is exceeded.
    """
    config.validate()
    if config.epsilon > 1e-2:
        raise ConfigurationError(f"crosscheck requires epsilon <= 1e-2")
    if config.p != 2:
        raise ConfigurationError(f"crosscheck requires p = 2, got {config.p}")
    if any(t > 0.1 for t in config.tau_grid):
        raise ConfigurationError(f"crosscheck requires tau <= 0.1")
    t0 = time.time()

    tables = build_coupling_tables(16)
    records = []
    deviations = {k: 0.0 for k in CROSSCHECK_TOLERANCES}
    for tau_req in config.tau_grid:
        if tau_req <= 0:
            continue
        trajectory = MirrorTrajectory.nearest_complete_cycles(
            tau_req, config.epsilon, config.p, align_fundamental=True)
        tau = trajectory.tau

        N_cf = perturbative.particle_number(config.p, tau)
        S_cf = perturbative.diagonal_entropy_closed_form(config.p, tau)

        rho = fock.evolve_trajectory_vacuum(
            trajectory, tables, mode_count=4, n_max=config.n_max,
            tol=config.tol).validate()
        C, _S_vn, N_fock = fock.coherence_and_particles(rho)
        S_fock = fock.diagonal_entropy(rho)

        state = fieldmodes.integrate_modes(trajectory, tables, k_max=16,
                                           tol=min(config.tol, 1e-8))
        _a, beta = fieldmodes.extract_bogoliubov(state, trajectory.L0,
                                                 trajectory=trajectory)
        N_field = fieldmodes.particle_number_from_beta(beta)

        traj = resonance.integrate(k_max=config.k_max, tau_end=tau,
                                   tol=config.tol, modes=(1,),
                                   taus=np.array([0.0, tau]))
        cov = gaussian.variances_by_ode(traj, 1)[-1]
        N_gauss = cov.particle_number()
        S_gauss = gaussian.mode_diagonal_entropy(gaussian.populations(cov))

        records.append((tau, N_cf, N_fock, N_field, N_gauss,
                        S_cf, S_fock, S_gauss, C))

        def rel(a, b):
            return abs(a - b) / max(abs(b), 1e-300)

        deviations["fock_vs_closed_N"] = max(
            deviations["fock_vs_closed_N"], rel(N_fock, N_cf))
        deviations["fock_vs_closed_Sd"] = max(
            deviations["fock_vs_closed_Sd"], rel(S_fock, S_cf))
        deviations["field_vs_closed_N"] = max(
            deviations["field_vs_closed_N"], rel(N_field, N_cf))
        deviations["gaussian_vs_closed_N"] = max(
            deviations["gaussian_vs_closed_N"], rel(N_gauss, N_cf))
        deviations["gaussian_vs_closed_Sd"] = max(
            deviations["gaussian_vs_closed_Sd"], rel(S_gauss, S_cf))
        deviations["coherence_identity"] = max(
            deviations["coherence_identity"], abs(C - S_fock))

    failures = {k: v for k, v in deviations.items()
                if v > CROSSCHECK_TOLERANCES[k]}
    report = RunReport(
        pipeline="crosscheck", config=config.to_dict(),
        columns=["tau", "N_closed", "N_fock", "N_field", "N_gaussian",
                 "S_d_closed", "S_d_fock", "S_d_gaussian", "C_fock"],
        records=records,
        diagnostics={"max_deviations": deviations,
                     "tolerances": dict(CROSSCHECK_TOLERANCES),
                     "failures": failures},
        wall_time_s=time.time() - t0)
    if failures:
        raise CrosscheckError(
            f"crosscheck failed: {failures} (tolerances "
            f"{ {k: CROSSCHECK_TOLERANCES[k] for k in failures} })")
    return report


RUNNERS = {
    "short-time": run_entropy_sweep,
    "fock-oracle": run_fock_oracle,
    "resonance": run_resonance_study,
    "gaussian": run_resonance_study,
    "field-oracle": run_field_oracle,
    "crosscheck": run_crosscheck,
}


def run_scenario(config: ScenarioConfig, out_dir: str) -> RunReport:
    """Dispatch a config to its backend and write CSV + JSON artifacts."""
    runner = RUNNERS.get(config.pipeline)
    if runner is None:
        raise ConfigurationError(f"no runner for pipeline {config.pipeline!r}")
    report = runner(config)
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, config.pipeline)
    write_csv(report, stem + ".csv")
    write_json(report, stem + ".json")
    return report
