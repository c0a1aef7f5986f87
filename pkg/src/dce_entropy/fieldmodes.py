"""Exact mode-function dynamics: integrates the coupled second-order system
for the Fourier coefficients of the field modes over a harmonically driven
cavity and extracts Bogoliubov coefficients once the mirror is back at rest.

This is an oracle: it makes no slow-amplitude or perturbative assumption,
so it cross-validates both the short-time closed forms and the resonance
pipeline on their overlap window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .cavity import (
    ConfigurationError,
    CouplingTables,
    MirrorTrajectory,
    build_coupling_tables,
)


class ExtractionError(RuntimeError):
    """Raised when Bogoliubov extraction is attempted at a moving-mirror time."""


class OscillatoryStiffnessError(RuntimeError):
    def __init__(self, message, t_reached=None):
        super().__init__(message)
        self.t_reached = t_reached


@dataclass(frozen=True)
class ModeFunctionState:
    """Q and Qdot matrices at time t; column k holds initial condition k."""

    t: float
    k_max: int
    Q: np.ndarray = field(repr=False)
    Qdot: np.ndarray = field(repr=False)


def integrate_modes(trajectory: MirrorTrajectory, tables: CouplingTables | None = None,
                    k_max: int = 16, T: float | None = None,
                    tol: float = 1e-10) -> ModeFunctionState:
    """Integrate Qddot_j + w_j^2(t) Q_j = sum_l [2 lam g_jl Qdot_l
    + lamdot g_jl Q_l - lam^2 h_jl Q_l] from diagonal initial data.

    Initial data: Q_j^(k)(0) = delta_jk, Qdot_j^(k)(0) = -i w_k delta_jk.
    """
    if tol > 1e-8:
        raise ConfigurationError(f"tol={tol} too loose for the oracle (max 1e-8)")
    if T is None:
        T = trajectory.T
    if tables is None or tables.k_max < k_max:
        tables = build_coupling_tables(k_max)
    g = tables.g[:k_max, :k_max]
    h = tables.h[:k_max, :k_max]
    L0 = trajectory.L0
    k_idx = np.arange(1, k_max + 1, dtype=float)
    omega_in = k_idx * math.pi / L0

    Q0 = np.eye(k_max, dtype=complex)
    Qd0 = np.diag(-1j * omega_in)
    y0 = np.concatenate([Q0.reshape(-1), Qd0.reshape(-1)])
    n = k_max * k_max

    def rhs(t, y):
        Q = y[:n].reshape(k_max, k_max)
        Qd = y[n:].reshape(k_max, k_max)
        L = float(trajectory.length(t))
        lam = float(trajectory.lam(t))
        lam_dot = float(trajectory.lam_dot(t))
        w2 = (k_idx * math.pi / L) ** 2
        Qdd = -w2[:, None] * Q + 2.0 * lam * (g @ Qd) \
            + lam_dot * (g @ Q) - lam * lam * (h @ Q)
        return np.concatenate([Qd.reshape(-1), Qdd.reshape(-1)])

    # resolve the fastest retained mode by >= 20 points per period
    max_step = 2.0 * math.pi / (omega_in[-1] * 20.0)
    sol = solve_ivp(rhs, (0.0, T), y0, method="DOP853",
                    rtol=tol, atol=tol, max_step=max_step)
    if not sol.success:
        raise OscillatoryStiffnessError(
            f"mode integration failed: {sol.message}; reached t="
            f"{sol.t[-1] if len(sol.t) else 0.0}; reduce k_max or loosen tol",
            t_reached=sol.t[-1] if len(sol.t) else 0.0)
    y = sol.y[:, -1]
    return ModeFunctionState(t=T, k_max=k_max,
                             Q=y[:n].reshape(k_max, k_max),
                             Qdot=y[n:].reshape(k_max, k_max))


def extract_bogoliubov(state: ModeFunctionState, L_T: float,
                       static_tol: float = 1e-9,
                       trajectory: MirrorTrajectory | None = None):
    """(alpha, beta) matrices from Q, Qdot at a stop time with the mirror at rest.

    Matching Q_j^(k) = sqrt(w_k/w_j)(alpha_kj e^{-i w_j t} + beta_kj e^{+i w_j t})
    and its derivative at t = T gives

        alpha_kj = sqrt(w_j/w_k) e^{+i w_j T} (Q_j^(k) + i Qdot_j^(k)/w_j) / 2
        beta_kj  = sqrt(w_j/w_k) e^{-i w_j T} (Q_j^(k) - i Qdot_j^(k)/w_j) / 2.
    """
    if trajectory is not None:
        if abs(float(trajectory.length(state.t)) - L_T) > static_tol * L_T:
            raise ExtractionError(
                f"mirror not at L_T={L_T} at t={state.t}: "
                f"L={float(trajectory.length(state.t))}")
    k_max = state.k_max
    j_idx = np.arange(1, k_max + 1, dtype=float)
    w = j_idx * math.pi / L_T  # out-frequencies, row j
    ratio = np.sqrt(w[None, :] / w[:, None])  # sqrt(w_j / w_k) at [k, j]
    phase = np.exp(1j * w * state.t)[None, :]
    plus = 0.5 * (state.Q + 1j * state.Qdot / w[:, None])
    minus = 0.5 * (state.Q - 1j * state.Qdot / w[:, None])
    # state matrices are [j, k]; transpose to [k, j]
    alpha = ratio * phase * plus.T
    beta = ratio * np.conj(phase) * minus.T
    return alpha, beta


def particle_number_from_beta(beta: np.ndarray) -> float:
    """N = sum_kj |beta_kj|^2."""
    return float(np.sum(np.abs(beta) ** 2))


def unitarity_defect(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """|sum_k (|alpha_km|^2 - |beta_km|^2) - 1| per column m."""
    return np.abs((np.abs(alpha) ** 2 - np.abs(beta) ** 2).sum(axis=0) - 1.0)
