"""Short-time closed forms: first-order Bogoliubov coefficients, particle
number, and diagonal entropy for the harmonically driven cavity.

All entropies are in nats.  The resonant branch (p = k + j) dominates; the
rapidly oscillating off-resonant terms are retained behind a flag but
excluded from entropy sums by default.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .cavity import (
    ConfigurationError,
    CouplingTables,
    InstantaneousSpectrum,
    MirrorTrajectory,
    build_coupling_tables,
    hamiltonian_coefficient_matrices,
)


class RegimeError(ValueError):
    """Raised when inputs leave the perturbative (tau << 1, N < 2) regime."""


def beta_resonant_magnitude(k: int, j: int, p: int, tau: float, epsilon: float) -> float:
    """|beta_kj(tau)| for the harmonic trajectory l(t) = sin(p w1 t).

    Resonant pairs (p = k + j) grow linearly, sqrt(kj)*tau; all other pairs
    stay on a bounded oscillatory envelope.
    """
    if k < 1 or j < 1 or p < 1:
        raise ConfigurationError(f"indices must be >= 1, got k={k}, j={j}, p={p}")
    if tau < 0:
        raise ConfigurationError(f"tau must be >= 0, got {tau}")
    if tau == 0.0:
        return 0.0
    if p == k + j:
        return math.sqrt(k * j) * tau
    amp = 2.0 * math.sqrt(k * j) * epsilon * p / (p * p - (k + j) ** 2)
    return abs(amp * math.sin(2.0 * (k + j) * tau / epsilon))


def particle_number(p: int, tau: float) -> float:
    """Total created particles N(tau) = p(p^2-1) tau^2 / 6 (vanishes for p=1)."""
    if p < 1:
        raise ConfigurationError(f"p must be >= 1, got {p}")
    if tau < 0:
        raise ConfigurationError(f"tau must be >= 0, got {tau}")
    if tau > 0.3:
        warnings.warn(f"tau={tau} is large for the short-time expansion", stacklevel=2)
    return p * (p * p - 1) * tau * tau / 6.0


def v_sum(p: int) -> float:
    """Finite sum v(p) = sum_{k=1}^{p-1} (p-k)k ln[(p-k)k]; empty for p=1."""
    if p < 1:
        raise ConfigurationError(f"p must be >= 1, got {p}")
    total = 0.0
    for k in range(1, p):
        w = (p - k) * k
        total += w * math.log(w)
    return total


def resonant_beta_matrix(p: int, tau: float, k_max: int | None = None) -> np.ndarray:
    """|beta_kj| over the resonant set k + j = p (all ordered pairs)."""
    if k_max is None:
        k_max = max(p - 1, 1)
    mags = np.zeros((k_max, k_max))
    for k in range(1, min(p - 1, k_max) + 1):
        j = p - k
        if 1 <= j <= k_max:
            mags[k - 1, j - 1] = math.sqrt(k * j) * tau
    return mags


def diagonal_entropy_closed_form(p: int, tau: float) -> float:
    """Diagonal entropy S_d(tau) of the full field, resonant closed form."""
    N = particle_number(p, tau)
    if N == 0.0:
        return 0.0
    if N >= 2.0:
        raise RegimeError(f"N={N} >= 2 leaves the perturbative regime")
    if p < 2:
        return 0.0
    c = p * (p * p - 1) / 6.0
    return 0.5 * N * (1.0 - math.log(0.5 * N) + math.log(c) - v_sum(p) / c)


@dataclass(frozen=True)
class EntropyReport:
    """Particle number, diagonal entropy, and per-pair contributions."""

    N: float
    S_d: float
    per_pair_terms: list  # (k, j, |beta_kj|^2)


def diagonal_entropy_general(beta_magnitudes: np.ndarray) -> EntropyReport:
    """Diagonal entropy from an arbitrary |beta_kj| matrix.

    S_d = -(1 - N/2) ln(1 - N/2) - sum_kj (|b_kj|^2/2) ln(|b_kj|^2/2),
    with x ln x -> 0 at x = 0 by continuity.
    """
    mags = np.asarray(beta_magnitudes, dtype=float)
    if np.any(mags < 0):
        raise ConfigurationError("beta magnitudes must be nonnegative")
    sq = mags * mags
    N = float(sq.sum())
    if 0.5 * N >= 1.0:
        raise RegimeError(f"N/2 = {0.5 * N} >= 1 violates the perturbative regime")

    pairs = []
    S = 0.0
    vac = 1.0 - 0.5 * N
    if vac > 0.0:
        S -= vac * math.log(vac)
    for (ki, ji), b2 in np.ndenumerate(sq):
        if b2 > 0.0:
            pairs.append((ki + 1, ji + 1, float(b2)))
            S -= 0.5 * b2 * math.log(0.5 * b2)
    return EntropyReport(N=N, S_d=S, per_pair_terms=pairs)


@dataclass(frozen=True)
class PerturbativeBogoliubov:
    """First-order coefficients from quadrature of the Hamiltonian coefficients."""

    tau: float
    p: int
    k_max: int
    alpha_tilde: np.ndarray
    beta: np.ndarray


def _simpson_coefficient_integrals(trajectory, tables, n_steps):
    """Composite-Simpson integrals of the full A(t), B(t) matrices over [0, T]."""
    spectrum = InstantaneousSpectrum(trajectory)
    ts = np.linspace(0.0, trajectory.T, 2 * n_steps + 1)
    k_max = tables.k_max
    A_samples = np.empty((ts.size, k_max, k_max), dtype=complex)
    B_samples = np.empty_like(A_samples)
    for i, t in enumerate(ts):
        A_samples[i], B_samples[i] = hamiltonian_coefficient_matrices(
            tables, spectrum, t)
    w = np.ones(ts.size)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = ts[1] - ts[0]
    alpha = np.tensordot(w, A_samples, axes=1) * h / 3.0
    beta = np.tensordot(w, B_samples, axes=1) * h / 3.0
    return alpha, beta


def bogoliubov_by_quadrature(trajectory: MirrorTrajectory, k_max: int | None = None,
                             tables: CouplingTables | None = None,
                             abs_tol: float = 1e-10) -> PerturbativeBogoliubov:
    """alpha~_kj = int_0^T A_kj dt, beta_kj = int_0^T B_kj dt, numerically.

    Composite Simpson on a grid resolving the fastest retained phase, with
    step-halving until the change is below abs_tol.  Independent of the
    resonant closed form; used to validate it.
    """
    if k_max is None:
        k_max = max(2 * trajectory.p, 16)
    if tables is None or tables.k_max < k_max:
        tables = build_coupling_tables(k_max)
    omega1 = trajectory.omega1
    # ~16 Simpson panels per period of the fastest phase 2*k_max*w1
    fastest = 2.0 * k_max * omega1 + trajectory.drive_frequency
    n_steps = max(64, int(math.ceil(trajectory.T * fastest * 16 / (2.0 * math.pi))))

    alpha, beta = _simpson_coefficient_integrals(trajectory, tables, n_steps)
    for _ in range(6):
        n_steps *= 2
        alpha2, beta2 = _simpson_coefficient_integrals(trajectory, tables, n_steps)
        err = max(np.abs(alpha2 - alpha).max(), np.abs(beta2 - beta).max())
        alpha, beta = alpha2, beta2
        if err < abs_tol:
            break
    else:
        warnings.warn(f"coefficient quadrature stopped at error {err:.2e}",
                      stacklevel=2)
    return PerturbativeBogoliubov(tau=trajectory.tau, p=trajectory.p,
                                  k_max=k_max, alpha_tilde=alpha, beta=beta)
