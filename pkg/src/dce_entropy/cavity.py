"""Cavity geometry, mirror trajectory, and intermode coupling coefficients.

Everything downstream (perturbation theory, Fock evolution, the exact
mode-function integrator) consumes the objects defined here: the harmonic
mirror trajectory L(t), the instantaneous frequencies/phases, and the
g/h coupling tables.

Mode indices are 1-based in every public signature; the 0-based shift
happens only at the numpy-array boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad


class ConfigurationError(ValueError):
    """Raised when cutoffs or trajectory parameters are inconsistent."""


@dataclass(frozen=True)
class MirrorTrajectory:
    """Harmonic mirror motion L(t) = L0 [1 + epsilon sin(p w1 t)].

    Natural units (c = 1).  With the default L0 = pi the fundamental
    frequency w1 = pi/L0 equals 1 and times are in units of 1/w1.
    """

    L0: float = math.pi
    epsilon: float = 1e-3
    p: int = 2
    T: float = 0.0

    def __post_init__(self):
        if self.L0 <= 0:
            raise ConfigurationError(f"L0 must be positive, got {self.L0}")
        if self.epsilon <= 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if self.epsilon > 0.1:
            raise ConfigurationError(
                f"epsilon={self.epsilon} outside the small-amplitude regime (max 0.1)"
            )
        if self.epsilon > 0.01:
            warnings.warn(
                f"epsilon={self.epsilon} > 0.01: perturbative accuracy degrades",
                stacklevel=2,
            )
        if self.p < 1:
            raise ConfigurationError(f"harmonic index p must be >= 1, got {self.p}")
        if self.T < 0:
            raise ConfigurationError(f"duration T must be >= 0, got {self.T}")

    @property
    def omega1(self) -> float:
        """Fundamental frequency of the static cavity, pi/L0."""
        return math.pi / self.L0

    @property
    def drive_frequency(self) -> float:
        return self.p * self.omega1

    @property
    def tau(self) -> float:
        """Dimensionless time epsilon*w1*T/2 associated with the full run."""
        return 0.5 * self.epsilon * self.omega1 * self.T

    def displacement(self, t):
        """l(t) = sin(p w1 t)."""
        return np.sin(self.drive_frequency * np.asarray(t, dtype=float))

    def length(self, t):
        """Cavity length L(t)."""
        return self.L0 * (1.0 + self.epsilon * self.displacement(t))

    def length_rate(self, t):
        """dL/dt, analytic."""
        a = self.drive_frequency
        return self.L0 * self.epsilon * a * np.cos(a * np.asarray(t, dtype=float))

    def lam(self, t):
        """Logarithmic velocity lambda(t) = Ldot/L."""
        return self.length_rate(t) / self.length(t)

    def lam_dot(self, t):
        """d(lambda)/dt by the quotient rule (never numerical)."""
        t = np.asarray(t, dtype=float)
        a = self.drive_frequency
        L = self.length(t)
        Ldot = self.length_rate(t)
        Lddot = -self.L0 * self.epsilon * a * a * np.sin(a * t)
        return Lddot / L - (Ldot / L) ** 2

    @classmethod
    def complete_cycles(cls, L0: float, epsilon: float, p: int, m: int) -> "MirrorTrajectory":
        """Trajectory lasting exactly m full drive periods (p w1 T = 2 pi m)."""
        if m < 1:
            raise ConfigurationError(f"cycle count m must be >= 1, got {m}")
        omega1 = math.pi / L0
        T = 2.0 * math.pi * m / (p * omega1)
        return cls(L0=L0, epsilon=epsilon, p=p, T=T)

    @classmethod
    def for_tau(cls, tau: float, epsilon: float = 1e-3, p: int = 2,
                L0: float = math.pi) -> "MirrorTrajectory":
        """Trajectory whose duration realizes the dimensionless time tau."""
        omega1 = math.pi / L0
        return cls(L0=L0, epsilon=epsilon, p=p, T=2.0 * tau / (epsilon * omega1))

    @classmethod
    def nearest_complete_cycles(cls, tau: float, epsilon: float, p: int,
                                L0: float = math.pi,
                                align_fundamental: bool = False
                                ) -> "MirrorTrajectory":
        """Closest complete-cycles trajectory to the requested tau (m >= 1).

        With align_fundamental the cycle count m is rounded to a multiple
        of p, making w1*T a multiple of 2 pi: then every mode phase
        (k+j)*w1*T completes and the non-resonant first-order Bogoliubov
        boundary terms cancel instead of doubling, which matters when
        extracting small particle numbers with the exact oracles.
        """
        omega1 = math.pi / L0
        T = 2.0 * tau / (epsilon * omega1)
        cycles = p * omega1 * T / (2.0 * math.pi)
        if align_fundamental:
            m = p * max(1, round(cycles / p))
        else:
            m = max(1, round(cycles))
        return cls.complete_cycles(L0, epsilon, p, m)


def coupling_g(j: int, k: int) -> float:
    """Antisymmetric coupling g_jk = (-1)^(j-k) 2kj/(j^2-k^2), zero on the diagonal."""
    if j == k:
        return 0.0
    return (-1.0) ** (j - k) * 2.0 * k * j / (j * j - k * k)


@dataclass(frozen=True)
class CouplingTables:
    """Truncated g and h tables; h_jk = sum_l g_jl g_kl up to l_sum_max."""

    k_max: int
    l_sum_max: int
    g: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)

    def g_at(self, j: int, k: int) -> float:
        """g_jk with 1-based indices."""
        return float(self.g[j - 1, k - 1])

    def h_at(self, j: int, k: int) -> float:
        """h_jk with 1-based indices."""
        return float(self.h[j - 1, k - 1])


def build_coupling_tables(k_max: int, l_sum_max: int | None = None) -> CouplingTables:
    """Build the g_jk matrix and the truncated h_jk = sum_l g_jl g_kl table.

    The h sum tail decays like 1/l, so l_sum_max defaults to 10*k_max and
    must be at least 4*k_max.
    """
    if k_max < 1:
        raise ConfigurationError(f"k_max must be >= 1, got {k_max}")
    if l_sum_max is None:
        l_sum_max = 10 * k_max
    if l_sum_max < 4 * k_max:
        raise ConfigurationError(
            f"l_sum_max={l_sum_max} too small; need at least 4*k_max={4 * k_max}"
        )

    # g over the extended range needed by the h sum, antisymmetric by formula
    idx = np.arange(1, l_sum_max + 1, dtype=float)
    jj, kk = np.meshgrid(idx, idx, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        g_ext = (-1.0) ** (jj - kk) * 2.0 * kk * jj / (jj * jj - kk * kk)
    np.fill_diagonal(g_ext, 0.0)

    g = g_ext[:k_max, :k_max].copy()
    h = g_ext[:k_max, :] @ g_ext[:k_max, :].T
    return CouplingTables(k_max=k_max, l_sum_max=l_sum_max, g=g, h=h)


class InstantaneousSpectrum:
    """Instantaneous frequencies w_k(t), accumulated phases Omega_k(t), lambda(t).

    The accumulated phase for the harmonic trajectory has the closed form

        Omega_k(t) = (k pi / (L0 a)) * G(a t),   a = p w1,

    with G the continuous antiderivative of 1/(1 + eps sin).  An adaptive
    quadrature path is kept as an independent cross-check (abs tol 1e-12).
    """

    def __init__(self, trajectory: MirrorTrajectory):
        self.trajectory = trajectory

    def omega(self, k: int, t):
        """w_k(t) = k pi / L(t)."""
        return k * math.pi / self.trajectory.length(t)

    def omega_in(self, k: int) -> float:
        return k * math.pi / self.trajectory.L0

    def lam(self, t):
        return self.trajectory.lam(t)

    def _phase_kernel(self, theta):
        """Continuous G(theta) = int_0^theta dx / (1 + eps sin x)."""
        eps = self.trajectory.epsilon
        c = math.sqrt(1.0 - eps * eps)
        theta = np.asarray(theta, dtype=float)
        n, r = np.divmod(theta, 2.0 * math.pi)
        # primitive on one period, continuous across r = pi
        base = np.arctan((np.tan(0.5 * r) + eps) / c) - math.atan(eps / c)
        branch = np.where(r > math.pi, math.pi, 0.0)
        branch = np.where(np.isclose(r, math.pi), 0.5 * math.pi
                          + math.atan(eps / c), branch)  # exact half period
        g_period = np.where(np.isclose(r, math.pi),
                            (2.0 / c) * (0.5 * math.pi - math.atan(eps / c)),
                            (2.0 / c) * (base + branch))
        return n * 2.0 * math.pi / c + g_period

    def Omega(self, k: int, t):
        """Accumulated phase Omega_k(t), closed form for the harmonic trajectory."""
        a = self.trajectory.drive_frequency
        scale = k * math.pi / (self.trajectory.L0 * a)
        return scale * self._phase_kernel(a * np.asarray(t, dtype=float))

    def Omega_quadrature(self, k: int, t: float, abs_tol: float = 1e-12) -> float:
        """Omega_k(t) by adaptive quadrature; independent of the closed form."""
        val, _ = quad(lambda s: self.omega(k, s), 0.0, t,
                      epsabs=abs_tol, epsrel=1e-12, limit=500)
        return val


def mu_coefficient(tables: CouplingTables, spectrum: InstantaneousSpectrum,
                   k: int, j: int, t: float) -> float:
    """mu_kj(t) = -(sqrt(j/k) g_jk + delta_jk/2) * Ldot/L."""
    if not (1 <= k <= tables.k_max and 1 <= j <= tables.k_max):
        raise ConfigurationError(
            f"indices (k={k}, j={j}) outside cutoff k_max={tables.k_max}"
        )
    lam = spectrum.lam(t)
    delta = 0.5 if j == k else 0.0
    return -(math.sqrt(j / k) * tables.g_at(j, k) + delta) * lam


def mu_matrix(tables: CouplingTables, spectrum: InstantaneousSpectrum, t) -> np.ndarray:
    """Full mu_kj(t) matrix (row index k, column index j), vectorized."""
    idx = np.arange(1, tables.k_max + 1, dtype=float)
    kk, jj = np.meshgrid(idx, idx, indexing="ij")
    base = np.sqrt(jj / kk) * tables.g.T  # g_jk at position [k,j]
    base = base + 0.5 * np.eye(tables.k_max)
    return -base * spectrum.lam(t)


def hamiltonian_coefficients(tables: CouplingTables, spectrum: InstantaneousSpectrum,
                             k: int, j: int, t: float) -> tuple[complex, complex]:
    """Scattering and pair-creation coefficients (A_kj, B_kj) at time t.

    A_kj = (mu_kj - mu_jk)/2 * exp(-i[Omega_k - Omega_j])
    B_kj = (mu_kj + mu_jk)/2 * exp(-i[Omega_k + Omega_j])
    """
    m_kj = mu_coefficient(tables, spectrum, k, j, t)
    m_jk = mu_coefficient(tables, spectrum, j, k, t)
    om_k = float(spectrum.Omega(k, t))
    om_j = float(spectrum.Omega(j, t))
    A = 0.5 * (m_kj - m_jk) * np.exp(-1j * (om_k - om_j))
    B = 0.5 * (m_kj + m_jk) * np.exp(-1j * (om_k + om_j))
    return complex(A), complex(B)


def hamiltonian_coefficient_matrices(tables: CouplingTables,
                                     spectrum: InstantaneousSpectrum,
                                     t: float) -> tuple[np.ndarray, np.ndarray]:
    """All (A_kj, B_kj) at once; used in the Fock-evolution hot loop."""
    mu = mu_matrix(tables, spectrum, t)
    # Omega_k is linear in k: Omega_k(t) = k * Omega_1(t)
    om = np.arange(1, tables.k_max + 1, dtype=float) * float(spectrum.Omega(1, t))
    phase_diff = om[:, None] - om[None, :]
    phase_sum = om[:, None] + om[None, :]
    A = 0.5 * (mu - mu.T) * np.exp(-1j * phase_diff)
    B = 0.5 * (mu + mu.T) * np.exp(-1j * phase_sum)
    return A, B
