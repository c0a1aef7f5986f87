"""Single-mode Gaussian-state pipeline: quadrature covariances, Fock-basis
populations through a stable real Legendre recurrence, per-mode diagonal
entropy, and Renyi-2 entropy.

The global state stays Gaussian and pure; each mode's reduced state is a
zero-mean Gaussian with diagonal covariance (the cross covariance vanishes
for the vacuum initial state), so everything here is a function of the two
variances sigma_q, sigma_p.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cavity import ConfigurationError
from .resonance import BogoliubovState, ResonanceTrajectory


class InvalidCovarianceError(ValueError):
    """Raised when variances violate positivity or the uncertainty bound."""


class TailBoundError(RuntimeError):
    """Raised when the population tail cannot be certified small enough."""


@dataclass(frozen=True)
class ModeCovariance:
    """Quadrature variances of one mode's reduced Gaussian state."""

    m: int
    tau: float
    sigma_q: float
    sigma_p: float
    sigma_qp: float = 0.0

    def __post_init__(self):
        if self.sigma_q <= 0.0 or self.sigma_p <= 0.0:
            raise InvalidCovarianceError(
                f"variances must be positive: sigma_q={self.sigma_q}, "
                f"sigma_p={self.sigma_p}")
        # uncertainty bound with an absolute allowance for integrator noise
        # (near tau = 0 the bound is saturated and det - 1/4 = O(tau^4))
        if self.det() < 0.25 - 1e-8:
            raise InvalidCovarianceError(
                f"sigma_q*sigma_p - sigma_qp^2 = {self.det()} < 1/4")

    def det(self) -> float:
        return self.sigma_q * self.sigma_p - self.sigma_qp ** 2

    def particle_number(self) -> float:
        """N_m = (sigma_q + sigma_p)/2 - 1/2."""
        return 0.5 * (self.sigma_q + self.sigma_p) - 0.5


@dataclass(frozen=True)
class ModePopulations:
    """Diagonal Fock populations rho_m^(n) for n = 0..n_cut with a certified
    geometric bound on the truncated tail."""

    m: int
    tau: float
    probs: np.ndarray = field(repr=False)
    tail_bound: float = 0.0

    @property
    def n_cut(self) -> int:
        return len(self.probs) - 1

    def normalization_defect(self) -> float:
        return abs(float(self.probs.sum()) + self.tail_bound - 1.0)


def variances_from_bogoliubov(state: BogoliubovState, m: int,
                              tail_warn: float = 0.01) -> ModeCovariance:
    """Direct summation sigma_q = 1/2 sum_k (alpha_km - beta_km)^2,
    sigma_p = 1/2 sum_k (alpha_km + beta_km)^2 over the retained band.

    Warns when the outermost decile of the band carries more than
    `tail_warn` of either sum (truncation suspect).
    """
    a, b = state.column(m)
    dq = (a - b) ** 2
    dp = (a + b) ** 2
    sigma_q = 0.5 * float(dq.sum())
    sigma_p = 0.5 * float(dp.sum())
    edge = max(1, state.k_max // 10)
    for name, terms, total in (("sigma_q", dq, sigma_q), ("sigma_p", dp, sigma_p)):
        tail = 0.5 * float(terms[-edge:].sum())
        if total > 0.0 and tail > tail_warn * total:
            warnings.warn(
                f"{name} truncation suspect for mode {m}: outer band holds "
                f"{tail / total:.1%} of the sum", stacklevel=2)
    return ModeCovariance(m=m, tau=state.tau, sigma_q=sigma_q, sigma_p=sigma_p)


def variances_by_ode(trajectory: ResonanceTrajectory, m: int
                     ) -> list[ModeCovariance]:
    """Covariances on the trajectory grid from the rate equations
    dsigma_q/dtau = -(alpha_1m - beta_1m)^2, dsigma_p/dtau = +(...)^2,
    integrated concurrently with the amplitude system.

    Unlike the direct sum this stays exact under truncation because only
    the k = 1 amplitudes enter.
    """
    sq, sp = trajectory.variances(m)
    return [ModeCovariance(m=m, tau=float(t), sigma_q=float(q), sigma_p=float(p))
            for t, q, p in zip(trajectory.taus, sq, sp)]


def _population_parameters(sigma_q: float, sigma_p: float):
    """(u, w, b) with u = (2sq-1)(2sp-1), w = (2sq+1)(2sp+1), b = 4 sq sp - 1."""
    u = (2.0 * sigma_q - 1.0) * (2.0 * sigma_p - 1.0)
    w = (2.0 * sigma_q + 1.0) * (2.0 * sigma_p + 1.0)
    b = 4.0 * sigma_q * sigma_p - 1.0
    return u, w, b


def _population_sequence(sigma_q: float, sigma_p: float, n_cut: int) -> np.ndarray:
    """rho^(n) for n = 0..n_cut via a real three-term recurrence.

    The closed form rho^(n) = 2 u^{n/2} P_n(b/sqrt(uw)) w^{-(n+1)/2} has an
    imaginary Legendre argument in the squeezed regime (u < 0); rescaling
    the Legendre recurrence into rho-space gives

        (n+1) rho^{(n+1)} = (2n+1)(b/w) rho^{(n)} - n (u/w) rho^{(n-1)},

    which is real and overflow-free (|b|/w < 1, |u|/w < 1).
    """
    u, w, b = _population_parameters(sigma_q, sigma_p)
    rho = np.empty(n_cut + 1)
    rho[0] = 2.0 / math.sqrt(w)
    if n_cut >= 1:
        rho[1] = rho[0] * b / w
    for n in range(1, n_cut):
        rho[n + 1] = ((2 * n + 1) * (b / w) * rho[n]
                      - n * (u / w) * rho[n - 1]) / (n + 1)
    return rho


def _tail_ratio(sigma_q: float, sigma_p: float) -> float:
    """Dominant asymptotic ratio |rho^(n+1)/rho^(n)|, strictly below 1.

    Characteristic roots of the large-n recurrence x^2 - 2(b/w)x + u/w:
    the larger modulus is (b + sqrt(b^2 - uw))/w for real roots and
    sqrt(u/w) for complex ones; 2b - u = w - 4 < w guarantees it is < 1.
    """
    u, w, b = _population_parameters(sigma_q, sigma_p)
    disc = b * b - u * w
    if disc >= 0.0:
        return (b + math.sqrt(disc)) / w
    return math.sqrt(u / w)


def populations(cov: ModeCovariance, n_cut: int | None = None,
                tail_tol: float = 1e-10) -> ModePopulations:
    """Diagonal Fock populations of the reduced Gaussian state.

    With n_cut = None the cutoff grows adaptively until five consecutive
    populations fall below 1e-14 and the geometric tail bound drops below
    `tail_tol`.  The tail bound uses the asymptotic ratio of consecutive
    even populations, sqrt(u/w) < 1 in modulus.
    """
    sq, sp = cov.sigma_q, cov.sigma_p
    ratio = _tail_ratio(sq, sp)

    def tail(probs):
        if len(probs) < 2:
            return 1.0
        last = max(abs(probs[-1]), abs(probs[-2]) * ratio)
        return last * ratio / (1.0 - ratio)

    if n_cut is not None:
        probs = _population_sequence(sq, sp, n_cut)
        return ModePopulations(m=cov.m, tau=cov.tau, probs=probs,
                               tail_bound=tail(probs))

    n = 32
    for _ in range(20):
        probs = _population_sequence(sq, sp, n)
        small = np.abs(probs) < 1e-14
        run = 0
        stop = None
        for i, flag in enumerate(small):
            run = run + 1 if flag else 0
            if run >= 5:
                stop = i
                break
        if stop is not None and tail(probs[:stop + 1]) < tail_tol:
            return ModePopulations(m=cov.m, tau=cov.tau, probs=probs[:stop + 1],
                                   tail_bound=tail(probs[:stop + 1]))
        n *= 2
    raise TailBoundError(
        f"population tail not certified below {tail_tol} by n_cut={n}")


def mode_diagonal_entropy(pop: ModePopulations, tail_tol: float = 1e-6) -> float:
    """Shannon entropy (nats) of the mode's Fock-number distribution."""
    if pop.tail_bound > tail_tol:
        raise TailBoundError(
            f"tail bound {pop.tail_bound} exceeds {tail_tol}; increase n_cut")
    p = pop.probs[pop.probs > 0.0]
    return float(-np.sum(p * np.log(p)))


def renyi2_entropy(cov: ModeCovariance) -> float:
    """S_R = (1/2) ln det Sigma; reported raw (vacuum value -ln 2), so only
    differences and slopes carry convention-free meaning."""
    d = cov.det()
    if d < 0.25 - 1e-8:
        raise InvalidCovarianceError(f"det Sigma = {d} < 1/4")
    return 0.5 * math.log(max(d, 0.25))


def asymptotic_coefficients(cov: ModeCovariance, n_cut: int
                            ) -> tuple[np.ndarray, float]:
    """Large-time population coefficients C^(n) and their Shannon sum.

    C^(n) = (1+T)^{-1/2} [(1-T)/sqrt(1-T^2)]^n P_n(1/sqrt(1-T^2)) with
    T = 1/(2 sigma_q), evaluated by the real recurrence
    (n+1) t_{n+1} = (2n+1)/(1+T) t_n - n (1-T)/(1+T) t_{n-1},
    t_0 = 1, t_1 = 1/(1+T), C^(n) = t_n / sqrt(1+T).  The recurrence is
    regular at T = 1 and returns the continuous limit there (the printed
    closed form degenerates to 0 * inf for n >= 1 at that point).

    The entropy sum -sum C ln C grows logarithmically with n_cut; the
    returned value is cutoff-dependent by construction.
    """
    T = 1.0 / (2.0 * cov.sigma_q)
    if T <= 0.0:
        raise InvalidCovarianceError(f"nonpositive T = {T}")
    t = np.empty(n_cut + 1)
    t[0] = 1.0
    if n_cut >= 1:
        t[1] = 1.0 / (1.0 + T)
    for n in range(1, n_cut):
        t[n + 1] = ((2 * n + 1) / (1.0 + T) * t[n]
                    - n * (1.0 - T) / (1.0 + T) * t[n - 1]) / (n + 1)
    C = t / math.sqrt(1.0 + T)
    pos = C[np.abs(C) > 0.0]
    script_S = float(-np.sum(np.abs(pos) * np.log(np.abs(pos))))
    return C, script_S
