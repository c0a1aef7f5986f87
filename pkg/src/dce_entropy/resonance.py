"""Slowly-varying-amplitude dynamics of the Bogoliubov coefficients under
parametric resonance (mirror driven at twice the fundamental frequency).

Only odd modes participate: the initial data are diagonal and the coupled
first-order system never populates even indices, so the state stores odd
indices 1, 3, ..., 2K-1 only.

Sign convention: beta is stored so that the quadrature-variance map
sigma_q = (1/2) sum_k (alpha_km - beta_km)^2 gives the *shrinking*
quadrature (beta_11 ~ +tau at small tau).  The opposite overall beta sign
appears in some presentations of the same system; all observables
(|beta|, variances, entropies) are unaffected.

Truncation: the excitation front travels outward at d(mode)/dtau ~ 2k,
i.e. exponentially fast, so a bare cutoff reflects it back after
tau ~ ln(k_max)/2 and corrupts everything.  The closure is therefore a
smooth absorbing layer over the top quarter of the retained band; inner
amplitudes (everything the Gaussian pipeline consumes) converge under
k_max doubling.  The system is linear with constant coefficients, so a
matrix-exponential evaluation of the same generator provides an
independent oracle for the adaptive Runge-Kutta integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.sparse import lil_matrix

from .cavity import ConfigurationError


class StiffnessError(RuntimeError):
    """Raised when the adaptive integrator fails."""

    def __init__(self, message, tau_reached=None):
        super().__init__(message)
        self.tau_reached = tau_reached


@dataclass(frozen=True)
class BogoliubovState:
    """Real alpha, beta matrices over odd modes at dimensionless time tau.

    Row/column index i maps to physical odd mode 2i + 1.  The row index is
    the dynamically coupled one; the column labels the initial condition.
    """

    tau: float
    k_max: int  # number of retained odd modes
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)

    @classmethod
    def initial(cls, k_max: int) -> "BogoliubovState":
        return cls(tau=0.0, k_max=k_max,
                   alpha=np.eye(k_max), beta=np.zeros((k_max, k_max)))

    def first_row(self, m: int) -> tuple[float, float]:
        """(alpha_1m, beta_1m) for odd physical mode m."""
        col = odd_mode_to_index(m, self.k_max)
        return float(self.alpha[0, col]), float(self.beta[0, col])

    def column(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """(alpha_km, beta_km) over all retained k for odd physical mode m."""
        col = odd_mode_to_index(m, self.k_max)
        return self.alpha[:, col].copy(), self.beta[:, col].copy()


def odd_mode_to_index(m: int, k_max: int) -> int:
    if m < 1 or m % 2 == 0:
        raise ConfigurationError(f"mode index must be odd and >= 1, got {m}")
    idx = (m - 1) // 2
    if idx >= k_max:
        raise ConfigurationError(f"mode {m} beyond cutoff (2*k_max-1 = {2 * k_max - 1})")
    return idx


def absorber_profile(k_max: int, layer_fraction: float = 0.25,
                     strength: float = 1.0) -> np.ndarray:
    """Damping rate per odd mode: zero in the bulk, smooth quadratic ramp
    scaled by the local hopping rate (~2k) inside the outer layer."""
    rates = np.zeros(k_max)
    start = int(math.floor(k_max * (1.0 - layer_fraction)))
    if start >= k_max:
        return rates
    for i in range(start, k_max):
        k = 2 * i + 1
        x = (i - start + 1) / (k_max - start)
        rates[i] = strength * 2.0 * k * x * x
    return rates


def generator_matrix(k_max: int, absorber: np.ndarray | None = None) -> np.ndarray:
    """Constant generator M of the column dynamics d/dtau [alpha; beta] = M x.

    Layout: x = (alpha_1, alpha_3, ..., beta_1, beta_3, ...).

    k = 1:   dalpha_1/dtau = -sqrt(3) alpha_3 + beta_1
             dbeta_1/dtau  = +alpha_1 - sqrt(3) beta_3
    k >= 3:  dx_k/dtau = sqrt(k(k-2)) x_{k-2} - sqrt(k(k+2)) x_{k+2}

    An optional absorber adds -gamma_k on the diagonal of both blocks.
    """
    if k_max < 2:
        raise ConfigurationError(f"need at least 2 odd modes, got k_max={k_max}")
    K = k_max
    M = np.zeros((2 * K, 2 * K))
    M[0, 1] = -math.sqrt(3.0)
    M[0, K] = 1.0
    M[K, 0] = 1.0
    M[K, K + 1] = -math.sqrt(3.0)
    for i in range(1, K):  # physical k = 2i + 1 >= 3
        k = 2 * i + 1
        lower = math.sqrt(k * (k - 2))
        upper = math.sqrt(k * (k + 2))
        for block in (0, K):
            M[block + i, block + i - 1] = lower
            if i + 1 < K:
                M[block + i, block + i + 1] = -upper
    if absorber is not None:
        M[np.arange(K), np.arange(K)] -= absorber
        M[K + np.arange(K), K + np.arange(K)] -= absorber
    return M


def generator_sparse(k_max: int, absorber: np.ndarray | None = None):
    """CSR version of the generator for large cutoffs."""
    if k_max < 2:
        raise ConfigurationError(f"need at least 2 odd modes, got k_max={k_max}")
    M = lil_matrix((2 * k_max, 2 * k_max))
    K = k_max
    M[0, 1] = -math.sqrt(3.0)
    M[0, K] = 1.0
    M[K, 0] = 1.0
    M[K, K + 1] = -math.sqrt(3.0)
    for i in range(1, K):
        k = 2 * i + 1
        lower = math.sqrt(k * (k - 2))
        upper = math.sqrt(k * (k + 2))
        for block in (0, K):
            M[block + i, block + i - 1] = lower
            if i + 1 < K:
                M[block + i, block + i + 1] = -upper
    if absorber is not None:
        for i in range(K):
            M[i, i] -= absorber[i]
            M[K + i, K + i] -= absorber[i]
    return M.tocsr()


def sva_rhs(state: BogoliubovState) -> tuple[np.ndarray, np.ndarray]:
    """(dalpha/dtau, dbeta/dtau) for a full state; linear in the entries."""
    M = generator_matrix(state.k_max)
    K = state.k_max
    x = np.vstack([state.alpha, state.beta])
    dx = M @ x
    return dx[:K], dx[K:]


class ResonanceTrajectory:
    """Sampled trajectory of selected columns of the SVA system.

    For each requested odd mode m the full column (alpha_km, beta_km) is
    stored on the output grid, together with the concurrently integrated
    quadrature variances

        sigma_q(tau) = 1/2 - int_0^tau (alpha_1m - beta_1m)^2
        sigma_p(tau) = 1/2 + int_0^tau (alpha_1m + beta_1m)^2

    which remain exact under truncation/absorption because they only
    consume the k = 1 amplitudes.
    """

    def __init__(self, k_max, taus, modes, columns, variances, tol,
                 absorber_start):
        self.k_max = k_max
        self.taus = taus  # (n_tau,)
        self.modes = tuple(modes)
        self._cols = dict(zip(modes, columns))  # each (n_tau, 2K)
        self._vars = dict(zip(modes, variances))  # each (n_tau, 2)
        self.tol = tol
        self.absorber_start = absorber_start  # first absorbing odd-mode slot

    def _tau_index(self, tau: float) -> int:
        i = int(np.argmin(np.abs(self.taus - tau)))
        if abs(self.taus[i] - tau) > 1e-9 * max(1.0, abs(tau)):
            raise ConfigurationError(
                f"tau={tau} not on the output grid (nearest {self.taus[i]})")
        return i

    def column(self, m: int, tau: float) -> tuple[np.ndarray, np.ndarray]:
        """(alpha_km, beta_km) over retained k for odd mode m at grid time tau."""
        x = self._cols[m][self._tau_index(tau)]
        K = self.k_max
        return x[:K].copy(), x[K:].copy()

    def first_row(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (alpha_1m, beta_1m) sampled on the tau grid."""
        x = self._cols[m]
        return x[:, 0].copy(), x[:, self.k_max].copy()

    def variances(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """(sigma_q, sigma_p) arrays on the tau grid, from the rate equations."""
        v = self._vars[m]
        return 0.5 - v[:, 0], 0.5 + v[:, 1]

    def variances_at(self, m: int, tau: float) -> tuple[float, float]:
        v = self._vars[m][self._tau_index(tau)]
        return 0.5 - float(v[0]), 0.5 + float(v[1])

    def unitarity_defect(self, m: int, tau: float) -> float:
        a, b = self.column(m, tau)
        return abs(float((a * a - b * b).sum()) - 1.0)


def integrate(k_max: int = 512, tau_end: float = 10.0, tol: float = 1e-9,
              modes: tuple = (1, 3, 5), use_absorber: bool = True,
              taus: np.ndarray | None = None) -> ResonanceTrajectory:
    """Adaptive integration of the columns for the requested odd modes.

    The outward front reaches retained slot i at tau ~ ln(2i+1)/2, so a
    bare cutoff is only clean to tau ~ ln(2 k_max)/2; beyond that the
    absorber removes the overflow and the first-row amplitudes plus the
    rate-equation variances stay converged (verified by k_max doubling).
    """
    if not (1e-12 <= tol <= 1e-6):
        raise ConfigurationError(f"tol={tol} outside [1e-12, 1e-6]")
    if tau_end < 0:
        raise ConfigurationError(f"tau_end must be >= 0, got {tau_end}")
    if tau_end == 0.0:
        start = int(math.floor(k_max * 0.75)) if use_absorber else k_max
        cols = []
        for m in modes:
            x = np.zeros((1, 2 * k_max))
            x[0, odd_mode_to_index(m, k_max)] = 1.0
            cols.append(x)
        zero = [np.zeros((1, 2)) for _ in modes]
        return ResonanceTrajectory(k_max, np.array([0.0]), modes, cols, zero,
                                   tol, start)
    if taus is None:
        taus = np.linspace(0.0, tau_end, max(2, int(round(tau_end * 32)) + 1))
    else:
        taus = np.asarray(taus, dtype=float)
        if taus[0] != 0.0 or np.any(np.diff(taus) <= 0) or taus[-1] > tau_end:
            raise ConfigurationError("taus must be increasing, start at 0, "
                                     "and end at or before tau_end")
    absorber = absorber_profile(k_max) if use_absorber else None
    M = generator_sparse(k_max, absorber)
    K = k_max
    columns = []
    variances = []
    for m in modes:
        col = odd_mode_to_index(m, k_max)
        y0 = np.zeros(2 * K + 2)
        y0[col] = 1.0

        def rhs(_t, y):
            dy = np.empty_like(y)
            dy[:2 * K] = M @ y[:2 * K]
            dy[2 * K] = (y[0] - y[K]) ** 2
            dy[2 * K + 1] = (y[0] + y[K]) ** 2
            return dy

        sol = solve_ivp(rhs, (0.0, taus[-1]), y0, t_eval=taus,
                        method="DOP853", rtol=tol, atol=tol)
        if not sol.success:
            raise StiffnessError(f"integration failed for mode {m}: {sol.message}",
                                 tau_reached=sol.t[-1] if len(sol.t) else 0.0)
        columns.append(sol.y[:2 * K].T.copy())
        variances.append(sol.y[2 * K:].T.copy())
    start = int(math.floor(k_max * 0.75)) if use_absorber else k_max
    return ResonanceTrajectory(k_max, taus, modes, columns, variances, tol, start)


def integrate_full(k_max: int, tau_end: float, tol: float = 1e-9,
                   use_absorber: bool = False) -> BogoliubovState:
    """Full-matrix state at tau_end; intended for small cutoffs and tests."""
    modes = tuple(2 * i + 1 for i in range(k_max))
    traj = integrate(k_max, tau_end, tol=tol, modes=modes,
                     use_absorber=use_absorber,
                     taus=None if tau_end == 0 else np.array([0.0, tau_end]))
    alpha = np.empty((k_max, k_max))
    beta = np.empty((k_max, k_max))
    for i, m in enumerate(modes):
        a, b = traj.column(m, tau_end)
        alpha[:, i] = a
        beta[:, i] = b
    return BogoliubovState(tau=tau_end, k_max=k_max, alpha=alpha, beta=beta)


def state_by_expm(k_max: int, tau: float,
                  use_absorber: bool = False) -> BogoliubovState:
    """Exact truncated-system solution expm(M tau); oracle for `integrate`."""
    absorber = absorber_profile(k_max) if use_absorber else None
    M = generator_matrix(k_max, absorber)
    K = k_max
    E = expm(M * tau)
    return BogoliubovState(tau=tau, k_max=K, alpha=E[:K, :K], beta=E[K:, :K])


def J_coefficient(mu: int) -> float:
    """J_mu = (2 mu)! / (2^mu (mu!)^2), evaluated via log-gamma."""
    if mu < 0:
        raise ConfigurationError(f"mu must be >= 0, got {mu}")
    return math.exp(math.lgamma(2 * mu + 1) - mu * math.log(2.0)
                    - 2.0 * math.lgamma(mu + 1))


def K_coefficient(mu: int) -> float:
    """K_mu = (-1)^mu sqrt(2 mu + 1) / (mu + 1)."""
    if mu < 0:
        raise ConfigurationError(f"mu must be >= 0, got {mu}")
    return (-1.0) ** mu * math.sqrt(2.0 * mu + 1.0) / (mu + 1.0)


def asymptotic_small_tau(mu: int, tau: float) -> tuple[float, float]:
    """Leading small-tau laws for (alpha_1m, beta_1m), m = 2 mu + 1.

    alpha = (mu+1) K_mu J_mu tau^mu, beta = +K_mu J_mu tau^(mu+1) in the
    package beta sign convention (see module docstring).
    """
    if tau < 0:
        raise ConfigurationError(f"tau must be >= 0, got {tau}")
    J = J_coefficient(mu)
    K = K_coefficient(mu)
    if tau == 0.0:
        return (1.0 if mu == 0 else 0.0), 0.0
    return (mu + 1) * K * J * tau ** mu, K * J * tau ** (mu + 1)


def asymptotic_large_tau(mu: int) -> tuple[float, float]:
    """Common large-tau limit (2/pi)(-1)^mu / sqrt(2 mu + 1) for alpha and beta."""
    val = 2.0 / math.pi * (-1.0) ** mu / math.sqrt(2.0 * mu + 1.0)
    return val, val


def unitarity_defect(state: BogoliubovState) -> np.ndarray:
    """|sum_k (alpha_km^2 - beta_km^2) - 1| per column; truncation diagnostic."""
    return np.abs((state.alpha ** 2 - state.beta ** 2).sum(axis=0) - 1.0)
