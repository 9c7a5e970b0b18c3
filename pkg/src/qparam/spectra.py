"""Energy-number distributions of the parametrically driven quantum oscillator.

Two regimes are covered, each controlled by one dimensionless number ``Gamma``:

* displaced: the wave packet centre ``alpha`` carries the instability and the
  distribution is the displaced-number-state law (Laguerre form);
* squeezed: the width ``rho`` carries it, ``alpha = 0``, and only transitions
  between states of equal parity survive.

Closed forms are evaluated in the log domain and checked against direct
quadrature of the overlap integral (:func:`overlap_matrix`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import gammaln

from ._special import log_abs_laguerre, log_central_binomial, log_falling, log_poisson
from .classical import OscState
from .errors import ConvergenceError, DomainError, OracleError, UsageError
from .model import TimePoint

DISPLACED = "displaced"
SQUEEZED = "squeezed"
REGIMES = (DISPLACED, SQUEEZED)

N_MAX_CAP = 1_000_000
_LOG_UNDERFLOW = -700.0


@dataclass(frozen=True)
class GammaValue:
    """The controlling parameter together with the energy scales it was formed from.

    ``e_cl`` is the classical energy of the active auxiliary function and
    ``beta_omega_tilde`` the instantaneous quantum of energy.
    """

    gamma: float
    regime: str
    e_cl: float
    beta_omega_tilde: float = 1.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise UsageError(f"unknown regime {self.regime!r}")
        if not math.isfinite(self.gamma):
            raise DomainError("gamma must be finite")
        floor = 0.0 if self.regime == DISPLACED else 1.0
        if self.gamma < floor:
            raise DomainError(f"{self.regime} gamma must be >= {floor}, got {self.gamma!r}")
        if not self.beta_omega_tilde > 0:
            raise DomainError("beta_omega_tilde must be positive")

    @classmethod
    def displaced(cls, gamma: float, beta_omega_tilde: float = 1.0) -> "GammaValue":
        return cls(float(gamma), DISPLACED, float(gamma) * beta_omega_tilde, beta_omega_tilde)

    @classmethod
    def squeezed(cls, gamma: float, beta_omega_tilde: float = 1.0) -> "GammaValue":
        """Squeezed value with ``e_cl`` set from the large-width identification ``e_cl = 2 beta omega_tilde Gamma``."""
        return cls(float(gamma), SQUEEZED, 2.0 * float(gamma) * beta_omega_tilde, beta_omega_tilde)

    @classmethod
    def squeezed_from_energy(cls, e_cl: float, beta_omega_tilde: float = 1.0) -> "GammaValue":
        """Inverse of :meth:`squeezed`; used when sweeping ``e_cl / omega_tilde`` directly."""
        return cls(max(1.0, e_cl / (2.0 * beta_omega_tilde)), SQUEEZED, float(e_cl), beta_omega_tilde)


# -- Gamma from auxiliary functions ---------------------------------------------------


def gamma_displaced(alpha_state: OscState, tp: TimePoint, omega_tilde_avg: float) -> GammaValue:
    if not (tp.beta > 0 and omega_tilde_avg > 0):
        raise DomainError("beta and the averaged frequency must be positive")
    e_cl = 0.5 * (alpha_state.derivative ** 2 + omega_tilde_avg ** 2 * alpha_state.value ** 2)
    bw = tp.beta * omega_tilde_avg
    return GammaValue(e_cl / bw, DISPLACED, e_cl, bw)


def gamma_squeezed(rho_state: OscState, tp: TimePoint) -> GammaValue:
    rho = rho_state.value
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    if not tp.omega > 0:
        raise DomainError("omega must be positive")
    bw = tp.beta * tp.omega_tilde
    e_cl = 0.5 * (rho_state.derivative ** 2 + tp.omega_tilde ** 2 * rho ** 2)
    # 1 + (T-frame kinetic term) + (width mismatch)^2 keeps Gamma >= 1 exactly
    s = math.sqrt(tp.omega) * rho
    gamma = 1.0 + rho_state.derivative ** 2 / (4.0 * bw) + 0.25 * (s - 1.0 / s) ** 2
    return GammaValue(gamma, SQUEEZED, e_cl, bw)


# -- closed-form probabilities -----------------------------------------------------------


def _check_index(name: str, k) -> np.ndarray:
    arr = np.asarray(k)
    if not np.issubdtype(arr.dtype, np.integer):
        if np.any(arr != np.floor(arr)):
            raise DomainError(f"{name} must be integer")
        arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise DomainError(f"{name} must be >= 0")
    return arr


def _log_factorial_ratio(nu: np.ndarray, mu: np.ndarray, direct: int = 32) -> np.ndarray:
    """``log(nu!/mu!)``, summed term by term when ``nu - mu`` is small."""
    d = nu - mu
    out = gammaln(nu + 1.0) - gammaln(mu + 1.0)
    short = d <= direct
    if np.any(short):
        acc = np.zeros(int(short.sum()))
        base, ds = mu[short].astype(float), d[short]
        for k in range(1, int(ds.max(initial=0)) + 1):
            acc += np.where(ds >= k, np.log(base + k), 0.0)
        out[short] = acc
    return out


def _displaced_probs(m: int, ns: np.ndarray, g: float) -> np.ndarray:
    if g == 0.0:
        return (ns == m).astype(float)
    mu = np.minimum(ns, m)
    nu = np.maximum(ns, m)
    sign, log_lag = log_abs_laguerre(mu, nu - mu, g)
    if g < 1.0:
        # the saddle-point form cancels two terms of size nu*log(1/g) here
        logp = (nu - mu) * math.log(g) - g - _log_factorial_ratio(nu, mu) + 2.0 * log_lag
    else:
        logp = log_poisson(nu, g) + gammaln(mu + 1.0) - mu * math.log(g) + 2.0 * log_lag
    with np.errstate(under="ignore"):
        return np.where((logp < _LOG_UNDERFLOW) | (sign == 0), 0.0, np.exp(logp))


def _squeezed_probs(m: int, ns: np.ndarray, g: float) -> np.ndarray:
    out = np.zeros(ns.shape)
    same = (ns % 2) == (m % 2)
    if not np.any(same):
        return out
    if g == 1.0:
        out[ns == m] = 1.0
        return out
    odd = m % 2
    big_m, big_n = m // 2, ns[same] // 2
    log_t = math.log1p(-1.0 / g)
    log_g = math.log(g)

    jmax = min(big_m, int(big_n.max()))
    terms = np.full((jmax + 1, big_n.size), -np.inf)
    half = 0.5 * (big_n + big_m)
    for j in range(jmax + 1):
        coeff = j * math.log(4.0) - gammaln(2 * j + 1 + odd) + float(log_falling(big_m, j))
        expo = half - j
        with np.errstate(invalid="ignore"):
            power = np.where(expo == 0, 0.0, expo * log_t)
        terms[j] = np.where(big_n >= j, coeff + log_falling(big_n, j) + power - j * log_g, -np.inf)
    peak = terms.max(axis=0)
    signs = np.where(np.arange(jmax + 1) % 2 == 0, 1.0, -1.0)[:, None]
    with np.errstate(under="ignore", invalid="ignore"):
        acc = np.sum(signs * np.exp(terms - peak), axis=0)
    logp = (log_central_binomial(big_n) + float(log_central_binomial(big_m)) - (0.5 + odd) * log_g
            + 2.0 * peak)
    if odd:
        logp = logp + np.log(2.0 * big_n + 1.0) + math.log(2.0 * big_m + 1.0)
    with np.errstate(under="ignore", invalid="ignore"):
        vals = np.where((logp < _LOG_UNDERFLOW) | ~np.isfinite(peak), 0.0, np.exp(logp) * acc * acc)
    out[same] = vals
    return out


def _scalar_or_array(ns, vals):
    return float(vals) if np.ndim(ns) == 0 else vals


def prob_displaced(m: int, n, gamma: GammaValue):
    """Displaced-number-state transition probability, symmetric in ``m`` and ``n``.

    ``n`` may be an integer or an integer array.
    """
    if gamma.regime != DISPLACED:
        raise UsageError(f"prob_displaced needs a displaced Gamma, got {gamma.regime!r}")
    m = int(_check_index("m", m))
    ns = _check_index("n", n)
    vals = _displaced_probs(m, np.atleast_1d(ns), gamma.gamma)
    return _scalar_or_array(ns, vals.reshape(ns.shape) if ns.ndim else vals[0])


def prob_squeezed(m: int, n, gamma: GammaValue):
    """Squeezed-regime probability; exactly zero when ``m`` and ``n`` differ in parity.

    The sum is written in powers of ``t = 1 - 1/Gamma`` so that ``Gamma = 1``
    (no squeezing) is a regular point and returns ``P_m(n) = delta_mn``.
    """
    if gamma.regime != SQUEEZED:
        raise UsageError(f"prob_squeezed needs a squeezed Gamma, got {gamma.regime!r}")
    if gamma.gamma < 1.0:
        raise DomainError("squeezed Gamma must be >= 1")
    m = int(_check_index("m", m))
    ns = _check_index("n", n)
    vals = _squeezed_probs(m, np.atleast_1d(ns), gamma.gamma)
    return _scalar_or_array(ns, vals.reshape(ns.shape) if ns.ndim else vals[0])


def probabilities(m: int, ns, gamma: GammaValue) -> np.ndarray:
    fn = prob_displaced if gamma.regime == DISPLACED else prob_squeezed
    return np.asarray(fn(m, np.asarray(ns, dtype=np.int64), gamma), dtype=float)


# -- truncated distributions and moments ----------------------------------------------------


@dataclass(frozen=True)
class EnergyDistribution:
    m: int
    gamma: GammaValue
    probs: np.ndarray
    n_max: int
    tail_mass: float

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n_max + 1)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.probs)

    @property
    def energies(self) -> np.ndarray:
        return self.gamma.beta_omega_tilde * (self.n + 0.5)

    @property
    def mean_error_bar(self) -> float:
        """Bound on the mean-energy contribution of the discarded tail (first order in tail mass)."""
        return max(self.tail_mass, 0.0) * (self.n_max + 1.5) * self.gamma.beta_omega_tilde


def _initial_span(m: int, gamma: GammaValue) -> int:
    g = gamma.gamma
    if gamma.regime == DISPLACED:
        return int(m + g + 15.0 * math.sqrt((2 * m + 1) * g + 1.0) + 40)
    if g == 1.0:
        return m + 20
    pairs = 45.0 / -math.log1p(-1.0 / g)
    return int(m + 2 * pairs + 60)


def build_distribution(m: int, gamma: GammaValue, tail_tol: float = 1e-12) -> EnergyDistribution:
    """Evaluate ``P_m(0..n_max)``, stopping at the first ``n_max`` where the
    cumulative mass reaches ``1 - tail_tol`` and the last ten terms are each
    below ``tail_tol / 100``.
    """
    if not (0.0 < tail_tol <= 1e-6):
        raise DomainError("tail_tol must lie in (0, 1e-6]")
    m = int(_check_index("m", m))
    span = min(_initial_span(m, gamma), N_MAX_CAP)
    while True:
        ns = np.arange(span + 1)
        p = probabilities(m, ns, gamma)
        cum = np.cumsum(p)
        small = (p < tail_tol / 100.0).astype(np.int64)
        run = np.concatenate(([0], np.cumsum(small)))
        trailing_ok = np.zeros(span + 1, dtype=bool)
        trailing_ok[9:] = (run[10:] - run[:-10]) == 10
        ok = np.flatnonzero(trailing_ok & (cum >= 1.0 - tail_tol))
        if ok.size:
            n_max = int(ok[0])
            probs = p[: n_max + 1].copy()
            return EnergyDistribution(m, gamma, probs, n_max, float(1.0 - cum[n_max]))
        if span >= N_MAX_CAP:
            raise ConvergenceError(
                f"distribution m={m}, {gamma.regime} Gamma={gamma.gamma!r} not converged at "
                f"n_max={span}: cumulative={cum[-1]!r}, last term={p[-1]!r}, tail_tol={tail_tol!r}")
        span = min(2 * span, N_MAX_CAP)


def mean_energy(dist: EnergyDistribution) -> float:
    return float(dist.gamma.beta_omega_tilde * np.sum(dist.probs * (dist.n + 0.5)))


def number_variance(dist: EnergyDistribution) -> float:
    """``sum P n^2 - (sum P n)^2`` evaluated in centred form."""
    n = dist.n
    mass = float(np.sum(dist.probs))
    mean_n = float(np.sum(dist.probs * n))
    return float(np.sum(dist.probs * (n - mean_n) ** 2)) + mean_n ** 2 * (1.0 - mass)


def energy_stddev(dist: EnergyDistribution) -> float:
    return dist.gamma.beta_omega_tilde * math.sqrt(max(number_variance(dist), 0.0))


def asymptotic_moments(m: int, regime: str, e_cl: float, beta_omega_tilde: float) -> tuple[float, float]:
    """Large-energy limits of (mean, standard deviation) of the energy."""
    if not e_cl > 0:
        raise DomainError("e_cl must be positive")
    if regime == DISPLACED:
        return e_cl, math.sqrt(beta_omega_tilde * (2 * m + 1) * e_cl)
    if regime == SQUEEZED:
        return e_cl * (m + 0.5), e_cl * math.sqrt(((m + 1) ** 2 - m) / 2.0)
    raise UsageError(f"unknown regime {regime!r}")


# -- quadrature oracle ----------------------------------------------------------------------------


@dataclass(frozen=True)
class WaveParams:
    """Parameters of the evolved Gaussian-Hermite state, derivatives in rescaled time."""

    rho: float
    rho_dot: float = 0.0
    alpha: float = 0.0
    alpha_dot: float = 0.0
    omega: float = 1.0

    @classmethod
    def displaced(cls, gamma: float, omega: float = 1.0, angle: float = 0.7) -> "WaveParams":
        """Width pinned at the eigenstate value; ``angle`` splits Gamma between position and current."""
        r = math.sqrt(2.0 * gamma)
        return cls(omega ** -0.5, 0.0, r * math.cos(angle) / math.sqrt(omega),
                   r * math.sin(angle) * math.sqrt(omega), omega)

    @classmethod
    def squeezed(cls, gamma: float, omega: float = 1.0, rho: float | None = None) -> "WaveParams":
        """Centre at rest at the origin; ``rho_dot`` is solved from Gamma for the given width."""
        rho = omega ** -0.5 if rho is None else rho
        k2 = 4.0 * omega * (gamma - 0.5 - 1.0 / (4.0 * omega * rho * rho)) - (omega * rho) ** 2
        if k2 < -1e-12:
            raise DomainError(f"no real rho_dot gives Gamma={gamma} at rho={rho}")
        return cls(rho, math.sqrt(max(k2, 0.0)), 0.0, 0.0, omega)

    def gamma_value(self, regime: str) -> GammaValue:
        w = self.omega
        if regime == DISPLACED:
            return GammaValue.displaced((self.alpha_dot ** 2 + w * w * self.alpha ** 2) / (2.0 * w))
        s = math.sqrt(w) * self.rho
        g = 1.0 + self.rho_dot ** 2 / (4.0 * w) + 0.25 * (s - 1.0 / s) ** 2
        return GammaValue.squeezed(g)


def hermite_functions(x, n_max: int) -> np.ndarray:
    """Orthonormal Hermite functions psi_0..psi_n_max at ``x`` (stable recurrence)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n_max):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def overlap_matrix(size: int, wf: WaveParams, *, squared_linear_phase: bool = False,
                   epsabs: float = 1e-12) -> np.ndarray:
    """``P[m, n]`` for ``m, n <= size`` by adaptive quadrature of the overlap integral.

    The evolved state is ``rho**-1/2 psi_m((q - alpha)/rho) exp(i phase(q))`` with
    ``phase = (rho_dot/2rho) q**2 + c q`` and ``c = alpha_dot - (rho_dot/rho) alpha``
    (or ``c**2`` when ``squared_linear_phase``); it is projected on the
    instantaneous eigenfunctions ``omega**1/4 psi_n(q sqrt(omega))``.
    """
    if size > 60:
        raise DomainError("oracle is limited to indices <= 60")
    rho, w = wf.rho, wf.omega
    if not (rho > 0 and w > 0):
        raise DomainError("rho and omega must be positive")
    lin = wf.alpha_dot - wf.rho_dot / rho * wf.alpha
    if squared_linear_phase:
        lin = lin * lin
    quad = wf.rho_dot / (2.0 * rho)
    sw = math.sqrt(w)
    k = size + 1

    def integrand(q):
        eig = w ** 0.25 * hermite_functions(q * sw, size)
        evo = rho ** -0.5 * hermite_functions((q - wf.alpha) / rho, size)
        prod = np.outer(evo, eig).ravel()
        ph = quad * q * q + lin * q
        return np.concatenate((prod * math.cos(ph), prod * math.sin(ph)))

    half = 12.0 * max(rho, 1.0 / sw)
    lo, hi = min(0.0, wf.alpha) - half, max(0.0, wf.alpha) + half
    res, err, info = quad_vec(integrand, lo, hi, epsabs=epsabs, epsrel=0.0, norm="max",
                              limit=20000, full_output=True)
    # status 2 (roundoff detected) is acceptable when the error estimate is within bounds
    if info.status == 1 or err > 10 * epsabs:
        raise OracleError(f"overlap quadrature failed (status={info.status}, error={err:.3g})")
    amp = res[: k * k] + 1j * res[k * k:]
    return np.abs(amp.reshape(k, k)) ** 2


def overlap_oracle(m: int, n: int, wf: WaveParams, **kwargs) -> float:
    return float(overlap_matrix(max(m, n), wf, **kwargs)[m, n])
