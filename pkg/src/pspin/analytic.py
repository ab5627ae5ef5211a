"""Closed-form constants and free-energy functionals of the pure p-spin
spherical model.

Everything in this module is deterministic: ground-state and complexity
constants, the overlap values that organize the low-temperature Gibbs
geometry, log-scale band densities on the sphere, and the replica
functionals they must match.  Randomness lives in :mod:`pspin.field`.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import comb, gammaln

from .errors import BracketFailure, DomainError, NoLowTempSolution, PspinError


@dataclass(frozen=True)
class ModelParams:
    """Degree p >= 2 and inverse temperature beta > 0."""

    p: int
    beta: float

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise DomainError("p must be an integer >= 2, got %r" % (self.p,))
        object.__setattr__(self, "p", int(self.p))
        if not (self.beta > 0) or not math.isfinite(self.beta):
            raise DomainError("beta must be a finite positive real, got %r" % (self.beta,))
        object.__setattr__(self, "beta", float(self.beta))


def gamma_p(p):
    """sqrt(p/(p-1)), the half-width ratio of the limiting Hessian spectrum."""
    if p < 2:
        raise DomainError("p must be >= 2")
    return math.sqrt(p / (p - 1.0))


def e_inf(p):
    """Threshold energy density 2*sqrt((p-1)/p) below which minima proliferate."""
    if p < 2:
        raise DomainError("p must be >= 2")
    return 2.0 * math.sqrt((p - 1.0) / p)


def omega(x):
    """Logarithmic potential of the semicircle law at x.

    Equals x^2/4 - 1/2 inside [-2, 2]; outside, the usual edge correction
    is subtracted.  Vectorized; returns a float for scalar input.
    """
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    inside = ax * ax / 4.0 - 0.5
    # outside |x| > 2: subtract |x|/4*sqrt(x^2-4) - log(sqrt(x^2/4-1) + |x|/2)
    ax_safe = np.maximum(ax, 2.0)
    root = np.sqrt(ax_safe * ax_safe - 4.0)
    corr = ax_safe / 4.0 * root - np.log(root / 2.0 + ax_safe / 2.0)
    out = np.where(ax > 2.0, inside - corr, inside)
    return float(out) if out.ndim == 0 else out


def theta(p, energy):
    """Exponential growth rate of the mean number of critical points below
    energy density `energy` (negative side), saturating at log(p-1)/2.
    """
    if p < 3:
        raise DomainError("theta requires p >= 3")
    e = np.asarray(energy, dtype=float)
    gp = gamma_p(p)
    low = 0.5 + 0.5 * math.log(p - 1.0) - e * e / 2.0 + omega(gp * e)
    high = 0.5 * math.log(p - 1.0)
    out = np.where(e < 0.0, low, high)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def e_zero(p):
    """Ground-state energy density: the unique zero of theta(p, -E) above e_inf."""
    if p < 3:
        raise DomainError("e_zero requires p >= 3")
    lo = e_inf(p)
    hi = lo + 10.0
    f = lambda x: theta(p, -x)
    flo, fhi = f(lo), f(hi)
    if not (flo > 0.0 > fhi):
        raise BracketFailure(
            "no sign change for theta(p, -E) on (%g, %g]: f=%g, %g" % (lo, hi, flo, fhi)
        )
    return brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16)


@lru_cache(maxsize=None)
def c_p(p):
    """Slope of theta(p, .) at -e_zero(p); also the rate of the extremal
    point process of deep critical values."""
    e0 = e_zero(p)
    ei = e_inf(p)
    val = e0 - (2.0 / (ei * ei)) * (e0 - math.sqrt(e0 * e0 - ei * ei))
    # cross-check against a numerical derivative of theta at -e0
    h = 1e-5
    num = (theta(p, -e0 + h) - theta(p, -e0 - h)) / (2.0 * h)
    if abs(num - val) > 1e-6:
        raise PspinError("c_p closed form disagrees with dTheta/dE: %g vs %g" % (val, num))
    return val


def alpha(p, k, q):
    """Latitude weight of the degree-k layer at overlap q:
    sqrt(binom(p,k) (1-q^2)^k) * q^(p-k).  Can be negative for q < 0.
    """
    if not (0 <= k <= p):
        raise DomainError("need 0 <= k <= p")
    q = np.asarray(q, dtype=float)
    if np.any(np.abs(q) > 1.0):
        raise DomainError("overlap must lie in [-1, 1]")
    out = np.sqrt(comb(p, k, exact=True) * (1.0 - q * q) ** k) * q ** (p - k)
    return float(out) if out.ndim == 0 else out


def alpha_sq_tail(p, q, k_min=3):
    """Sum of alpha_k(q)^2 for k = k_min .. p."""
    q = np.asarray(q, dtype=float)
    out = sum(alpha(p, k, q) ** 2 for k in range(k_min, p + 1))
    return float(np.asarray(out)) if np.ndim(out) == 0 else out


def _alpha2_peak(p):
    """Location and value of the maximum of alpha_2 on (0, 1)."""
    if p == 2:
        return 0.0, 1.0
    qhat = math.sqrt((p - 2.0) / p)
    return qhat, alpha(p, 2, qhat)


def largest_alpha2_root(p, target, grid_points=10000):
    """Largest q in (0, 1) with alpha_2(q) = target.

    A uniform grid scan locates the rightmost sign change, which brentq then
    refines.  Raises NoLowTempSolution when alpha_2 never reaches target.
    """
    if target <= 0:
        raise DomainError("target must be positive")
    _, peak = _alpha2_peak(p)
    if target > peak:
        raise NoLowTempSolution(
            "alpha_2 peaks at %g < target %g; beta is too small" % (peak, target)
        )
    qs = np.linspace(0.0, 1.0, grid_points + 1)
    vals = alpha(p, 2, qs) - target
    sign_change = np.nonzero(vals[:-1] * vals[1:] <= 0.0)[0]
    if len(sign_change) == 0:
        raise BracketFailure("grid scan found no sign change for alpha_2 root")
    i = sign_change[-1]
    f = lambda q: alpha(p, 2, q) - target
    if vals[i] == 0.0:
        return float(qs[i])
    return brentq(f, qs[i], qs[i + 1], xtol=1e-15, rtol=8.9e-16)


@dataclass(frozen=True)
class AnalyticBundle:
    """All deterministic constants of the model at one (p, beta)."""

    params: "ModelParams"
    e_inf: float
    e_zero: float
    c_p: float
    chi1: float
    chi2: float
    chi3: float
    q_star: float
    q_c: float
    q_star_star: float
    q_ls: float
    c_ls: float
    c_star: float
    m_star: float


@lru_cache(maxsize=None)
def _constants_cached(p, beta, c_ls):
    params = ModelParams(p, beta)
    ei = e_inf(p)
    e0 = e_zero(p)
    cp = c_p(p)
    ratio = e0 / ei
    disc = math.sqrt(ratio * ratio - 1.0)
    s2b = math.sqrt(2.0) * beta
    chi1 = (ratio - disc) / s2b
    chi2 = 1.0 / s2b
    chi3 = (ratio + disc) / s2b
    q_star = largest_alpha2_root(p, chi1)
    q_c = largest_alpha2_root(p, chi2)
    q_ss = largest_alpha2_root(p, chi3)
    if not (0.0 < q_ss < q_c < q_star < 1.0):
        raise PspinError("overlap ordering violated: %g, %g, %g" % (q_ss, q_c, q_star))
    c_ls_lower = 1.0 / (2.0 * p * (e0 - ei))
    if c_ls is None:
        c_ls = 2.0 * c_ls_lower
    elif c_ls < c_ls_lower:
        raise DomainError("c_ls=%g below admissible lower bound %g" % (c_ls, c_ls_lower))
    q_ls = 1.0 - c_ls * math.log(beta) / beta
    z = ratio - disc
    c_star = 1.0 - z * z
    m_star = cp / (beta * q_star**p)
    return AnalyticBundle(
        params=params,
        e_inf=ei,
        e_zero=e0,
        c_p=cp,
        chi1=chi1,
        chi2=chi2,
        chi3=chi3,
        q_star=q_star,
        q_c=q_c,
        q_star_star=q_ss,
        q_ls=q_ls,
        c_ls=c_ls,
        c_star=c_star,
        m_star=m_star,
    )


def constants(params, c_ls=None):
    """AnalyticBundle for the given parameters.

    chi1 < chi2 < chi3 are the three susceptibility scales 1/(sqrt(2) beta)
    times (r - sqrt(r^2-1)), 1, (r + sqrt(r^2-1)) with r = e_zero/e_inf; the
    overlaps q_star > q_c > q_star_star are the largest roots of
    alpha_2(q) = chi.  Raises NoLowTempSolution when beta is too small for
    any root to exist.
    """
    if params.p < 3:
        raise DomainError("constants requires p >= 3")
    return _constants_cached(params.p, params.beta, c_ls)


@dataclass(frozen=True)
class LambdaZ:
    value: float
    dq: float
    dq2: float


def lambda_z(params, energy, q):
    """Growth rate of the mean band partition function at ground-state
    density `energy` and overlap q, with its first two q-derivatives.
    """
    p, beta = params.p, params.beta
    if not (-1.0 < q < 1.0):
        raise DomainError("q must lie in (-1, 1)")
    b2 = beta * beta
    val = (
        0.5 * math.log(1.0 - q * q)
        + beta * energy * q**p
        + 0.5 * b2 * (1.0 - q ** (2 * p) - p * q ** (2 * p - 2) * (1.0 - q * q))
    )
    dq = (
        -q / (1.0 - q * q)
        + p * beta * energy * q ** (p - 1)
        - p * (p - 1) * b2 * q ** (2 * p - 3) * (1.0 - q * q)
    )
    dq2 = (
        -(1.0 + q * q) / (1.0 - q * q) ** 2
        + p * (p - 1) * beta * energy * q ** (p - 2)
        - p * (p - 1) * b2 * ((2 * p - 3) * q ** (2 * p - 4) * (1.0 - q * q) - 2.0 * q ** (2 * p - 2))
    )
    return LambdaZ(value=val, dq=dq, dq2=dq2)


def p2_free_energy(beta):
    """Limiting free energy density of the degree-2 spherical model:
    beta^2/2 up to beta = 1/sqrt(2), then sqrt(2) beta - 3/4 - log(beta)/2
    - log(2)/4.
    """
    if beta < 0:
        raise DomainError("beta must be >= 0")
    if beta <= 1.0 / math.sqrt(2.0):
        return 0.5 * beta * beta
    return math.sqrt(2.0) * beta - 0.75 - 0.5 * math.log(beta) - 0.25 * math.log(2.0)


def lambda_f2(params, energy, q):
    """Band free-energy functional with the degree-2 layer treated exactly
    and layers k >= 3 at annealed (Gaussian) level."""
    p, beta = params.p, params.beta
    if not (-1.0 < q < 1.0):
        raise DomainError("q must lie in (-1, 1)")
    a2 = abs(alpha(p, 2, q))
    tail = alpha_sq_tail(p, q, 3)
    return (
        0.5 * math.log(1.0 - q * q)
        + beta * energy * q**p
        + p2_free_energy(a2 * beta)
        + 0.5 * beta * beta * tail
    )


def parisi_1rsb(params, m, q):
    """One-step replica symmetry breaking functional P(m, q)."""
    p, beta = params.p, params.beta
    if not (0.0 < m <= 1.0):
        raise DomainError("m must lie in (0, 1]")
    if not (0.0 <= q < 1.0):
        raise DomainError("q must lie in [0, 1)")
    b2 = beta * beta
    return 0.5 * (
        b2 * (1.0 - q**p + m * q**p)
        + math.log(1.0 - q)
        + math.log(1.0 + m * q / (1.0 - q)) / m
    )


def log_sphere_area(n):
    """log of the surface area of the unit sphere in R^n."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return math.log(2.0) + 0.5 * n * math.log(math.pi) - gammaln(0.5 * n)


def log_area_ratio(n):
    """log(omega_{n-1} / omega_n) for unit-sphere surface areas."""
    if n < 2:
        raise DomainError("n must be >= 2")
    return gammaln(0.5 * n) - gammaln(0.5 * (n - 1)) - 0.5 * math.log(math.pi)


@dataclass(frozen=True)
class BandDensityPoint:
    q: float
    log_xi1: float
    log_phi1: float


def band_density(params, n, u, q):
    """Log-scale latitude density of the mean partition function around a
    critical point of value u: geometric volume factor times the conditional
    Gaussian moment factor xi_1(q).
    """
    p, beta = params.p, params.beta
    if n < 4:
        raise DomainError("n must be >= 4")
    if not (-1.0 < q < 1.0):
        raise DomainError("q must lie in (-1, 1)")
    log_xi1 = -beta * u * q**p + 0.5 * beta * beta * n * (
        1.0 - q ** (2 * p) - p * q ** (2 * p - 2) * (1.0 - q * q)
    )
    log_phi1 = log_area_ratio(n) + 0.5 * (n - 3) * math.log(1.0 - q * q) + log_xi1
    return BandDensityPoint(q=q, log_xi1=log_xi1, log_phi1=log_phi1)


def log_xi2(params, n, u, q1, q2, rho):
    """Log of the two-point conditional moment factor at latitudes (q1, q2)
    and relative overlap rho of the angular parts."""
    p, beta = params.p, params.beta
    s1 = math.sqrt(1.0 - q1 * q1)
    s2 = math.sqrt(1.0 - q2 * q2)
    cross = (s1 * s2 * rho + q1 * q2) ** p - q1**p * q2**p \
        - p * q1 ** (p - 1) * q2 ** (p - 1) * s1 * s2 * rho
    return (
        band_density(params, n, u, q1).log_xi1
        + band_density(params, n, u, q2).log_xi1
        + beta * beta * n * cross
    )


def pair_density(params, n, u, q1, q2, rho):
    """Log-scale two-point latitude density around a critical point."""
    if not (-1.0 < rho < 1.0):
        raise DomainError("rho must lie in (-1, 1)")
    if n < 5:
        raise DomainError("n must be >= 5")
    geom = (
        log_sphere_area(n - 1) + log_sphere_area(n - 2) - 2.0 * log_sphere_area(n)
        + 0.5 * (n - 3) * (math.log(1.0 - q1 * q1) + math.log(1.0 - q2 * q2))
        + 0.5 * (n - 4) * math.log(1.0 - rho * rho)
    )
    return geom + log_xi2(params, n, u, q1, q2, rho)


def band_lipschitz(params, q1, q2):
    """Sum over k = 2..p of the supremum of alpha_k(q)^2 on (q1, q2); the
    variance proxy controlling band free-energy concentration."""
    p = params.p
    if not (0.0 <= q1 < q2 <= 1.0):
        raise DomainError("need 0 <= q1 < q2 <= 1")
    total = 0.0
    for k in range(2, p + 1):
        # alpha_k^2 = C (1-q^2)^k q^(2(p-k)) is unimodal on [0,1] with peak
        # at q^2 = (p-k)/p; clamp the peak into the interval
        qhat = math.sqrt((p - k) / p) if k < p else 0.0
        qopt = min(max(qhat, q1), q2)
        total += alpha(p, k, qopt) ** 2
    return total


@dataclass(frozen=True)
class AuxConstants:
    m_n: float
    u_ls: float
    log_v: float
    y_mean: float
    y_var: float
    lipschitz_v: float


def aux_constants(params, n, u=None, k0=0.0, q1=0.0, q2=1.0):
    """Finite-n centering and fluctuation constants at one (p, beta, n).

    m_n is the centering of the minimal critical value (k0 is the free
    additive constant), u_ls the low-lying value scale below which bands
    carry all Gibbs mass, log_v the log mean band partition function around
    a critical point at depth u (defaults to m_n), (y_mean, y_var) the
    Gaussian law of the log band-mass ratio, and lipschitz_v the overlap
    variance proxy over (q1, q2).
    """
    p, beta = params.p, params.beta
    if n < 1:
        raise DomainError("n must be >= 1")
    bundle = constants(params)
    e0, cp, qs = bundle.e_zero, bundle.c_p, bundle.q_star
    m_n = -e0 * n + math.log(n) / (2.0 * cp) - k0
    if u is None:
        u = m_n
    lz = lambda_z(params, e0, qs)
    u_ls = -lz.value * n / beta
    log_v = (
        -1.5 * math.log(1.0 - qs * qs)
        - 0.5 * math.log(abs(lz.dq2))
        + n * lz.value
        - (beta * e0 * n + beta * u) * qs**p
    )
    y_var = -0.5 * math.log(bundle.c_star)
    y_mean = 0.25 * math.log(bundle.c_star)
    lip = band_lipschitz(params, q1, q2)
    return AuxConstants(
        m_n=m_n, u_ls=u_ls, log_v=log_v, y_mean=y_mean, y_var=y_var, lipschitz_v=lip
    )
