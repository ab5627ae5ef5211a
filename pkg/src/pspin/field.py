"""Disorder sampling and evaluation of the random Hamiltonian on the sphere.

A `Disorder` holds the raw i.i.d. Gaussian coupling tensor of one
realization of the degree-p homogeneous field H(sigma) = n^{-(p-1)/2}
sum J_{i1..ip} sigma_{i1}...sigma_{ip} on the sphere of radius sqrt(n).
This module provides values, Euclidean and frame derivatives, the
layer decomposition around a point, conditional-law field construction,
and disorder interpolation.
"""

import io
import itertools
import math
import struct

import numpy as np
from scipy.special import comb

from .analytic import alpha
from .errors import DimensionMismatch, DomainError, SizeError

MAX_TENSOR_ENTRIES = 2**28

_MAGIC = b"PSPIN1\n"


class SpherePoint:
    """A configuration: a vector of norm sqrt(n) in R^n."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        x = np.array(coords, dtype=float)
        if x.ndim != 1:
            raise DimensionMismatch("coordinates must be a 1-d array")
        norm = np.linalg.norm(x)
        if norm == 0 or not np.isfinite(norm):
            raise DomainError("cannot project the zero (or non-finite) vector to the sphere")
        x *= math.sqrt(len(x)) / norm
        self.coords = x

    @property
    def n(self):
        return len(self.coords)

    def overlap(self, other):
        """Normalized inner product R in [-1, 1]."""
        other = other.coords if isinstance(other, SpherePoint) else np.asarray(other)
        return float(self.coords @ other) / self.n

    def __repr__(self):
        return "SpherePoint(n=%d)" % self.n


def random_point(n, rng):
    """Uniform point on the sphere of radius sqrt(n)."""
    return SpherePoint(rng.standard_normal(n))


def pole(n):
    """The north pole (0, ..., 0, sqrt(n))."""
    x = np.zeros(n)
    x[-1] = math.sqrt(n)
    return SpherePoint(x)


class Disorder:
    """One realization of the coupling tensor.

    Couplings are stored raw (as sampled); the symmetrized tensor used by
    derivative formulas is computed lazily and cached.
    """

    def __init__(self, p, n, couplings, seed=None):
        couplings = np.asarray(couplings, dtype=float)
        if couplings.shape != (n,) * p:
            raise DimensionMismatch(
                "couplings shape %s does not match (n,)*p for p=%d n=%d"
                % (couplings.shape, p, n)
            )
        self.p = p
        self.n = n
        self.seed = seed
        self.couplings = couplings
        self._sym = None

    @property
    def sym(self):
        """Couplings averaged over all index permutations."""
        if self._sym is None:
            acc = np.zeros_like(self.couplings)
            for perm in itertools.permutations(range(self.p)):
                acc += self.couplings.transpose(perm)
            self._sym = acc / math.factorial(self.p)
        return self._sym

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    def to_bytes(self):
        seed = -1 if self.seed is None else int(self.seed)
        buf = io.BytesIO()
        buf.write(_MAGIC)
        buf.write(struct.pack("<qqq", self.p, self.n, seed))
        buf.write(self.couplings.astype("<f8").tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data):
        if data[: len(_MAGIC)] != _MAGIC:
            raise DomainError("bad magic in disorder blob")
        off = len(_MAGIC)
        p, n, seed = struct.unpack_from("<qqq", data, off)
        off += 24
        flat = np.frombuffer(data[off:], dtype="<f8")
        if flat.size != n**p:
            raise DimensionMismatch("disorder blob has %d entries, expected %d" % (flat.size, n**p))
        return cls(p, n, flat.reshape((n,) * p).copy(), seed=None if seed == -1 else seed)

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def sample_disorder(p, n, seed, max_entries=MAX_TENSOR_ENTRIES):
    """Fresh coupling tensor with i.i.d. standard Gaussian entries.

    Regenerating with the same seed reproduces the tensor bit-exactly.
    """
    if p < 2 or n < 2:
        raise DomainError("need p >= 2 and n >= 2")
    if n**p > max_entries:
        raise SizeError("n^p = %d exceeds the memory budget %d" % (n**p, max_entries))
    rng = np.random.default_rng(seed)
    return Disorder(p, n, rng.standard_normal((n,) * p), seed=seed)


def _coords(sigma):
    return sigma.coords if isinstance(sigma, SpherePoint) else np.asarray(sigma, dtype=float)


def _contract(tensor, x, times):
    for _ in range(times):
        tensor = np.tensordot(tensor, x, axes=([-1], [0]))
    return tensor


def hamiltonian(disorder, sigma):
    """H(sigma) = n^{-(p-1)/2} <J, sigma^{tensor p}> using the raw couplings."""
    x = _coords(sigma)
    if x.shape != (disorder.n,):
        raise DimensionMismatch("point dimension %s != n=%d" % (x.shape, disorder.n))
    scale = disorder.n ** (-(disorder.p - 1) / 2.0)
    return float(scale * _contract(disorder.couplings, x, disorder.p))


def _batch_subscripts(p):
    idx = "ijklmnop"[:p]
    return idx + "," + ",".join("a" + c for c in idx) + "->a"


def hamiltonian_batch(disorder, points):
    """H at many points at once; `points` has shape (m, n)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    p, n = disorder.p, disorder.n
    scale = n ** (-(p - 1) / 2.0)
    t = np.tensordot(pts, disorder.couplings, axes=([1], [0]))
    for _ in range(p - 2):
        t = np.einsum("a...ij,aj->a...i", t, pts)
    return scale * np.einsum("ai,ai->a", t, pts)


def euclidean_gradient(disorder, sigma):
    """Gradient of the extended (homogeneous) Hamiltonian in R^n."""
    p, n = disorder.p, disorder.n
    x = _coords(sigma)
    return p * n ** (-(p - 1) / 2.0) * _contract(disorder.sym, x, p - 1)


def euclidean_hessian(disorder, sigma):
    """Hessian of the extended Hamiltonian in R^n."""
    p, n = disorder.p, disorder.n
    x = _coords(sigma)
    return p * (p - 1) * n ** (-(p - 1) / 2.0) * _contract(disorder.sym, x, p - 2)


def householder_to_pole(sigma):
    """Symmetric orthogonal Q with Q sigma = sqrt(n) e_n (an involution)."""
    x = _coords(sigma)
    n = len(x)
    u = x / np.linalg.norm(x)
    v = u.copy()
    v[-1] -= 1.0
    nv2 = v @ v
    if nv2 < 1e-28:
        return np.eye(n)
    return np.eye(n) - 2.0 * np.outer(v, v) / nv2


class FrameDerivatives:
    """Value, spherical gradient and Hessian of H at a point, expressed in a
    frame whose last axis points along sigma.

    `g_matrix` is the shifted Hessian G = hessian + (p/n) value I, whose law
    is a scaled GOE independent of (value, gradient).
    """

    __slots__ = ("value", "gradient", "hessian", "g_matrix")

    def __init__(self, value, gradient, hessian, g_matrix):
        self.value = value
        self.gradient = gradient
        self.hessian = hessian
        self.g_matrix = g_matrix


def frame_derivatives(disorder, sigma):
    p, n = disorder.p, disorder.n
    x = _coords(sigma)
    if x.shape != (n,):
        raise DimensionMismatch("point dimension %s != n=%d" % (x.shape, n))
    q_rot = householder_to_pole(x)
    val = hamiltonian(disorder, x)
    ge = q_rot @ euclidean_gradient(disorder, x)
    he = q_rot @ euclidean_hessian(disorder, x) @ q_rot
    grad = ge[:-1]
    g_matrix = he[:-1, :-1]
    hess = g_matrix - (p / n) * val * np.eye(n - 1)
    return FrameDerivatives(val, grad, hess, g_matrix)


class Decomposition:
    """Layer decomposition H = sum_{k=0}^p Hbar^k around a base point.

    Layer k collects the terms of the rotated polynomial with exactly k
    indices in the tangent directions of the base point; restricted to a
    fixed latitude it is alpha_k(q) sqrt(n/(n-1)) times a pure degree-k
    field on the equatorial sphere.
    """

    def __init__(self, disorder, base):
        p, n = disorder.p, disorder.n
        self.p, self.n = p, n
        self.base = base if isinstance(base, SpherePoint) else SpherePoint(base)
        self.q_rot = householder_to_pole(self.base)
        t = disorder.sym
        for ax in range(p):
            t = np.moveaxis(np.tensordot(self.q_rot, t, axes=(1, ax)), 0, ax)
        self._rotated = t
        # sub-tensors with p-k trailing indices pinned to the pole axis
        self._layers = []
        for k in range(p + 1):
            tk = t
            for _ in range(p - k):
                tk = tk[..., n - 1]
            tk = tk[(slice(0, n - 1),) * k] if k else tk
            self._layers.append(tk)

    def component(self, k, sigma):
        """Value of layer k at a sphere point."""
        p, n = self.p, self.n
        if not (0 <= k <= p):
            raise DomainError("need 0 <= k <= p")
        x = self.q_rot @ _coords(sigma)
        scale = n ** (-(p - 1) / 2.0) * comb(p, k, exact=True)
        return float(scale * _contract(self._layers[k], x[:-1], k) * x[-1] ** (p - k))

    def __call__(self, sigma):
        return sum(self.component(k, sigma) for k in range(self.p + 1))

    def latitude(self, sigma):
        """Overlap q of a point with the base point."""
        return self.base.overlap(_coords(sigma))


def decompose(disorder, base):
    return Decomposition(disorder, base)


def goe(dim, rng):
    """GOE matrix: off-diagonal variance 1/dim, diagonal variance 2/dim."""
    a = rng.standard_normal((dim, dim))
    return (a + a.T) / math.sqrt(2.0 * dim)


class ConditionalField:
    """The law of H given a critical point of value u at the north pole.

    Evaluates u q^p plus the degree-2 layer built from a supplied or sampled
    shifted-GOE matrix A, plus independent pure degree-k fields (k >= 3) on
    the equatorial sphere, each weighted by alpha_k(q).
    """

    def __init__(self, p, n, u, a_matrix=None, seed=None):
        if p < 2 or n < 3:
            raise DomainError("need p >= 2 and n >= 3")
        self.p, self.n, self.u = p, n, float(u)
        rng = np.random.default_rng(seed)
        if a_matrix is None:
            a_matrix = math.sqrt((n - 1) * p * (p - 1) / n) * goe(n - 1, rng)
        a_matrix = np.asarray(a_matrix, dtype=float)
        if a_matrix.shape != (n - 1, n - 1):
            raise DimensionMismatch("A must be (n-1) x (n-1)")
        self.a_matrix = a_matrix
        self.tensors = {
            k: rng.standard_normal((n - 1,) * k) for k in range(3, p + 1)
        }

    def _split(self, sigma):
        x = _coords(sigma)
        q = x[-1] / math.sqrt(self.n)
        s = 1.0 - q * q
        if s <= 0:
            return q, None
        tau = math.sqrt((self.n - 1) / self.n) * x[:-1] / math.sqrt(s)
        return q, tau

    def _pure_k(self, k, tau):
        m = self.n - 1
        return m ** (-(k - 1) / 2.0) * float(_contract(self.tensors[k], tau, k))

    def __call__(self, sigma):
        p, n, u = self.p, self.n, self.u
        q, tau = self._split(sigma)
        if tau is None:
            return u * q**p
        val = u * q**p
        val += 0.5 * q ** (p - 2) * (1.0 - q * q) * (n / (n - 1)) * float(tau @ self.a_matrix @ tau)
        for k in range(3, p + 1):
            val += alpha(p, k, q) * math.sqrt(n / (n - 1)) * self._pure_k(k, tau)
        return val

    def latitude_parts(self, taus):
        """Per-point quadratic and pure-k values for points on the equatorial
        sphere of radius sqrt(n-1), shape (m, n-1).  Combining them with the
        scalar latitude weights avoids re-contracting tensors per latitude."""
        taus = np.asarray(taus, dtype=float)
        quad = np.einsum("ai,ij,aj->a", taus, self.a_matrix, taus)
        pure = {}
        m = self.n - 1
        for k in range(3, self.p + 1):
            sub = _batch_subscripts(k)
            pure[k] = m ** (-(k - 1) / 2.0) * np.einsum(
                sub, self.tensors[k], *([taus] * k), optimize=True
            )
        return quad, pure

    def evaluate_latitude(self, q, quad, pure):
        """Field values at latitude q for precomputed `latitude_parts`."""
        p, n, u = self.p, self.n, self.u
        vals = np.full(len(quad), u * q**p)
        vals += 0.5 * q ** (p - 2) * (1.0 - q * q) * (n / (n - 1)) * quad
        for k in range(3, p + 1):
            vals += alpha(p, k, q) * math.sqrt(n / (n - 1)) * pure[k]
        return vals


def conditional_field(p, n, u, a_matrix=None, seed=None):
    return ConditionalField(p, n, u, a_matrix=a_matrix, seed=seed)


def interpolate(disorder, other, t):
    """Variance-preserving interpolation (1-t) J + sqrt(2t - t^2) J'."""
    if not (0.0 <= t <= 1.0):
        raise DomainError("t must lie in [0, 1]")
    if (disorder.p, disorder.n) != (other.p, other.n):
        raise DimensionMismatch("disorders have different (p, n)")
    mix = (1.0 - t) * disorder.couplings + math.sqrt(2.0 * t - t * t) * other.couplings
    return Disorder(disorder.p, disorder.n, mix, seed=None)


class Restriction:
    """A field restricted to the latitude-q sphere around a base point.

    Maps tau on the equatorial sphere (radius sqrt(n-1)) to the sphere point
    at overlap q with the base, and evaluates the wrapped field there.
    """

    def __init__(self, field, base, q):
        if not (-1.0 < q < 1.0):
            raise DomainError("q must lie in (-1, 1)")
        self.field = field
        self.base = base if isinstance(base, SpherePoint) else SpherePoint(base)
        self.q = q
        self._q_rot = householder_to_pole(self.base)

    def point(self, tau):
        tau = np.asarray(tau, dtype=float)
        n = self.base.n
        if tau.shape != (n - 1,):
            raise DimensionMismatch("tau must have dimension n-1")
        tau = tau * (math.sqrt(n - 1.0) / np.linalg.norm(tau))
        y = np.empty(n)
        y[:-1] = math.sqrt((n / (n - 1)) * (1.0 - self.q**2)) * tau
        y[-1] = self.q * math.sqrt(n)
        return SpherePoint(self._q_rot @ y)

    def __call__(self, tau):
        return self.field(self.point(tau))


def restrict(field, base, q):
    return Restriction(field, base, q)
