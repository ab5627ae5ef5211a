"""Critical points of one Hamiltonian realization and their mean counts.

Local refinement uses a damped Riemannian Newton iteration on the gradient
system; enumeration runs many starts (batched across starts for speed),
deduplicates by overlap, and can iterate batches to saturation.  The mean
number of critical points in a value window is computed by a Kac-Rice
integral with a Monte-Carlo shifted-GOE determinant factor, entirely in
log-space.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from . import analytic
from .analytic import gamma_p, log_sphere_area, omega
from .errors import DomainError, NoConvergence, QuadratureFailure
from .field import SpherePoint, frame_derivatives, hamiltonian_batch

_SPECTRAL_TOL = 1e-8


@dataclass(frozen=True)
class CriticalRecord:
    """A converged critical point."""

    point: SpherePoint
    value: float
    grad_norm: float
    index: int
    eigs: np.ndarray


def _finalize(disorder, x):
    fr = frame_derivatives(disorder, x)
    eigs = np.sort(np.linalg.eigvalsh(fr.hessian))
    scale = max(np.abs(eigs).max(), 1e-300)
    index = int(np.sum(eigs < -_SPECTRAL_TOL * scale))
    return CriticalRecord(
        point=SpherePoint(x),
        value=fr.value,
        grad_norm=float(np.linalg.norm(fr.gradient)),
        index=index,
        eigs=eigs,
    )


class _Kernel:
    """Batched gradient/Hessian evaluation bound to one disorder.

    p = 3 gets a tensordot fast path that shares the partial contraction
    between the gradient and the Hessian.
    """

    def __init__(self, disorder):
        self.p, self.n = disorder.p, disorder.n
        self.sym = disorder.sym
        self.scale = self.p * self.n ** (-(self.p - 1) / 2.0)
        p = self.p
        idx = "ijklmnop"[:p]
        self.sub_g = idx + "," + ",".join("a" + c for c in idx[1:]) + "->ai"
        self.sub_h = idx + "," + ",".join("a" + c for c in idx[2:]) + "->aij" if p > 2 else None

    def grad(self, x):
        """Full-space gradient of the homogeneous extension, shape (B, n)."""
        if self.p == 3:
            t1 = np.tensordot(self.sym, x, axes=([2], [1]))
            return self.scale * np.einsum("ija,aj->ai", t1, x)
        return self.scale * np.einsum(self.sub_g, self.sym, *([x] * (self.p - 1)), optimize=True)

    def grad_hess(self, x):
        if self.p == 3:
            t1 = np.tensordot(self.sym, x, axes=([2], [1]))
            g = self.scale * np.einsum("ija,aj->ai", t1, x)
            h = self.scale * (self.p - 1) * np.moveaxis(t1, 2, 0)
            return g, h
        g = self.grad(x)
        h = self.scale * (self.p - 1) * np.einsum(
            self.sub_h, self.sym, *([x] * (self.p - 2)), optimize=True
        )
        return g, h

    def tangent(self, x, g):
        return g - (np.sum(g * x, axis=1, keepdims=True) / self.n) * x

    def grad_norm(self, x):
        return np.linalg.norm(self.tangent(x, self.grad(x)), axis=1)

    def value(self, x, g=None):
        """H from the gradient via homogeneity: H = x . grad / p."""
        if g is None:
            g = self.grad(x)
        return np.sum(g * x, axis=1) / self.p

    def system(self, x):
        """Tangent gradient and the spherical-Hessian system matrix
        P A P - lam P (+ a positive multiple of x x^T so it is nonsingular,
        with eigenvalue `reg` in the x direction)."""
        n = self.n
        g_full, h = self.grad_hess(x)
        lam = np.sum(g_full * x, axis=1) / n
        gt = g_full - lam[:, None] * x
        hx = np.matmul(h, x[:, :, None])[:, :, 0]
        xax = np.sum(x * hx, axis=1)
        outer_x = x[:, :, None] * x[:, None, :]
        b_mat = (
            h
            - (x[:, :, None] * hx[:, None, :] + hx[:, :, None] * x[:, None, :]) / n
            + (xax / (n * n))[:, None, None] * outer_x
        )
        eye = np.eye(n)
        b_mat -= lam[:, None, None] * (eye[None] - outer_x / n)
        reg = 2.0 * np.maximum(1.0, np.abs(b_mat).max(axis=(1, 2)))
        b_mat += (reg[:, None, None] / n) * outer_x
        return gt, b_mat, lam


def _retract(x, n):
    return x * (math.sqrt(n) / np.linalg.norm(x, axis=1, keepdims=True))


def _batch_newton(disorder, starts, tol, max_iter=100, max_fail=3):
    """Damped Newton on the projected gradient for a batch of starts.

    Returns (points, converged_mask).  Backtracks on the spherical gradient
    norm; chains that cannot decrease it for `max_fail` consecutive
    iterations are abandoned.
    """
    n = disorder.n
    ker = _Kernel(disorder)
    x = _retract(np.array(starts, dtype=float), n)
    m = len(x)
    active = np.ones(m, dtype=bool)
    fails = np.zeros(m, dtype=int)
    tol_abs = tol * math.sqrt(n)
    steps = 0.5 ** np.arange(14)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        xa = x[idx]
        gt, b_mat, _ = ker.system(xa)
        gn = np.linalg.norm(gt, axis=1)
        done = gn < tol_abs
        if done.any():
            active[idx[done]] = False
            idx = idx[~done]
            if len(idx) == 0:
                continue
            xa, gt, b_mat, gn = xa[~done], gt[~done], b_mat[~done], gn[~done]
        try:
            direction = np.linalg.solve(b_mat, -gt[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            direction = np.stack(
                [np.linalg.lstsq(b_mat[i], -gt[i], rcond=None)[0] for i in range(len(xa))]
            )
        best = xa
        best_ok = np.zeros(len(xa), dtype=bool)
        for s in steps:
            todo = ~best_ok
            if not todo.any():
                break
            cand = _retract(xa[todo] + s * direction[todo], n)
            cn = ker.grad_norm(cand)
            good = cn < gn[todo] * (1.0 - 1e-4 * s)
            if good.any():
                rows = np.flatnonzero(todo)[good]
                best = best.copy()
                best[rows] = cand[good]
                best_ok[rows] = True
        fails[idx[~best_ok]] += 1
        fails[idx[best_ok]] = 0
        give_up = fails[idx] >= max_fail
        active[idx[give_up]] = False
        x[idx] = best
    gn = ker.grad_norm(x)
    return x, gn < tol_abs


def _batch_minimize(disorder, starts, tol, max_iter=200, sign=1.0):
    """Modified-Newton minimization of sign*H on the sphere for a batch of
    starts: the spherical Hessian is shifted to be positive definite, so the
    iterate descends into a local minimum (maximum for sign = -1).
    """
    n = disorder.n
    ker = _Kernel(disorder)
    x = _retract(np.array(starts, dtype=float), n)
    m = len(x)
    active = np.ones(m, dtype=bool)
    fails = np.zeros(m, dtype=int)
    tol_abs = tol * math.sqrt(n)
    steps = 0.5 ** np.arange(20)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        xa = x[idx]
        gt, b_mat, lam = ker.system(xa)
        gt = sign * gt
        b_mat = sign * b_mat
        vals = sign * lam * n / ker.p
        gn = np.linalg.norm(gt, axis=1)
        done = gn < tol_abs
        if done.any():
            active[idx[done]] = False
            idx = idx[~done]
            if len(idx) == 0:
                continue
            keep = ~done
            xa, gt, b_mat, vals, gn = xa[keep], gt[keep], b_mat[keep], vals[keep], gn[keep]
        evs = np.linalg.eigvalsh(b_mat)
        floor = 1e-6 * np.abs(evs).max(axis=1)
        shift = np.maximum(0.0, floor - evs[:, 0])
        b_mat += (shift + floor)[:, None, None] * np.eye(n)[None]
        direction = np.linalg.solve(b_mat, -gt[:, :, None])[:, :, 0]
        slope = np.sum(direction * gt, axis=1)
        best = xa
        best_ok = np.zeros(len(xa), dtype=bool)
        for s in steps:
            todo = ~best_ok
            if not todo.any():
                break
            cand = _retract(xa[todo] + s * direction[todo], n)
            cval = sign * ker.value(cand)
            good = cval <= vals[todo] + 1e-4 * s * slope[todo]
            if good.any():
                rows = np.flatnonzero(todo)[good]
                best = best.copy()
                best[rows] = cand[good]
                best_ok[rows] = True
        fails[idx[~best_ok]] += 1
        fails[idx[best_ok]] = 0
        give_up = fails[idx] >= 3
        active[idx[give_up]] = False
        x[idx] = best
    gn = ker.grad_norm(x)
    return x, gn < tol_abs


def refine(disorder, start, tol=1e-10, max_iter=100):
    """Polish one starting point to a critical point; raises NoConvergence."""
    x0 = start.coords if isinstance(start, SpherePoint) else np.asarray(start, dtype=float)
    pts, ok = _batch_newton(disorder, x0[None, :], tol, max_iter)
    if not ok[0]:
        raise NoConvergence("Newton refinement did not reach tolerance %g" % tol)
    return _finalize(disorder, pts[0])


@dataclass
class CriticalCatalog:
    """Deduplicated critical points of one disorder, sorted by value."""

    disorder_seed: object
    records: list
    dedup_overlap: float = 0.99
    n_starts: int = 0
    saturated: bool = False

    @property
    def values(self):
        return np.array([r.value for r in self.records])

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["disorder_seed", "rank", "value", "grad_norm", "index", "overlap_to_rank1"]
            )
            ref = self.records[0].point if self.records else None
            for rank, rec in enumerate(self.records, start=1):
                writer.writerow(
                    [
                        self.disorder_seed,
                        rank,
                        repr(rec.value),
                        repr(rec.grad_norm),
                        rec.index,
                        repr(rec.point.overlap(ref)),
                    ]
                )


def enumerate_critical(
    disorder,
    n_starts=500,
    tol=1e-9,
    dedup_overlap=0.99,
    seed=0,
    saturation=False,
    batch_size=500,
    saturation_batches=3,
    max_starts=20000,
):
    """Multi-start enumeration of critical points.

    With saturation=True, keeps running batches of starts until
    `saturation_batches` consecutive batches add no new point (or the start
    budget runs out).  For even p, each found point is paired with its
    antipode in the catalog.
    """
    p, n = disorder.p, disorder.n
    rng = np.random.default_rng(seed)
    even = p % 2 == 0
    kept = []

    def absorb(pts):
        # for odd p the antipode of a critical point is a distinct critical
        # point (value negated), so dedup compares signed overlaps; for even
        # p antipodes are identified here and re-added as explicit pairs
        new = 0
        if len(pts) == 0:
            return 0
        vals = hamiltonian_batch(disorder, pts)
        for i in np.argsort(vals):
            x = pts[i]
            if kept:
                overlaps = np.array(kept) @ x / n
                if even:
                    overlaps = np.abs(overlaps)
                if overlaps.max() > dedup_overlap:
                    continue
            kept.append(x)
            new += 1
        return new

    # extremal phases: random starts are driven into minima and maxima first,
    # since plain Newton from uniform starts almost always lands on saddles
    total = 0
    for sign in (1.0, -1.0):
        m = batch_size if saturation else max(n_starts // 4, 1)
        starts = rng.standard_normal((m, n))
        pts, ok = _batch_minimize(disorder, starts, tol, sign=sign)
        absorb(pts[ok])
        total += m
    quiet = 0
    saturated = False
    while True:
        m = batch_size if saturation else min(n_starts - total, batch_size)
        if m <= 0:
            break
        starts = rng.standard_normal((m, n))
        pts, ok = _batch_newton(disorder, starts, tol, max_iter=100)
        total += m
        new = absorb(pts[ok])
        if saturation:
            quiet = quiet + 1 if new == 0 else 0
            if quiet >= saturation_batches:
                saturated = True
                break
            if total >= max_starts:
                break
        elif total >= n_starts:
            break
    if not even:
        # the antipode of a critical point is itself a critical point (with
        # value negated); complete any pairs the starts happened to miss
        for x in list(kept):
            overlaps = np.array(kept) @ (-x) / n
            if overlaps.max() <= dedup_overlap:
                kept.append(-x)
    records = [_finalize(disorder, x) for x in kept]
    if even:
        records = records + [
            CriticalRecord(
                point=SpherePoint(-r.point.coords),
                value=r.value,
                grad_norm=r.grad_norm,
                index=r.index,
                eigs=r.eigs,
            )
            for r in records
        ]
    records.sort(key=lambda r: (r.value, tuple(r.point.coords)))
    return CriticalCatalog(
        disorder_seed=disorder.seed,
        records=records,
        dedup_overlap=dedup_overlap,
        n_starts=total,
        saturated=saturated,
    )


def deep_minima(disorder, k, n_starts=200, seed=0, tol=1e-9, dedup_overlap=0.99):
    """The k lowest local minima found by multi-start descent."""
    n = disorder.n
    rng = np.random.default_rng(seed)
    pts, ok = _batch_minimize(disorder, rng.standard_normal((n_starts, n)), tol)
    pts = pts[ok]
    vals = hamiltonian_batch(disorder, pts)
    kept = []
    for i in np.argsort(vals):
        x = pts[i]
        if kept and (np.array(kept) @ x / n).max() > dedup_overlap:
            continue
        kept.append(x)
        if len(kept) >= 4 * k + 8:
            break
    records = [_finalize(disorder, x) for x in kept]
    mins = [r for r in records if r.index == 0]
    mins.sort(key=lambda r: r.value)
    return mins[:k]


def extremal_stats(p, n, n_disorders, k_deepest, k0=0.0, seed=0, n_starts=400, beta=2.0):
    """Centered deep critical values across disorders.

    Returns an array of shape (n_disorders, k_deepest) of H(sigma_0^i) - m_n
    (NaN-padded when fewer points are found); for even p antipodal pairs
    count once.
    """
    from .field import sample_disorder

    params = analytic.ModelParams(p, beta)
    aux = analytic.aux_constants(params, n, k0=k0)
    out = np.full((n_disorders, k_deepest), np.nan)
    ss = np.random.SeedSequence(entropy=seed)
    dseeds = ss.generate_state(n_disorders)
    for i, ds in enumerate(dseeds):
        d = sample_disorder(p, n, int(ds))
        cat = enumerate_critical(d, n_starts=n_starts, seed=int(ds) ^ 0x9E3779B9)
        recs = cat.records
        if p % 2 == 0:
            recs = recs[::2]  # each antipodal pair counted once
        vals = np.array([r.value for r in recs[:k_deepest]])
        out[i, : len(vals)] = vals - aux.m_n
    return out


def _log_mean_abs_det(eigs, shifts):
    """log E|det(M - shift I)| over GOE samples with precomputed spectra.

    eigs has shape (samples, dim); shifts shape (k,).  Returns shape (k,)."""
    # log|det| per sample and shift, then a log-mean-exp over samples
    logdets = np.sum(
        np.log(np.abs(eigs[:, None, :] - shifts[None, :, None])), axis=2
    )
    mx = logdets.max(axis=0)
    return mx + np.log(np.mean(np.exp(logdets - mx), axis=0))


def log_kac_rice_mean(
    p,
    n,
    interval,
    goe_samples=400,
    nodes=400,
    seed=0,
    surrogate=False,
):
    """log of the mean number of critical points with value in `interval`.

    The determinant factor is E|det(GOE_{n-1} - shift I)| estimated from a
    fixed batch of sampled spectra reused across quadrature nodes (or, with
    surrogate=True, the large-n log-potential exp{(n-1) Omega(...)}).
    Infinite endpoints are truncated where the Gaussian value factor falls
    below 1e-30 of its peak on the interval.
    """
    if p < 3 or n < 3:
        raise DomainError("need p >= 3 and n >= 3")
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise DomainError("empty interval")
    # the |u| closest to zero on [a, b] maximizes the Gaussian value factor
    u_peak = 0.0 if a <= 0.0 <= b else (a if a > 0 else b)
    cut = math.sqrt(u_peak * u_peak + 2.0 * n * math.log(1e30))
    a = max(a, -cut)
    b = min(b, cut)
    xs, ws = roots_legendre(nodes)
    us = 0.5 * (b - a) * xs + 0.5 * (b + a)
    log_ws = np.log(0.5 * (b - a) * ws)
    gp = gamma_p(p)
    shifts = gp * us / math.sqrt(n * (n - 1))
    if surrogate:
        logdet = (n - 1) * np.asarray(omega(gp * us / n))
    else:
        rng = np.random.default_rng(seed)
        eigs = np.empty((goe_samples, n - 1))
        for s in range(goe_samples):
            m = rng.standard_normal((n - 1, n - 1))
            eigs[s] = np.linalg.eigvalsh((m + m.T) / math.sqrt(2.0 * (n - 1)))
        logdet = _log_mean_abs_det(eigs, shifts)
    log_gauss = -0.5 * math.log(2.0 * math.pi * n) - us * us / (2.0 * n)
    terms = log_ws + log_gauss + logdet
    mx = terms.max()
    log_integral = mx + math.log(np.sum(np.exp(terms - mx)))
    log_const = log_sphere_area(n) + 0.5 * (n - 1) * math.log(
        (n - 1) * (p - 1) / (2.0 * math.pi)
    )
    out = log_const + log_integral
    if not math.isfinite(out):
        raise QuadratureFailure("Kac-Rice integral is not finite")
    return out


def kac_rice_mean(p, n, interval, **kw):
    """Mean critical-point count (exponentiated log_kac_rice_mean)."""
    return math.exp(log_kac_rice_mean(p, n, interval, **kw))
