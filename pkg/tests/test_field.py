import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pspin import field
from pspin.errors import DimensionMismatch, DomainError, SizeError


def naive_hamiltonian(disorder, sigma):
    """Triple-loop oracle for H, independent of einsum/tensordot paths."""
    p, n = disorder.p, disorder.n
    x = np.asarray(sigma.coords if hasattr(sigma, "coords") else sigma, float)
    total = 0.0
    for idx in itertools.product(range(n), repeat=p):
        term = disorder.couplings[idx]
        for i in idx:
            term *= x[i]
        total += term
    return n ** (-(p - 1) / 2.0) * total


class TestSpherePoint:
    def test_normalizes(self):
        pt = field.SpherePoint(np.array([3.0, 4.0, 0.0, 0.0]))
        assert np.linalg.norm(pt.coords) == pytest.approx(2.0)

    def test_zero_rejected(self):
        with pytest.raises(DomainError):
            field.SpherePoint(np.zeros(5))

    def test_overlap_range(self):
        rng = np.random.default_rng(0)
        a = field.random_point(12, rng)
        b = field.random_point(12, rng)
        assert -1.0 <= a.overlap(b) <= 1.0
        assert a.overlap(a) == pytest.approx(1.0)


class TestDisorder:
    def test_deterministic(self):
        d1 = field.sample_disorder(3, 4, seed=7)
        d2 = field.sample_disorder(3, 4, seed=7)
        assert np.array_equal(d1.couplings, d2.couplings)

    def test_size_guard(self):
        with pytest.raises(SizeError):
            field.sample_disorder(3, 10, seed=0, max_entries=100)

    def test_serialization_roundtrip(self, tmp_path):
        d = field.sample_disorder(4, 5, seed=11)
        path = tmp_path / "d.bin"
        d.save(path)
        d2 = field.Disorder.load(path)
        assert (d2.p, d2.n, d2.seed) == (4, 5, 11)
        assert np.array_equal(d.couplings, d2.couplings)

    def test_sym_is_symmetric(self):
        d = field.sample_disorder(3, 4, seed=3)
        s = d.sym
        assert np.allclose(s, np.transpose(s, (1, 0, 2)))
        assert np.allclose(s, np.transpose(s, (0, 2, 1)))


class TestHamiltonian:
    @pytest.mark.parametrize("p,n,seed", [(2, 5, 0), (3, 4, 1), (4, 3, 2)])
    def test_matches_naive_loops(self, p, n, seed):
        d = field.sample_disorder(p, n, seed=seed)
        rng = np.random.default_rng(seed)
        for _ in range(3):
            pt = field.random_point(n, rng)
            assert field.hamiltonian(d, pt) == pytest.approx(
                naive_hamiltonian(d, pt), rel=1e-10
            )

    def test_single_coupling_contraction(self):
        d = field.sample_disorder(3, 4, seed=0)
        c = np.zeros((4, 4, 4))
        c[0, 0, 0] = 1.0
        d = field.Disorder(3, 4, c)
        x = np.array([2.0, 0.0, 0.0, 0.0])
        # H = n^{-1} * 2^3 = 2
        assert field.hamiltonian(d, field.SpherePoint(x)) == pytest.approx(2.0)

    def test_zero_tensor(self):
        d = field.Disorder(3, 4, np.zeros((4, 4, 4)))
        rng = np.random.default_rng(0)
        assert field.hamiltonian(d, field.random_point(4, rng)) == 0.0

    def test_batch_agrees_with_single(self):
        for p in (2, 3, 4):
            d = field.sample_disorder(p, 6, seed=5)
            rng = np.random.default_rng(5)
            pts = np.stack([field.random_point(6, rng).coords for _ in range(7)])
            batch = field.hamiltonian_batch(d, pts)
            singles = [field.hamiltonian(d, field.SpherePoint(x)) for x in pts]
            assert np.allclose(batch, singles, rtol=1e-12)

    def test_variance_scaling(self):
        # E H(sigma)^2 = n at overlap 1
        n, trials = 8, 4000
        rng = np.random.default_rng(42)
        pt = field.random_point(n, rng)
        vals = []
        for s in range(trials):
            d = field.sample_disorder(3, n, seed=s)
            vals.append(field.hamiltonian(d, pt))
        vals = np.array(vals)
        se = vals.std() ** 2 * math.sqrt(2.0 / trials)
        assert np.mean(vals**2) == pytest.approx(n, abs=3 * math.sqrt(2.0 / trials) * n)


class TestDerivatives:
    @pytest.mark.parametrize("p", [3, 4])
    def test_gradient_matches_finite_differences(self, p):
        # move along frame directions through the Householder rotation and
        # difference the Hamiltonian on the sphere
        n = 8
        d = field.sample_disorder(p, n, seed=1)
        rng = np.random.default_rng(1)
        pt = field.random_point(n, rng)
        fd = field.frame_derivatives(d, pt)
        q = field.householder_to_pole(pt.coords / math.sqrt(n))
        h = 1e-6
        y0 = q @ pt.coords
        for i in range(n - 1):
            e = np.zeros(n)
            e[i] = h
            up = field.hamiltonian(d, field.SpherePoint(q @ (y0 + e)))
            dn = field.hamiltonian(d, field.SpherePoint(q @ (y0 - e)))
            assert fd.gradient[i] == pytest.approx((up - dn) / (2 * h), rel=2e-5, abs=1e-7)

    def test_euler_identity(self):
        # x . grad H = p H for the homogeneous extension
        d = field.sample_disorder(4, 7, seed=2)
        rng = np.random.default_rng(2)
        pt = field.random_point(7, rng)
        g = field.euclidean_gradient(d, pt)
        h_val = field.hamiltonian(d, pt)
        assert pt.coords @ g == pytest.approx(4 * h_val, rel=1e-10)

    def test_hessian_symmetry_and_radial_shift(self):
        d = field.sample_disorder(3, 6, seed=3)
        rng = np.random.default_rng(3)
        pt = field.random_point(6, rng)
        fd = field.frame_derivatives(d, pt)
        assert np.allclose(fd.hessian, fd.hessian.T)
        shift = fd.g_matrix - fd.hessian
        assert np.allclose(shift, (3.0 / 6) * fd.value * np.eye(5), atol=1e-10)


class TestDecomposition:
    def test_reconstruction(self):
        d = field.sample_disorder(3, 10, seed=4)
        rng = np.random.default_rng(4)
        base = field.random_point(10, rng)
        dec = field.decompose(d, base)
        for _ in range(5):
            pt = field.random_point(10, rng)
            total = sum(dec.component(k, pt) for k in range(4))
            ref = field.hamiltonian(d, pt)
            assert total == pytest.approx(ref, rel=1e-11)

    def test_layer_zero_tracks_overlap(self):
        d = field.sample_disorder(3, 10, seed=5)
        rng = np.random.default_rng(5)
        base = field.random_point(10, rng)
        dec = field.decompose(d, base)
        pt = field.random_point(10, rng)
        q = base.overlap(pt)
        assert dec.component(0, pt) == pytest.approx(
            q**3 * field.hamiltonian(d, base), rel=1e-10
        )


class TestConditionalField:
    def test_pole_value_and_gradient(self):
        n, u = 12, -15.0
        cf = field.conditional_field(3, n, u, seed=0)
        pole = field.pole(n)
        assert cf(pole.coords) == pytest.approx(u, abs=1e-9)
        h = 1e-6
        for i in range(n - 1):
            x = pole.coords.astype(float).copy()
            x[i] += h
            x *= math.sqrt(n) / np.linalg.norm(x)
            val = cf(x)
            assert abs(val - u) < 1e-4  # gradient vanishes at the pole

    def test_a_matrix_is_symmetric(self):
        cf = field.conditional_field(3, 10, -12.0, seed=1)
        assert np.allclose(cf.a_matrix, cf.a_matrix.T)


class TestInterpolate:
    def test_endpoints(self):
        d = field.sample_disorder(3, 5, seed=6)
        d2 = field.sample_disorder(3, 5, seed=7)
        z = field.interpolate(d, d2, 0.0)
        o = field.interpolate(d, d2, 1.0)
        assert np.allclose(z.couplings, d.couplings)
        assert np.allclose(o.couplings, d2.couplings)

    def test_preserves_marginal_variance(self):
        # (1-t)^2 + 2t - t^2 = 1: the interpolated tensor is standard normal
        d = field.sample_disorder(3, 6, seed=8)
        d2 = field.sample_disorder(3, 6, seed=9)
        t = 0.37
        mixed = field.interpolate(d, d2, t)
        var = mixed.couplings.var()
        assert var == pytest.approx(1.0, abs=0.05)

    def test_dimension_mismatch(self):
        d = field.sample_disorder(3, 5, seed=0)
        d2 = field.sample_disorder(3, 6, seed=0)
        with pytest.raises(DimensionMismatch):
            field.interpolate(d, d2, 0.5)


class TestRestriction:
    def test_equator_has_zero_overlap(self):
        rng = np.random.default_rng(0)
        base = field.random_point(9, rng)
        d = field.sample_disorder(3, 9, seed=0)
        r = field.restrict(d, base, 0.0)
        tau = rng.standard_normal(8)
        pt = r.point(tau)
        assert base.overlap(pt) == pytest.approx(0.0, abs=1e-12)

    @given(q=st.floats(min_value=-0.95, max_value=0.95))
    @settings(max_examples=30, deadline=None)
    def test_norm_and_overlap(self, q):
        rng = np.random.default_rng(1)
        base = field.random_point(9, rng)
        d = field.sample_disorder(3, 9, seed=1)
        r = field.restrict(d, base, q)
        pt = r.point(rng.standard_normal(8))
        assert np.linalg.norm(pt.coords) == pytest.approx(3.0, abs=1e-10)
        assert base.overlap(pt) == pytest.approx(q, abs=1e-10)
