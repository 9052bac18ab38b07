import numpy as np
import pytest

from mfglab import (
    CuckerSmaleKernel,
    DimensionError,
    ParticleEnsemble,
    cs_rhs,
    moment2,
    richardson_order_ratio,
    sample_to_atoms,
    solve_cs,
)


def phase_atoms(xs, vs):
    return ParticleEnsemble.equal_weights(np.column_stack([xs, vs]), 1)


class TestCsRhs:
    def test_single_atom_zero(self):
        m = phase_atoms([0.0], [3.0])
        assert np.all(cs_rhs(m, CuckerSmaleKernel(1.0, 0.5)) == 0.0)

    def test_two_body_flat_weight(self, cs_flat, two_body_phase):
        a = cs_rhs(two_body_phase, cs_flat)
        # a1 = -1/2 * 2 * (1 - (-1)) = -2
        assert a[0, 0] == pytest.approx(-2.0)
        assert a[1, 0] == pytest.approx(2.0)

    def test_weighted_sum_vanishes(self, rng):
        pts = rng.standard_normal((12, 2))
        w = rng.uniform(0.1, 1.0, 12)
        w /= w.sum()
        m = ParticleEnsemble(pts, w, 1)
        a = cs_rhs(m, CuckerSmaleKernel(1.0, 0.7))
        assert abs(float(w @ a[:, 0])) < 1e-12

    def test_position_only_rejected(self):
        m = ParticleEnsemble.equal_weights(np.zeros((3, 1)), 1)
        with pytest.raises(DimensionError):
            cs_rhs(m, CuckerSmaleKernel())


class TestSolveCs:
    def test_two_body_exponential_decay(self, cs_flat, two_body_phase):
        # with g == 1 the two-body system is linear: v1(t) = e^{-2t}
        path = solve_cs(two_body_phase, cs_flat, 1.0, 1e-3)
        v1 = path.measures[-1].velocities[0, 0]
        assert v1 == pytest.approx(np.exp(-2.0), abs=1e-6)

    def test_mean_velocity_conserved(self, rng):
        m0 = phase_atoms(rng.standard_normal(64), rng.standard_normal(64))
        path = solve_cs(m0, CuckerSmaleKernel(1.0, 0.5), 5.0, 1e-3, save_every=100)
        vbar0 = float(m0.weights @ m0.velocities[:, 0])
        for m in path.measures:
            assert abs(float(m.weights @ m.velocities[:, 0]) - vbar0) <= 1e-9

    def test_velocity_moment_dissipates(self, rng):
        m0 = phase_atoms(rng.standard_normal(32), rng.standard_normal(32))
        path = solve_cs(m0, CuckerSmaleKernel(1.0, 0.5), 5.0, 1e-3, save_every=10)
        m2v = np.array([moment2(m, "velocity") for m in path.measures])
        assert np.all(np.diff(m2v) <= 1e-12)

    def test_rk4_order_check(self, cs_flat, two_body_phase):
        ratio = richardson_order_ratio(two_body_phase, cs_flat, 1.0, 0.05)
        assert 8.0 <= ratio <= 32.0

    def test_order_check_gate_runs(self, cs_flat, two_body_phase):
        path = solve_cs(two_body_phase, cs_flat, 0.5, 1e-2, order_check=True)
        assert len(path) >= 2

    def test_velocity_diameter_contracts(self, rng):
        m0 = phase_atoms(rng.standard_normal(16), rng.standard_normal(16))
        path = solve_cs(m0, CuckerSmaleKernel(2.0, 0.2), 3.0, 1e-2)
        diam = [np.max(m.velocities) - np.min(m.velocities) for m in path.measures]
        assert np.all(np.diff(diam) <= 1e-12)

    def test_position_only_rejected(self):
        m = ParticleEnsemble.equal_weights(np.zeros((3, 1)), 1)
        with pytest.raises(DimensionError):
            solve_cs(m, CuckerSmaleKernel(), 1.0, 1e-2)


class TestSampling:
    def test_sample_to_atoms_deterministic(self):
        sampler = lambda rng, n: np.column_stack(
            [rng.standard_normal(n), rng.standard_normal(n)]
        )
        a = sample_to_atoms(sampler, 32, seed=5, spatial_dim=1)
        b = sample_to_atoms(sampler, 32, seed=5, spatial_dim=1)
        assert np.array_equal(a.points, b.points)
        assert a.is_phase_space

    def test_two_resolution_consistency(self):
        # doubling N moves the empirical solution by O(N^{-1/2}), not more
        from mfglab.measures import wasserstein1_particles

        sampler = lambda rng, n: np.column_stack(
            [0.5 * rng.standard_normal(n), rng.standard_normal(n)]
        )
        kernel = CuckerSmaleKernel(1.0, 0.4)
        mA = sample_to_atoms(sampler, 64, seed=1, spatial_dim=1)
        mB = sample_to_atoms(sampler, 128, seed=2, spatial_dim=1)
        d0 = wasserstein1_particles(mA, mB)
        pA = solve_cs(mA, kernel, 1.0, 1e-2)
        pB = solve_cs(mB, kernel, 1.0, 1e-2)
        d1 = wasserstein1_particles(pA.measures[-1], pB.measures[-1])
        assert d1 <= 2.0 * d0 + 0.1
