import numpy as np
import pytest

from mfglab import (
    CflError,
    ExponentialKernel,
    GridDensity,
    MeasurePath,
    PdeConfig,
    QuadraticDriftHamiltonian,
    ZeroKernel,
    fp_forward,
    hjb_backward,
    solve_mfg_fixed_point,
)
from mfglab.kernels import CrowdRadialKernel
from mfglab.measures import moment2, wasserstein1_1d


def constant_kernel(c):
    """k identically c, so F(x, m) = c for every probability measure m."""
    knots = np.array([0.0, 5.0, 10.0, 100.0])
    return CrowdRadialKernel(knots, np.full(4, c))


class LinearGrowthKernel:
    """k(x) = |x|: the coupling F = k*m grows linearly at infinity."""

    def phi(self, r):
        return np.asarray(r, dtype=float)

    def dphi(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.abs(x) if x.ndim <= 1 else np.sqrt(np.sum(x**2, axis=-1))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        r = self.value(x)
        if x.ndim <= 1:
            return np.sign(x)
        with np.errstate(invalid="ignore"):
            return np.where(r[..., None] > 0, x / np.maximum(r, 1e-300)[..., None], 0.0)


def frozen_path(cfg, m0):
    return MeasurePath(cfg.times, [m0] * (cfg.n_steps + 1))


class TestPdeConfig:
    def test_viscosity_schedule(self):
        assert PdeConfig(lam=16.0).viscosity == pytest.approx(0.25)
        assert PdeConfig(lam=16.0, nu=0.1).viscosity == 0.1

    def test_validation(self):
        with pytest.raises(ValueError):
            PdeConfig(lam=-1.0)
        with pytest.raises(ValueError):
            PdeConfig(lam=1.0, nu=-0.1)
        with pytest.raises(ValueError):
            PdeConfig(lam=1.0, mode="newton")
        with pytest.raises(ValueError):
            PdeConfig(lam=1.0, T=-1.0)


class TestHjbBackward:
    def test_no_coupling_no_drift_gives_zero(self, zero_ham, gauss_m0):
        cfg = PdeConfig(lam=10.0)
        u = hjb_backward(cfg, zero_ham, ZeroKernel(), frozen_path(cfg, gauss_m0))
        assert np.all(u == 0.0)

    def test_constant_coupling_oracle(self, zero_ham, gauss_m0):
        # F = c: the scalar ODE u' = lam u - c with u(T)=0 has the
        # closed form u(t) = (c/lam)(1 - e^{-lam(T-t)}), and the
        # integrating-factor step reproduces it to roundoff
        c, lam = 0.7, 10.0
        cfg = PdeConfig(lam=lam, nu=0.0)
        u = hjb_backward(cfg, zero_ham, constant_kernel(c), frozen_path(cfg, gauss_m0))
        t = cfg.times[:, None]
        exact = (c / lam) * (1.0 - np.exp(-lam * (cfg.T - t))) * np.ones((1, cfg.n_x))
        assert np.max(np.abs(u - exact)) < 1e-6

    def test_linear_growth_scaling(self, zero_ham, gauss_m0):
        # F with linear growth: lam * max |u| / (1+|x|) stays O(1) in lam
        ratios = []
        for lam in (20.0, 40.0, 80.0):
            cfg = PdeConfig(lam=lam)
            u = hjb_backward(cfg, zero_ham, LinearGrowthKernel(), frozen_path(cfg, gauss_m0))
            x = cfg.cell_centers
            ratios.append(lam * np.max(np.abs(u) / (1.0 + np.abs(x))[None, :]))
        assert max(ratios) < 10.0
        assert max(ratios) < 1.5 * min(ratios)

    def test_positive_coupling_gives_positive_u(self, zero_ham, gauss_m0, exp_kernel):
        cfg = PdeConfig(lam=20.0)
        u = hjb_backward(cfg, zero_ham, exp_kernel, frozen_path(cfg, gauss_m0))
        assert np.min(u) >= 0.0

    def test_wrong_time_grid_rejected(self, zero_ham, gauss_m0):
        cfg = PdeConfig(lam=10.0)
        bad = MeasurePath(np.array([0.0, cfg.T]), [gauss_m0, gauss_m0])
        with pytest.raises(ValueError, match="time grid"):
            hjb_backward(cfg, zero_ham, ZeroKernel(), bad)


class TestFpForward:
    def test_zero_drift_zero_viscosity_stationary(self, zero_ham, gauss_m0):
        cfg = PdeConfig(lam=10.0, nu=0.0)
        u = np.zeros((cfg.n_steps + 1, cfg.n_x))
        path = fp_forward(cfg, zero_ham, u, gauss_m0)
        assert np.array_equal(path.measures[-1].values, gauss_m0.values)

    def test_constant_drift_translates(self, zero_ham, gauss_m0):
        # u = -x/lam makes the transport drift b = -lam Du = 1
        cfg = PdeConfig(lam=10.0, T=0.5, nu=0.0)
        u = np.tile(-cfg.cell_centers / cfg.lam, (cfg.n_steps + 1, 1))
        path = fp_forward(cfg, zero_ham, u, gauss_m0)
        translated = GridDensity.gaussian(0.5, 0.5, gauss_m0.origin, gauss_m0.dx, gauss_m0.n)
        assert wasserstein1_1d(path.measures[-1], translated) <= gauss_m0.dx + 0.05 * cfg.dt / cfg.dx

    def test_pure_diffusion_variance_growth(self, zero_ham, gauss_m0):
        nu = 0.1
        cfg = PdeConfig(lam=10.0, T=1.0, nu=nu)
        u = np.zeros((cfg.n_steps + 1, cfg.n_x))
        path = fp_forward(cfg, zero_ham, u, gauss_m0)
        var0 = moment2(gauss_m0)
        var1 = moment2(path.measures[-1])
        assert var1 == pytest.approx(var0 + 2 * nu * cfg.T, rel=0.02)

    def test_mass_and_nonnegativity_every_node(self, zero_ham, gauss_m0, exp_kernel):
        cfg = PdeConfig(lam=20.0)
        u = hjb_backward(cfg, zero_ham, exp_kernel, frozen_path(cfg, gauss_m0))
        path = fp_forward(cfg, zero_ham, u, gauss_m0)
        for m in path.measures:
            assert abs(m.dx * m.values.sum() - 1.0) <= 1e-10
            assert np.min(m.values) >= 0.0

    def test_cfl_violation_raises(self, zero_ham, gauss_m0):
        cfg = PdeConfig(lam=10.0, dt=0.05, nu=0.0)
        u = np.tile(-10.0 * cfg.cell_centers / cfg.lam, (cfg.n_steps + 1, 1))
        with pytest.raises(CflError, match="CFL"):
            fp_forward(cfg, zero_ham, u, gauss_m0)


class TestFixedPoint:
    def test_uncoupled_converges_immediately(self, zero_ham, gauss_m0):
        cfg = PdeConfig(lam=10.0)
        sol = solve_mfg_fixed_point(cfg, zero_ham, ZeroKernel(), gauss_m0)
        assert sol.converged
        assert sol.iterations == 1
        assert sol.residual == 0.0

    def test_exponential_model_converges(self, zero_ham, gauss_m0, exp_kernel):
        cfg = PdeConfig(lam=20.0)
        sol = solve_mfg_fixed_point(cfg, zero_ham, exp_kernel, gauss_m0)
        assert sol.converged
        assert sol.residual < 1e-6
        assert np.all(np.isfinite(sol.u_path))

    def test_fictitious_play_monotone_after_burn_in(self, zero_ham, exp_kernel):
        cfg = PdeConfig(
            lam=20.0, n_x=128, dt=2e-3, mode="fictitious-play", max_iterations=25, tolerance=1e-10
        )
        m0 = GridDensity.gaussian(0.0, 0.5, -cfg.half_width, cfg.dx, cfg.n_x)
        sol = solve_mfg_fixed_point(cfg, zero_ham, exp_kernel, m0)
        hist = np.array(sol.residual_history[4:])
        assert np.all(np.diff(hist) <= 1e-12)

    def test_non_convergence_flagged_not_raised(self, zero_ham, exp_kernel):
        cfg = PdeConfig(lam=20.0, n_x=128, dt=2e-3, max_iterations=2, tolerance=1e-14)
        m0 = GridDensity.gaussian(0.0, 0.5, -cfg.half_width, cfg.dx, cfg.n_x)
        sol = solve_mfg_fixed_point(cfg, zero_ham, exp_kernel, m0)
        assert not sol.converged
        assert sol.iterations <= 2
        assert np.isfinite(sol.residual)
