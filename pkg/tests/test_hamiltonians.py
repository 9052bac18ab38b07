import numpy as np
import pytest

from mfglab import (
    DriftField,
    QuadraticDriftHamiltonian,
    eval_H,
    grad_p_H,
    validate_hamiltonian,
)


class TestDriftField:
    def test_variants(self):
        assert DriftField("zero")(1.7) == 0.0
        assert DriftField("constant", amplitude=2.0)(-3.0) == 2.0
        assert DriftField("sinusoidal", amplitude=0.5, frequency=2.0)(np.pi / 4) == pytest.approx(0.5)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            DriftField("quadratic")

    def test_tabulated_clamped_outside_table(self):
        x = np.linspace(-2, 2, 9)
        d = DriftField("tabulated", table_x=x, table_v=np.tanh(x))
        assert d(5.0) == pytest.approx(d(2.0))
        assert d.sup_norm == pytest.approx(np.tanh(2.0))

    def test_sup_norm_and_lipschitz(self):
        d = DriftField("sinusoidal", amplitude=3.0, frequency=2.0)
        assert d.sup_norm == 3.0
        assert d.lipschitz == 6.0


class TestEvalH:
    def test_zero_momentum(self, rng):
        h = QuadraticDriftHamiltonian(DriftField("sinusoidal", amplitude=1.0))
        for x in rng.standard_normal(5):
            assert eval_H(h, 0.0, x) == 0.0

    def test_free_hamiltonian(self, zero_ham):
        assert eval_H(zero_ham, 1.0, 0.3) == pytest.approx(0.5)

    def test_unit_drift(self):
        h = QuadraticDriftHamiltonian(DriftField("constant", amplitude=1.0))
        assert eval_H(h, 2.0, 0.0) == pytest.approx(0.0)  # 2 - 2

    def test_growth_bound(self, rng):
        h = QuadraticDriftHamiltonian(DriftField("sinusoidal", amplitude=2.0))
        for _ in range(50):
            p, x = rng.uniform(-10, 10, 2)
            val = eval_H(h, p, x)
            assert -h.c0 <= val <= h.c0 * (1.0 + p**2)


class TestGradPH:
    def test_vanishes_at_drift(self):
        h = QuadraticDriftHamiltonian(DriftField("constant", amplitude=1.5))
        assert grad_p_H(h, 1.5, 0.0) == pytest.approx(0.0)

    def test_identity_for_zero_drift(self, zero_ham, rng):
        p = rng.standard_normal(10)
        assert np.allclose(grad_p_H(zero_ham, p, 0.0), p, rtol=0, atol=0)

    def test_unit_drift_shift(self):
        h = QuadraticDriftHamiltonian(DriftField("constant", amplitude=1.0))
        assert grad_p_H(h, 2.0, 0.0) == pytest.approx(1.0)

    def test_matches_finite_differences(self, rng):
        h = QuadraticDriftHamiltonian(DriftField("sinusoidal", amplitude=1.0, frequency=3.0))
        eps = 1e-6
        for _ in range(20):
            p, x = rng.uniform(-5, 5, 2)
            fd = (eval_H(h, p + eps, x) - eval_H(h, p - eps, x)) / (2 * eps)
            assert grad_p_H(h, p, x) == pytest.approx(fd, abs=1e-8 * max(1, abs(fd)))

    def test_bregman_identity_quadratic(self, rng):
        # H(p) - H(q) - DH(q)(p-q) = |p-q|^2 / 2 exactly for the quadratic family
        h = QuadraticDriftHamiltonian(DriftField("sinusoidal", amplitude=1.0))
        for _ in range(20):
            p, q, x = rng.uniform(-5, 5, 3)
            lhs = eval_H(h, p, x) - eval_H(h, q, x) - grad_p_H(h, q, x) * (p - q)
            assert lhs == pytest.approx(0.5 * (p - q) ** 2, abs=1e-10)


class TestValidateHamiltonian:
    def test_quadratic_modulus_is_one(self, zero_ham):
        rep = validate_hamiltonian(zero_ham, seed=0)
        assert rep.convexity_ok
        assert rep.convexity_modulus == pytest.approx(1.0, abs=1e-6)

    def test_sinusoidal_x_lipschitz(self):
        h = QuadraticDriftHamiltonian(DriftField("sinusoidal", amplitude=1.0, frequency=1.0))
        rep = validate_hamiltonian(h, seed=0)
        # |H(p,x)-H(p,y)| = |v(x)-v(y)||p| <= |x-y||p|, plus the D_pH part: constant <= 2
        assert rep.x_lipschitz_constant <= 2.0 + 1e-6

    def test_concave_injection_fails(self):
        rep = validate_hamiltonian(lambda p, x: -(p**2), seed=0)
        assert not rep.convexity_ok
        assert rep.convexity_modulus < 0

    def test_budget_floor(self, zero_ham):
        with pytest.raises(ValueError):
            validate_hamiltonian(zero_ham, budget=10)

    def test_deterministic(self, zero_ham):
        assert validate_hamiltonian(zero_ham, seed=3) == validate_hamiltonian(zero_ham, seed=3)
