"""End-to-end checks on the less common model classes: jump mixtures,
infinite variation with jumps, and unkilled (p = 0) models on and off the
integer seam."""

import math

import numpy as np
import pytest

from pssmax.errors import Degenerate
from pssmax.factorization import (
    absorption_transform,
    confined_absorption_transform,
    expected_peak_transform,
    expected_residual_transform,
    jump_at_max_law,
)
from pssmax.models import (
    ExponentialNegative,
    FiniteMixture,
    JumpSpec,
    LevyModel,
    PointMassNegative,
    PssmpModel,
)
from pssmax.montecarlo import Functional, estimate, simulate_functionals


@pytest.fixture(scope="module")
def model_mix():
    mix = FiniteMixture(components=((0.6, ExponentialNegative(2.0)),
                                    (0.4, PointMassNegative(0.8))))
    return PssmpModel(levy=LevyModel(sigma2=0.0, drift=1.2, jumps=JumpSpec(1.5, mix)),
                      p=0.7, alpha=1.3)


@pytest.fixture(scope="module")
def model_iv_jumps():
    return PssmpModel(
        levy=LevyModel(sigma2=1.0, drift=0.3, jumps=JumpSpec(0.8, ExponentialNegative(1.5))),
        p=1.0, alpha=2.0)


@pytest.fixture(scope="module")
def unkilled_levy():
    return LevyModel(sigma2=0.0, drift=1.0, jumps=JumpSpec(2.0, ExponentialNegative(1.0)))


class TestMixtureModel:
    def test_mass_and_routes(self, model_mix):
        law = jump_at_max_law(model_mix)
        assert law.mass() == pytest.approx(1.0, abs=1e-9)
        assert law.integrate(lambda j: np.ones_like(j)) == pytest.approx(1.0, abs=1e-9)
        ext, integ = absorption_transform(model_mix, 1.0, 1.0, "both")
        assert ext == pytest.approx(integ, rel=1e-6)

    def test_mc_agreement(self, model_mix):
        n, seed = 30_000, 77
        law = jump_at_max_law(model_mix)
        sample = simulate_functionals(model_mix, 1.0, n, seed)
        checks = [
            (Functional.exp_absorption(1.0),
             absorption_transform(model_mix, 1.0, 1.0, "extension")),
            (Functional.exp_residual(1.0),
             expected_residual_transform(model_mix, 1.0, 1.0)),
            (Functional.of_jump(lambda j: j, "J"), law.integrate(lambda j: j)),
        ]
        for fn, ana in checks:
            rep = estimate(model_mix, 1.0, fn, n, seed, sample=sample, analytic=ana)
            assert abs(rep.z) < 3.5, rep

    def test_sampler_matches_integrate(self, model_mix):
        law = jump_at_max_law(model_mix)
        rng = np.random.default_rng(11)
        draws = law.sample(rng, 40_000)
        target = law.integrate(lambda j: j)
        z = (np.mean(draws) - target) / (np.std(draws, ddof=1) / math.sqrt(40_000))
        assert abs(z) < 3.5


class TestInfiniteVariationWithJumps:
    def test_two_routes(self, model_iv_jumps):
        ext, integ = absorption_transform(model_iv_jumps, 1.0, 1.0, "both")
        assert ext == pytest.approx(integ, rel=1e-6)

    def test_euler_overlay_against_analytic(self, model_iv_jumps):
        n, h = 8000, 1e-3
        ana = absorption_transform(model_iv_jumps, 1.0, 1.0, "extension")
        rep = estimate(model_iv_jumps, 1.0, Functional.exp_absorption(1.0), n, 55,
                       h=h, analytic=ana)
        assert abs(rep.estimate - ana) <= 3.5 * rep.stderr + 5.0 * math.sqrt(h)
        sample = simulate_functionals(model_iv_jumps, 1.0, 2000, 55, h=h)
        assert float(np.mean(sample.j)) > 0.99


class TestUnkilled:
    def test_nondegenerate_routes_and_mc(self, unkilled_levy):
        m = PssmpModel(levy=unkilled_levy, p=0.0, alpha=0.6)
        assert m.degeneracy is None
        ext, integ = absorption_transform(m, 1.0, 1.0, "both")
        assert ext == pytest.approx(integ, rel=1e-6)
        n, seed = 30_000, 67
        sample = simulate_functionals(m, 1.0, n, seed)
        checks = [
            (Functional.exp_absorption(1.0), ext),
            (Functional.exp_residual(1.0), expected_residual_transform(m, 1.0, 1.0)),
            (Functional.of_jump(lambda j: j, "J"),
             jump_at_max_law(m).integrate(lambda j: j)),
        ]
        for fn, ana in checks:
            rep = estimate(m, 1.0, fn, n, seed, sample=sample, analytic=ana)
            assert abs(rep.z) < 3.5, rep

    def test_degenerate_seam_at_zero_killing(self, unkilled_levy):
        # phi(0) = 1 exactly and alpha = 1/2 puts the model on the seam (m=2)
        m = PssmpModel(levy=unkilled_levy, p=0.0, alpha=0.5)
        assert m.degeneracy == 2
        assert jump_at_max_law(m).atom_mass == 0.0
        n, seed = 30_000, 66
        ana = absorption_transform(m, 1.0, 1.0, "integrated")
        sample = simulate_functionals(m, 1.0, n, seed)
        rep = estimate(m, 1.0, Functional.exp_absorption(1.0), n, seed,
                       sample=sample, analytic=ana)
        assert abs(rep.z) < 3.5, rep
        rep = estimate(
            m, 1.0, Functional.exp_peak_time(1.0), n, seed, sample=sample,
            analytic=expected_peak_transform(m, 1.0, 1.0, lambda v: np.ones_like(v)))
        assert abs(rep.z) < 3.5, rep
        # seam continuity of the confined transform at zero killing
        v0 = confined_absorption_transform(m, 0.5, 1.0, 1.0)
        for eps in (1e-4, -1e-4):
            pert = PssmpModel(levy=unkilled_levy, p=0.0, alpha=0.5 * (1 + eps))
            v = confined_absorption_transform(pert, 0.5, 1.0, 1.0)
            assert abs(v - v0) / v0 < 1e-3

    def test_residual_expectation_refused_on_seam(self, unkilled_levy):
        m = PssmpModel(levy=unkilled_levy, p=0.0, alpha=0.5)
        with pytest.raises(Degenerate):
            expected_residual_transform(m, 1.0, 1.0)
