import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pssmax.errors import DomainError, ModelError, NoConvergence, SchemaError
from pssmax.models import (
    ExponentialNegative,
    FiniteMixture,
    JumpSpec,
    LevyModel,
    PointMassNegative,
    PssmpModel,
    atom_at_maximum,
    first_passage_transform,
    ladder_down_exponent,
    ladder_up_exponent,
    load_model,
    model_from_dict,
    model_to_dict,
)

from conftest import GOLDEN


class TestExponent:
    def test_brownian_values(self, model_b):
        assert model_b.levy.psi(3.0) == pytest.approx(9.0, abs=1e-14)
        assert model_b.levy.psi(0.0) == 0.0
        assert model_b.levy.psi_prime(3.0) == pytest.approx(6.0, abs=1e-14)

    def test_jump_model_values(self, model_f):
        # psi(l) = l - l/(1+l)
        assert model_f.levy.psi(1.0) == pytest.approx(0.5, abs=1e-14)
        assert model_f.levy.psi(0.0) == 0.0
        assert model_f.levy.psi_prime(1.0) == pytest.approx(0.75, abs=1e-14)
        assert model_f.levy.psi_prime(0.0) == pytest.approx(0.0, abs=1e-14)

    def test_array_broadcast(self, model_f):
        lam = np.array([0.0, 0.5, 1.0, 4.0])
        np.testing.assert_allclose(model_f.levy.psi(lam), lam - lam / (1 + lam), rtol=1e-14)

    @pytest.mark.parametrize("lam", [0.1, 0.9, 3.7, 12.0])
    def test_derivative_matches_finite_differences(self, model_f, model_b, lam):
        h = 1e-5
        for m in (model_f, model_b):
            fd = (m.levy.psi(lam + h) - m.levy.psi(lam - h)) / (2 * h)
            assert m.levy.psi_prime(lam) == pytest.approx(fd, abs=5e-9)

    @given(st.floats(0.01, 20.0), st.floats(0.01, 20.0), st.floats(0.01, 20.0))
    @settings(max_examples=60, deadline=None)
    def test_strict_convexity(self, a, b, c):
        model = LevyModel(sigma2=0.0, drift=1.0, jumps=JumpSpec(1.0, ExponentialNegative(1.0)))
        l1, l2, l3 = sorted({a, b, c})[:3] if len({a, b, c}) == 3 else (a, a + 1, a + 2)
        w = (l3 - l2) / (l3 - l1)
        chord = w * model.psi(l1) + (1 - w) * model.psi(l3)
        assert model.psi(l2) < chord + 1e-12

    def test_point_and_mixture_transforms(self):
        law = FiniteMixture(components=((0.25, PointMassNegative(2.0)),
                                        (0.75, ExponentialNegative(3.0))))
        model = LevyModel(sigma2=0.0, drift=2.0, jumps=JumpSpec(1.5, law))
        lam = 1.3
        expected = 2.0 * lam + 1.5 * (
            0.25 * math.exp(-2.0 * lam) + 0.75 * 3.0 / (3.0 + lam) - 1.0
        )
        assert model.psi(lam) == pytest.approx(expected, rel=1e-14)


class TestInverse:
    def test_known_roots(self, model_f, model_b):
        assert model_b.levy.phi(1.0) == pytest.approx(1.0, abs=1e-12)
        assert model_f.levy.phi(1.0) == pytest.approx(GOLDEN, abs=1e-10)
        # the unit-drift jump model oscillates: largest zero of psi is 0
        assert model_f.levy.phi(0.0) == 0.0

    def test_largest_root_with_negative_mean(self):
        # drift to -infinity: psi dips below zero, phi(0) is the upper zero
        model = LevyModel(sigma2=0.0, drift=1.0, jumps=JumpSpec(2.0, ExponentialNegative(1.0)))
        assert model.psi_prime(0.0) < 0
        assert model.phi(0.0) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("q", np.logspace(-6, 6, 13).tolist())
    def test_inverse_consistency(self, model_f, model_b, q):
        for m in (model_f, model_b):
            root = m.levy.phi(q)
            assert m.levy.psi(root) == pytest.approx(q, rel=1e-10)

    def test_rejects_negative(self, model_f):
        with pytest.raises(DomainError):
            model_f.levy.phi(-0.5)


class TestClassification:
    def test_variation(self, model_f, model_b):
        assert model_f.levy.is_finite_variation
        assert not model_b.levy.is_finite_variation
        assert model_b.levy.fv_drift == math.inf

    def test_monotone_paths_rejected(self):
        with pytest.raises(ModelError):
            LevyModel(sigma2=0.0, drift=1.0, jumps=JumpSpec(0.0))
        with pytest.raises(ModelError):
            LevyModel(sigma2=0.0, drift=-1.0, jumps=JumpSpec(1.0, ExponentialNegative(1.0)))

    def test_assumption_requires_positive_inverse(self, model_f):
        # p = 0 with an oscillating parent violates the standing assumption
        with pytest.raises(ModelError):
            PssmpModel(levy=model_f.levy, p=0.0, alpha=2.0)

    def test_degeneracy_flag(self, model_b, model_b_seam):
        assert model_b.degeneracy is None
        assert model_b_seam.degeneracy == 1
        assert model_b_seam.is_degenerate


class TestFirstPassage:
    def test_values(self, model_f, model_b):
        assert first_passage_transform(model_b.levy, 0.0, 1.0, 1.0) == pytest.approx(
            math.exp(-1.0), rel=1e-12)
        assert first_passage_transform(model_f.levy, 0.0, 1.0, 1.0) == pytest.approx(
            math.exp(-GOLDEN), rel=1e-9)
        assert first_passage_transform(model_f.levy, 2.0, 2.0, 3.7) == 1.0

    def test_domain(self, model_f):
        with pytest.raises(DomainError):
            first_passage_transform(model_f.levy, 1.0, 0.0, 1.0)

    def test_completely_monotone_in_q(self, model_f):
        # alternating finite differences on a grid (loose tolerance)
        qs = np.linspace(0.2, 3.0, 15)
        vals = np.array([first_passage_transform(model_f.levy, 0.0, 1.0, q) for q in qs])
        d1 = np.diff(vals)
        d2 = np.diff(d1)
        assert np.all(d1 < 1e-12)
        assert np.all(d2 > -1e-12)


class TestAtomAndLadders:
    def test_atom_values(self, model_f, model_b):
        assert atom_at_maximum(model_f) == pytest.approx((5 ** 0.5 - 1) / 2, abs=1e-10)
        assert atom_at_maximum(model_b) == 0.0

    def test_atom_below_one(self):
        for drift in (0.7, 1.0, 3.0):
            for p in (0.5, 1.0, 4.0):
                m = PssmpModel(
                    levy=LevyModel(sigma2=0.0, drift=drift,
                                   jumps=JumpSpec(1.0, ExponentialNegative(0.8))),
                    p=p, alpha=1.3)
                assert 0.0 < atom_at_maximum(m) < 1.0

    def test_fv_identity(self, model_f):
        # phi(p) drift = p + intensity (1 - E[exp(phi * jump)]), forced by
        # psi(phi(p)) = p
        levy = model_f.levy
        phi = model_f.phi_p
        lhs = phi * levy.drift
        rhs = model_f.p + levy.jumps.intensity * (1.0 - levy.jumps.size_law.mgf(phi))
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_ladder_up(self, model_b):
        assert ladder_up_exponent(model_b.levy, 1.0, 0.0) == pytest.approx(1.0, abs=1e-12)
        assert ladder_up_exponent(model_b.levy, 1.0, 2.0) == pytest.approx(3.0, abs=1e-12)

    def test_ladder_down_limit(self, model_f, model_b):
        for m in (model_f, model_b):
            for q in (0.5, 1.0, 2.0):
                phi_q = m.levy.phi(q)
                lim = ladder_down_exponent(m.levy, q, phi_q)
                assert lim == pytest.approx(m.levy.psi_prime(phi_q), rel=1e-9)

    def test_ladder_down_plain(self, model_b):
        # psi = l^2: (q - d^2) / (sqrt(q) - d)  = sqrt(q) + d
        assert ladder_down_exponent(model_b.levy, 4.0, 1.0) == pytest.approx(3.0, rel=1e-10)


class TestSchema:
    def test_round_trip(self, model_f):
        again = model_from_dict(model_to_dict(model_f))
        assert again == model_f

    def test_mixture_round_trip(self):
        law = FiniteMixture(components=((0.5, ExponentialNegative(2.0)),
                                        (0.5, PointMassNegative(0.7))))
        m = PssmpModel(levy=LevyModel(sigma2=0.0, drift=1.0, jumps=JumpSpec(2.0, law)),
                       p=1.0, alpha=1.0)
        assert model_from_dict(model_to_dict(m)) == m

    def test_unknown_keys_rejected(self, model_f):
        good = model_to_dict(model_f)
        for poison in (
            {**good, "extra": 1},
            {**good, "jumps": {**good["jumps"], "oops": 2}},
            {**good, "jumps": {"intensity": 1.0,
                               "size_law": {"type": "exp_neg", "rate": 1.0, "bad": 3}}},
        ):
            with pytest.raises(SchemaError):
                model_from_dict(poison)

    def test_missing_keys_rejected(self, model_f):
        good = model_to_dict(model_f)
        del good["alpha"]
        with pytest.raises(SchemaError):
            model_from_dict(good)

    def test_bad_types_rejected(self, model_f):
        good = model_to_dict(model_f)
        good["sigma2"] = "zero"
        with pytest.raises(SchemaError):
            model_from_dict(good)

    def test_nested_mixture_rejected(self):
        law = {"type": "mixture", "components": [
            {"weight": 1.0, "law": {"type": "mixture", "components": []}}]}
        with pytest.raises(SchemaError):
            model_from_dict({"sigma2": 0.0, "drift": 1.0,
                             "jumps": {"intensity": 1.0, "size_law": law},
                             "p": 1.0, "alpha": 2.0})

    def test_mixture_weights_must_sum_to_one(self):
        with pytest.raises(ModelError):
            FiniteMixture(components=((0.5, ExponentialNegative(1.0)),
                                      (0.6, PointMassNegative(1.0))))

    def test_load_model(self, model_file_f, model_f, tmp_path):
        assert load_model(model_file_f) == model_f
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(SchemaError):
            load_model(str(bad))

    def test_size_law_optional_only_without_jumps(self):
        with pytest.raises(ModelError):
            JumpSpec(intensity=1.0, size_law=None)
        spec = json.loads('{"intensity": 0.0}')
        model_from_dict({"sigma2": 2.0, "drift": 0.0, "jumps": spec, "p": 1.0, "alpha": 2.0})
