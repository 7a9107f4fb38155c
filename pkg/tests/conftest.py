import json

import pytest

from pssmax.models import (
    ExponentialNegative,
    JumpSpec,
    LevyModel,
    PssmpModel,
)

#: the golden ratio, phi(1) of the unit-drift exponential-jump model
GOLDEN = (1 + 5 ** 0.5) / 2


@pytest.fixture(scope="session")
def model_f() -> PssmpModel:
    """Finite variation: unit drift minus compound Poisson with unit-rate
    exponential marks, killed at rate 1, index 2.  psi(l) = l - l/(1+l)."""
    return PssmpModel(
        levy=LevyModel(sigma2=0.0, drift=1.0, jumps=JumpSpec(1.0, ExponentialNegative(1.0))),
        p=1.0,
        alpha=2.0,
    )


@pytest.fixture(scope="session")
def model_b() -> PssmpModel:
    """Infinite variation: Brownian motion with psi(l) = l^2, killed at
    rate 1, index 2 (phi(1) = 1, off the integer seam)."""
    return PssmpModel(levy=LevyModel(sigma2=2.0, drift=0.0, jumps=JumpSpec(0.0)), p=1.0, alpha=2.0)


@pytest.fixture(scope="session")
def model_b_seam() -> PssmpModel:
    """The Brownian model at index 1: phi(1) = 1 = alpha, on the seam."""
    return PssmpModel(levy=LevyModel(sigma2=2.0, drift=0.0, jumps=JumpSpec(0.0)), p=1.0, alpha=1.0)


@pytest.fixture(scope="session")
def model_unkilled() -> PssmpModel:
    """p = 0 with drift to minus infinity: drift 1, intensity 2, unit-rate
    exponential marks; phi(0) = 1 and psi(1/2) < 0."""
    return PssmpModel(
        levy=LevyModel(sigma2=0.0, drift=1.0, jumps=JumpSpec(2.0, ExponentialNegative(1.0))),
        p=0.0,
        alpha=0.5,
    )


@pytest.fixture()
def model_file_f(tmp_path):
    path = tmp_path / "model_f.json"
    path.write_text(json.dumps({
        "sigma2": 0.0,
        "drift": 1.0,
        "jumps": {"intensity": 1.0, "size_law": {"type": "exp_neg", "rate": 1.0}},
        "p": 1.0,
        "alpha": 2.0,
    }))
    return str(path)


@pytest.fixture()
def model_file_b(tmp_path):
    path = tmp_path / "model_b.json"
    path.write_text(json.dumps({
        "sigma2": 2.0,
        "drift": 0.0,
        "jumps": {"intensity": 0.0},
        "p": 1.0,
        "alpha": 2.0,
    }))
    return str(path)
