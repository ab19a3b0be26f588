import numpy as np
import pytest

from risklqg import (
    GaussianMixture,
    JointNoiseModel,
    LtiSystem,
    RiskWeights,
    moments_analytic,
)

OPAMP_A = [[0.172, 0.0], [1.046, 0.8869]]
OPAMP_B = [[0.1882], [0.2762]]
OPAMP_C = [[0.05, -1.0]]


@pytest.fixture(scope="session")
def opamp():
    return LtiSystem(a=OPAMP_A, b=OPAMP_B, c=OPAMP_C)


@pytest.fixture(scope="session")
def case1_model(opamp):
    """Skewed process shocks through the input channel, nominal Gaussian output."""
    xi = GaussianMixture.scalar([0.8, 0.2], [0.0, 10.0], [0.01, 0.001])
    out = GaussianMixture.scalar([1.0], [0.0], [0.01])
    return JointNoiseModel.input_channel(xi, opamp.b, out)


@pytest.fixture(scope="session")
def case2_model(opamp):
    xi = GaussianMixture.scalar([1.0], [0.0], [0.1])
    out = GaussianMixture.scalar([0.7, 0.3], [0.0, 20.0], [0.01, 0.005])
    return JointNoiseModel.input_channel(xi, opamp.b, out)


@pytest.fixture(scope="session")
def opamp_weights():
    return RiskWeights(
        q=np.eye(2), r=[[1.0]], qs=np.diag([1.0, 0.1]), qo=[[1.0]],
        n_horizon=100,
    )


@pytest.fixture(scope="session")
def case1_moments(case1_model, opamp, opamp_weights):
    return moments_analytic(
        case1_model, opamp_weights.qs, opamp_weights.qo, opamp.c,
        fourth_moment="mc", mc_count=1_000_000,
    )


@pytest.fixture(scope="session")
def case2_moments(case2_model, opamp, opamp_weights):
    return moments_analytic(
        case2_model, opamp_weights.qs, opamp_weights.qo, opamp.c,
        fourth_moment="mc", mc_count=1_000_000,
    )


@pytest.fixture(scope="session")
def fullrank_model():
    """Full-rank 2-D process mixture + skewed scalar output; exposes matrix-case terms."""
    proc = GaussianMixture(
        weights=[0.7, 0.3],
        means=[[0.0, 0.0], [3.0, -1.0]],
        covariances=[np.diag([0.05, 0.02]), [[0.04, 0.01], [0.01, 0.03]]],
    )
    out = GaussianMixture.scalar([0.85, 0.15], [0.0, 4.0], [0.02, 0.01])
    return JointNoiseModel.independent(proc, out)
