import numpy as np
import pytest
from hypothesis import settings

from latefuse.synth import SynthSpec, generate

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture
def planted_500x5():
    """Noiseless planted instance; the optimum objective value is exactly 0."""
    from latefuse.synth import planted_score_matrix

    w_star = np.array([0.9, 0.1, 0.5, 0.7, 0.3])
    return planted_score_matrix(500, 5, w_star, seed=7)


@pytest.fixture
def dataset_pair(tmp_path):
    """On-disk dev/test dataset pair with a shared hidden weight vector."""
    w_star = np.random.default_rng(123).uniform(0.05, 1.0, size=4).tolist()
    dev = generate(
        SynthSpec(80, 4, 8, seed=1, planted_weights=w_star, key_prefix="d"),
        tmp_path / "dev",
    )
    test = generate(
        SynthSpec(40, 4, 4, seed=2, planted_weights=w_star, key_prefix="t"),
        tmp_path / "test",
    )
    return dev, test
