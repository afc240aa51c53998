import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kinetrace.dataset import SynthConfig, generate_synthetic_subject


@pytest.fixture(scope="session")
def linear_subject():
    """Small noiseless linear subject shared by read-only tests."""
    rec, truth = generate_synthetic_subject(
        SynthConfig(n_channels=4, n_trials=5, n_samples=1200, seed=11)
    )
    return rec, truth
