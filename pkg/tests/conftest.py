import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def assert_counts_match(counts, probs, nsigma=5.0):
    """Per-outcome binomial check: |count - N p| <= nsigma * sqrt(N p (1-p)).

    Outcomes with p in {0, 1} get an absolute slack of 0 (they must be hit
    exactly), which is what deterministic-device tests rely on.
    """
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    n = counts.sum()
    bound = nsigma * np.sqrt(np.clip(n * probs * (1.0 - probs), 0.0, None))
    dev = np.abs(counts - n * probs)
    assert np.all(dev <= bound + 1e-9), (
        f"counts {counts} deviate from expectation {n * probs} beyond {nsigma} sigma"
    )
