import numpy as np
import pytest

from madrop import (FadingModel, PathLossModel, SchemeKind, SchemeSpec,
                    TransitionMatrix)

# Example matrix for B=1, N=2, theta_tar=0.02 used throughout: its rows
# are exactly stochastic as printed.
EXAMPLE_MATRIX = np.array([
    [0.69, 0.31, 0.00, 0.00],
    [0.76, 0.17, 0.07, 0.00],
    [0.67, 0.27, 0.00, 0.06],
    [0.64, 0.36, 0.00, 0.00],
])


@pytest.fixture(scope="session")
def fading():
    return FadingModel()


@pytest.fixture(scope="session")
def pathloss():
    return PathLossModel(delta=0.01, alpha=2.0)


@pytest.fixture(scope="session")
def example_spec():
    return SchemeSpec(scheme=SchemeKind.BEST, B=1, N=2, theta_tar=0.02)


@pytest.fixture(scope="session")
def example_matrix(example_spec):
    return TransitionMatrix.from_entries(example_spec, EXAMPLE_MATRIX)


def random_valid_entries(spec, rng):
    """Random matrix satisfying the structural constraints of `spec`."""
    from madrop.schemes import allowed_targets

    n = spec.n_states
    entries = np.zeros((n, n))
    for p in range(n):
        targets = allowed_targets(spec.scheme, p, spec.B)
        k = len(targets) + (1 if p < spec.M else 0)
        weights = rng.dirichlet(np.ones(k))
        entries[p, targets] = weights[: len(targets)]
        if p < spec.M:
            entries[p, p + 1] = weights[-1]
    return entries
