import numpy as np
import pytest

from perplex.algebra import (
    COMPLEX_PARAMS,
    DUAL_BOUNDARY_PARAMS,
    HYPERBOLIC_PARAMS,
    PerplexAlgebra,
)


def philox(seed: int) -> np.random.Generator:
    """Counter-based generator so every test stream is splittable."""
    return np.random.Generator(np.random.Philox(seed))


@pytest.fixture
def complex_alg() -> PerplexAlgebra:
    return PerplexAlgebra(COMPLEX_PARAMS)


@pytest.fixture
def hyperbolic_alg() -> PerplexAlgebra:
    return PerplexAlgebra(HYPERBOLIC_PARAMS)


@pytest.fixture
def dual_alg() -> PerplexAlgebra:
    return PerplexAlgebra(DUAL_BOUNDARY_PARAMS)
