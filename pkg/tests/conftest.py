import numpy as np
import pytest

from cohlab.qmat import DensityMatrix, MultipartiteOperator


@pytest.fixture
def plus_state() -> DensityMatrix:
    return DensityMatrix.from_matrix([2], 0.5 * np.ones((2, 2),
                                                        dtype=np.complex128))


@pytest.fixture
def bell_state() -> DensityMatrix:
    v = np.zeros(4)
    v[0] = v[3] = 2 ** -0.5
    return DensityMatrix.from_matrix([2, 2], np.outer(v, v).astype(complex))


@pytest.fixture
def bell_op(bell_state) -> MultipartiteOperator:
    return bell_state.op


@pytest.fixture
def ghz_state() -> DensityMatrix:
    v = np.zeros(8)
    v[0] = v[7] = 2 ** -0.5
    return DensityMatrix.from_matrix([2, 2, 2], np.outer(v, v).astype(complex))
