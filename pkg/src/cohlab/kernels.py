"""Hot numeric kernels for the SDP solver, with numba and numpy variants.

The interior-point iteration spends most of its non-LAPACK time congruence-
transforming stacks of Hermitian constraint matrices (W @ A_k @ W) and
packing them into real coordinates.  Both steps exist as numba ``@njit``
kernels and as vectorized numpy fallbacks.

Selection is controlled by the environment variable ``COHLAB_KERNELS``:

* ``numba`` - require the jit kernels (raises if numba is unavailable);
* ``numpy`` - force the pure-numpy fallback;
* unset / ``auto`` - use numba when importable, else numpy.

``benchmarks/bench_kernels.py`` times the two paths side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

_MODE = os.environ.get("COHLAB_KERNELS", "auto").lower()

try:  # pragma: no cover - import probe
    if _MODE == "numpy":
        raise ImportError("numpy path forced via COHLAB_KERNELS")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    if _MODE == "numba":
        raise
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# reference numpy implementations


_INDEX_CACHE: dict[int, tuple] = {}


def _indices(n: int):
    got = _INDEX_CACHE.get(n)
    if got is None:
        diag = np.arange(n)
        iu, ju = np.triu_indices(n, k=1)
        got = (diag, iu, ju)
        _INDEX_CACHE[n] = got
    return got


def congruence_batch_numpy(w: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """out[k] = w @ stack[k] @ w for a stack of square complex matrices."""
    return w[None, :, :] @ stack @ w[None, :, :]


def pack_hvec_batch_numpy(stack: np.ndarray) -> np.ndarray:
    """Isometric real coordinates of a stack of Hermitian matrices.

    Layout per matrix of side n: the n diagonal entries (real parts), then
    for each upper-triangle pair (i < j) in row-major order sqrt(2)*Re and
    sqrt(2)*Im.  The Euclidean inner product of two packed vectors equals
    the real Hilbert-Schmidt inner product of the matrices.
    """
    m, n, _ = stack.shape
    diag, iu, ju = _indices(n)
    out = np.empty((m, n * n), dtype=np.float64)
    out[:, :n] = stack[:, diag, diag].real
    if n > 1:
        off = stack[:, iu, ju]
        root2 = math.sqrt(2.0)
        out[:, n::2] = root2 * off.real
        out[:, n + 1::2] = root2 * off.imag
    return out


def unpack_hvec_numpy(vec: np.ndarray, n: int) -> np.ndarray:
    """Inverse of the packing above for a single vector."""
    diag, iu, ju = _indices(n)
    mat = np.zeros((n, n), dtype=np.complex128)
    mat[diag, diag] = vec[:n]
    if n > 1:
        inv_root2 = 1.0 / math.sqrt(2.0)
        upper = (vec[n::2] + 1j * vec[n + 1::2]) * inv_root2
        mat[iu, ju] = upper
        mat[ju, iu] = upper.conj()
    return mat


# ---------------------------------------------------------------------------
# numba kernels

if HAVE_NUMBA:

    @njit(cache=True)
    def _congruence_batch_jit(w, stack):  # pragma: no cover - jitted
        m, n, _ = stack.shape
        out = np.empty((m, n, n), dtype=np.complex128)
        tmp = np.empty((n, n), dtype=np.complex128)
        for k in range(m):
            for i in range(n):
                for j in range(n):
                    acc = 0.0 + 0.0j
                    for p in range(n):
                        acc += w[i, p] * stack[k, p, j]
                    tmp[i, j] = acc
            for i in range(n):
                for j in range(n):
                    acc = 0.0 + 0.0j
                    for p in range(n):
                        acc += tmp[i, p] * w[p, j]
                    out[k, i, j] = acc
        return out

    @njit(cache=True)
    def _pack_hvec_batch_jit(stack):  # pragma: no cover - jitted
        m, n, _ = stack.shape
        root2 = math.sqrt(2.0)
        out = np.empty((m, n * n), dtype=np.float64)
        for k in range(m):
            for i in range(n):
                out[k, i] = stack[k, i, i].real
            t = n
            for i in range(n):
                for j in range(i + 1, n):
                    z = stack[k, i, j]
                    out[k, t] = root2 * z.real
                    out[k, t + 1] = root2 * z.imag
                    t += 2
        return out

    def congruence_batch_numba(w: np.ndarray, stack: np.ndarray) -> np.ndarray:
        return _congruence_batch_jit(np.ascontiguousarray(w),
                                     np.ascontiguousarray(stack))

    def pack_hvec_batch_numba(stack: np.ndarray) -> np.ndarray:
        return _pack_hvec_batch_jit(np.ascontiguousarray(stack))

    congruence_batch = congruence_batch_numba
    pack_hvec_batch = pack_hvec_batch_numba
else:  # pragma: no cover
    congruence_batch = congruence_batch_numpy
    pack_hvec_batch = pack_hvec_batch_numpy

unpack_hvec = unpack_hvec_numpy

ACTIVE = "numba" if HAVE_NUMBA else "numpy"
