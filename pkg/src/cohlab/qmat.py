"""Dense complex linear algebra and multipartite-operator bookkeeping.

Operators live on a tensor product of finite factors.  The composite basis
is row-major with factor 0 slowest, so ``np.kron(a, b)`` puts ``a`` on
factor 0.  Everything here is a pure function of immutable inputs; arrays
inside the domain types are marked read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9
RANK_TOL = 1e-9
TRACE_TOL = 1e-9


def _frozen(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=np.complex128, order="C")
    out.setflags(write=False)
    return out


def herm(matrix: np.ndarray) -> np.ndarray:
    """Hermitian part (M + M†)/2; applied before every eigendecomposition."""
    return 0.5 * (matrix + matrix.conj().T)


def eigh_sym(matrix: np.ndarray):
    """Eigendecomposition of the symmetrized input."""
    return np.linalg.eigh(herm(matrix))


@dataclass(frozen=True)
class MultipartiteOperator:
    """A Hermitian matrix tagged with its tensor-factor dimensions."""

    dims: tuple[int, ...]
    matrix: np.ndarray
    hermitian_tol: float = HERMITIAN_TOL

    def __init__(self, dims: Sequence[int], matrix: np.ndarray,
                 hermitian_tol: float = HERMITIAN_TOL) -> None:
        dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in dims) or not dims:
            raise ValueError(f"factor dimensions must be positive, got {dims}")
        matrix = _frozen(matrix)
        side = int(np.prod(dims))
        if matrix.shape != (side, side):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match dims {dims} "
                f"(expected {side}x{side})")
        dev = float(np.max(np.abs(matrix - matrix.conj().T))) if side else 0.0
        if dev > hermitian_tol:
            raise ValueError(
                f"matrix is not Hermitian within {hermitian_tol:g} "
                f"(max deviation {dev:.3e})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "hermitian_tol", float(hermitian_tol))

    @property
    def side(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_factors(self) -> int:
        return len(self.dims)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(herm(self.matrix))

    def replace_matrix(self, matrix: np.ndarray,
                       hermitian_tol: float | None = None) -> "MultipartiteOperator":
        tol = self.hermitian_tol if hermitian_tol is None else hermitian_tol
        return MultipartiteOperator(self.dims, matrix, tol)


@dataclass(frozen=True)
class DensityMatrix:
    """A MultipartiteOperator validated as a quantum state."""

    op: MultipartiteOperator
    psd_tol: float = PSD_TOL
    trace_tol: float = TRACE_TOL

    def __post_init__(self) -> None:
        lam_min = float(self.op.eigenvalues()[0])
        if lam_min < -self.psd_tol:
            raise ValueError(
                f"state is not PSD within {self.psd_tol:g} "
                f"(min eigenvalue {lam_min:.3e})")
        tr = self.op.trace()
        if abs(tr - 1.0) > self.trace_tol:
            raise ValueError(f"state trace {tr!r} deviates from 1 beyond "
                             f"{self.trace_tol:g}")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.op.dims

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @staticmethod
    def from_matrix(dims: Sequence[int], matrix: np.ndarray,
                    psd_tol: float = PSD_TOL,
                    trace_tol: float = TRACE_TOL) -> "DensityMatrix":
        return DensityMatrix(MultipartiteOperator(dims, matrix),
                             psd_tol=psd_tol, trace_tol=trace_tol)


@dataclass(frozen=True)
class DephasingPattern:
    """Subset of tensor factors treated as classical (fully dephased)."""

    classical: frozenset[int]

    def __init__(self, classical: Iterable[int]) -> None:
        classical = frozenset(int(i) for i in classical)
        if any(i < 0 for i in classical):
            raise ValueError("factor indices must be nonnegative")
        object.__setattr__(self, "classical", classical)

    def validate(self, n_factors: int) -> None:
        bad = [i for i in self.classical if i >= n_factors]
        if bad:
            raise ValueError(f"pattern indices {bad} out of range for "
                             f"{n_factors} factors")

    def quantum(self, n_factors: int) -> tuple[int, ...]:
        return tuple(i for i in range(n_factors) if i not in self.classical)


def full_pattern(n_factors: int) -> DephasingPattern:
    return DephasingPattern(range(n_factors))


@dataclass(frozen=True)
class KrausChannel:
    """A completely positive, trace non-increasing map given by Kraus operators.

    Equality of sum(K†K) with the identity within ``completeness_tol`` marks a
    trace-preserving channel.
    """

    kraus: tuple[np.ndarray, ...]
    completeness_tol: float = 1e-9

    def __init__(self, kraus: Sequence[np.ndarray],
                 completeness_tol: float = 1e-9) -> None:
        if not kraus:
            raise ValueError("need at least one Kraus operator")
        mats = tuple(_frozen(k) if k.ndim == 2 else _frozen(np.atleast_2d(k))
                     for k in (np.asarray(k, dtype=np.complex128) for k in kraus))
        shape = mats[0].shape
        if any(m.shape != shape for m in mats):
            raise ValueError("Kraus operators must share one shape")
        acc = sum(m.conj().T @ m for m in mats)
        lam_max = float(np.linalg.eigvalsh(herm(acc))[-1])
        if lam_max > 1.0 + completeness_tol:
            raise ValueError(
                f"channel is trace increasing: max eig of sum(K†K) = {lam_max!r}")
        object.__setattr__(self, "kraus", mats)
        object.__setattr__(self, "completeness_tol", float(completeness_tol))

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def is_trace_preserving(self) -> bool:
        acc = sum(m.conj().T @ m for m in self.kraus)
        return bool(np.max(np.abs(acc - np.eye(self.dim_in)))
                    <= self.completeness_tol)


@dataclass(frozen=True)
class Povm:
    """A positive operator valued measure: PSD elements summing to identity."""

    elements: tuple[MultipartiteOperator, ...]
    tol: float = 1e-8

    def __init__(self, elements: Sequence[MultipartiteOperator],
                 tol: float = 1e-8) -> None:
        elements = tuple(elements)
        if not elements:
            raise ValueError("POVM needs at least one element")
        dims = elements[0].dims
        if any(e.dims != dims for e in elements):
            raise ValueError("POVM elements must share dims")
        for k, e in enumerate(elements):
            lam = float(e.eigenvalues()[0])
            if lam < -tol:
                raise ValueError(f"POVM element {k} is not PSD (min eig {lam:.3e})")
        acc = sum(e.matrix for e in elements)
        if np.max(np.abs(acc - np.eye(elements[0].side))) > tol:
            raise ValueError("POVM elements do not sum to identity")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "tol", float(tol))

    def __len__(self) -> int:
        return len(self.elements)


# ---------------------------------------------------------------------------
# operations


def identity(dims: Sequence[int]) -> MultipartiteOperator:
    side = int(np.prod([int(d) for d in dims]))
    return MultipartiteOperator(dims, np.eye(side, dtype=np.complex128))


def tensor_product(a: MultipartiteOperator,
                   b: MultipartiteOperator) -> MultipartiteOperator:
    return MultipartiteOperator(a.dims + b.dims, np.kron(a.matrix, b.matrix),
                                max(a.hermitian_tol, b.hermitian_tol))


def _check_indices(indices: Iterable[int], n: int, what: str) -> tuple[int, ...]:
    idx = tuple(sorted(set(int(i) for i in indices)))
    if any(i < 0 or i >= n for i in idx):
        raise ValueError(f"{what} indices {idx} out of range for {n} factors")
    return idx


def partial_trace(op: MultipartiteOperator,
                  keep: Iterable[int]) -> MultipartiteOperator:
    """Trace out every factor not listed in ``keep``."""
    n = op.n_factors
    keep_idx = _check_indices(keep, n, "keep")
    if not keep_idx:
        raise ValueError("keep must be nonempty")
    drop = [i for i in range(n) if i not in keep_idx]
    arr = op.matrix.reshape(op.dims + op.dims)
    n_cur = n
    for f in sorted(drop, reverse=True):
        arr = np.trace(arr, axis1=f, axis2=n_cur + f)
        n_cur -= 1
    new_dims = [op.dims[i] for i in keep_idx]
    side = int(np.prod(new_dims))
    return MultipartiteOperator(new_dims, arr.reshape(side, side),
                                max(op.hermitian_tol, 1e-12))


def partial_transpose(op: MultipartiteOperator,
                      flip: Iterable[int]) -> MultipartiteOperator:
    """Transpose the listed factors; involutive."""
    n = op.n_factors
    flip_idx = _check_indices(flip, n, "flip")
    arr = op.matrix.reshape(op.dims + op.dims)
    axes = list(range(2 * n))
    for f in flip_idx:
        axes[f], axes[n + f] = axes[n + f], axes[f]
    out = arr.transpose(axes).reshape(op.side, op.side)
    return MultipartiteOperator(op.dims, out, op.hermitian_tol)


@lru_cache(maxsize=128)
def _dephase_mask(dims: tuple[int, ...], classical: tuple[int, ...]) -> np.ndarray:
    side = int(np.prod(dims))
    digits = np.unravel_index(np.arange(side), dims)
    mask = np.ones((side, side), dtype=bool)
    for f in classical:
        mask &= digits[f][:, None] == digits[f][None, :]
    mask.setflags(write=False)
    return mask


def dephase(op: MultipartiteOperator,
            pattern: DephasingPattern) -> MultipartiteOperator:
    """Kill matrix elements whose basis strings differ on any classical factor.

    Implemented as an elementwise mask, so it is exact and idempotent.
    """
    pattern.validate(op.n_factors)
    mask = _dephase_mask(op.dims, tuple(sorted(pattern.classical)))
    return MultipartiteOperator(op.dims, op.matrix * mask, op.hermitian_tol)


def dephase_matrix(matrix: np.ndarray, dims: Sequence[int],
                   classical: Iterable[int]) -> np.ndarray:
    """Mask form of ``dephase`` on a bare array (used by SDP map builders)."""
    mask = _dephase_mask(tuple(int(d) for d in dims),
                         tuple(sorted(set(int(i) for i in classical))))
    return matrix * mask


def support_projector(op: MultipartiteOperator,
                      rank_tol: float = RANK_TOL) -> MultipartiteOperator:
    """Projector onto the eigenspace of eigenvalues above ``rank_tol``."""
    lam, vec = eigh_sym(op.matrix)
    if lam[0] < -PSD_TOL:
        raise ValueError(f"support projector needs a PSD input "
                         f"(min eigenvalue {lam[0]:.3e})")
    cols = vec[:, lam > rank_tol]
    proj = cols @ cols.conj().T
    return MultipartiteOperator(op.dims, proj, 1e-9)


def trace_norm(op: MultipartiteOperator | np.ndarray) -> float:
    """Sum of singular values; sum of |eigenvalues| for Hermitian input."""
    matrix = op.matrix if isinstance(op, MultipartiteOperator) else np.asarray(op)
    dev = float(np.max(np.abs(matrix - matrix.conj().T)))
    if dev <= 1e-10:
        return float(np.abs(np.linalg.eigvalsh(herm(matrix))).sum())
    return float(np.linalg.svd(matrix, compute_uv=False).sum())


def permute_systems(op: MultipartiteOperator,
                    perm: Sequence[int]) -> MultipartiteOperator:
    """Relabel factors so that new factor k is old factor perm[k]."""
    n = op.n_factors
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of 0..{n - 1}")
    arr = op.matrix.reshape(op.dims + op.dims)
    axes = list(perm) + [n + p for p in perm]
    new_dims = [op.dims[p] for p in perm]
    out = arr.transpose(axes).reshape(op.side, op.side)
    return MultipartiteOperator(new_dims, out, op.hermitian_tol)


def apply_kraus(ch: KrausChannel, rho: MultipartiteOperator,
                acting_on: Iterable[int]) -> MultipartiteOperator:
    """Apply ``sum_k (K ⊗ 1) rho (K ⊗ 1)†`` with K acting on ``acting_on``.

    Rectangular Kraus operators are only supported when the channel acts on
    every factor (the output then carries a single merged factor).
    """
    n = rho.n_factors
    acting = _check_indices(acting_on, n, "acting_on")
    if not acting:
        raise ValueError("acting_on must be nonempty")
    d_act = int(np.prod([rho.dims[i] for i in acting]))
    if ch.dim_in != d_act:
        raise ValueError(f"channel input dim {ch.dim_in} does not match "
                         f"acting factors product {d_act}")
    square = ch.dim_out == ch.dim_in
    if not square and len(acting) != n:
        raise ValueError("rectangular Kraus operators require acting on all factors")

    perm = list(acting) + [i for i in range(n) if i not in acting]
    front = permute_systems(rho, perm) if perm != list(range(n)) else rho
    d_rest = front.side // d_act
    eye_rest = np.eye(d_rest, dtype=np.complex128)
    acc = np.zeros((ch.dim_out * d_rest,) * 2, dtype=np.complex128)
    for k in ch.kraus:
        big = np.kron(k, eye_rest)
        acc += big @ front.matrix @ big.conj().T
    if not square:
        return MultipartiteOperator([ch.dim_out], acc, 1e-9)
    out_dims = front.dims
    out = MultipartiteOperator(out_dims, acc, max(rho.hermitian_tol, 1e-10))
    if perm != list(range(n)):
        inv = [0] * n
        for new, old in enumerate(perm):
            inv[old] = new
        out = permute_systems(out, inv)
    return out


def conditional_block(op: MultipartiteOperator, factors: Iterable[int],
                      outcome: Sequence[int]) -> np.ndarray:
    """Return ⟨i|X|i⟩ on the listed factors, an operator on the others."""
    n = op.n_factors
    idx = _check_indices(factors, n, "conditional")
    outcome = tuple(int(o) for o in outcome)
    if len(outcome) != len(idx):
        raise ValueError("outcome length must match the factor count")
    arr = op.matrix.reshape(op.dims + op.dims)
    sel: list[object] = [slice(None)] * (2 * n)
    for f, o in zip(idx, outcome):
        if o < 0 or o >= op.dims[f]:
            raise ValueError(f"outcome {o} out of range for factor {f}")
        sel[f] = o
        sel[n + f] = o
    block = arr[tuple(sel)]
    d_rest = int(np.prod([op.dims[i] for i in range(n) if i not in idx])) or 1
    return np.asarray(block).reshape(d_rest, d_rest)


def classical_strings(dims: Sequence[int], factors: Iterable[int]):
    """Iterate basis strings over the listed factors."""
    idx = sorted(set(int(i) for i in factors))
    sizes = [int(dims[i]) for i in idx]
    total = int(np.prod(sizes)) if sizes else 1
    for flat in range(total):
        yield np.unravel_index(flat, sizes) if sizes else ()


# ---------------------------------------------------------------------------
# structured-text operator files


def operator_to_dict(op: MultipartiteOperator) -> dict:
    mat = [[[float(z.real), float(z.imag)] for z in row] for row in op.matrix]
    return {"dims": list(op.dims), "matrix": mat}


def operator_from_dict(doc: dict,
                       hermitian_tol: float = HERMITIAN_TOL) -> MultipartiteOperator:
    dims = doc["dims"]
    rows = doc["matrix"]
    matrix = np.array([[complex(re, im) for re, im in row] for row in rows],
                      dtype=np.complex128)
    return MultipartiteOperator(dims, matrix, hermitian_tol)


def save_operator(path: str, op: MultipartiteOperator) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(operator_to_dict(op), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_operator(path: str,
                  hermitian_tol: float = HERMITIAN_TOL) -> MultipartiteOperator:
    with open(path, "r", encoding="utf-8") as fh:
        return operator_from_dict(json.load(fh), hermitian_tol)


def load_density(path: str) -> DensityMatrix:
    return DensityMatrix(load_operator(path))
