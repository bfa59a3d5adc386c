"""Entropies, coherence and entanglement measures, discord, monogamy.

All logarithms are base 2 and all values are in bits.  Divergent values
(disjoint supports) are returned as ``math.inf``; nothing infinite is ever
fed into an SDP.  Measures backed by the embedded solver return a
:class:`MeasureResult` carrying certificates and the realized duality gap.

Coherence variants are parameterized by a dephasing pattern: the classical
factors are dephased, the rest stay quantum.  The full pattern recovers the
plain (single-system) measures; a one-sided pattern on a bipartite state
gives the incoherent-quantum measures.  Entanglement measures minimize over
the PPT-across-all-cuts cone, which is exact for 2x2 and 2x3 bipartitions
and otherwise a lower bound flagged ``ppt_relaxed``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.optimize

from . import sdp
from .qmat import (DensityMatrix, DephasingPattern, MultipartiteOperator,
                   RANK_TOL, conditional_block, classical_strings, dephase,
                   dephase_matrix, eigh_sym, herm, partial_trace,
                   support_projector)

SUPPORT_TOL = 1e-9

FLAG_SUPPORT_INFINITE = "support_infinite"
FLAG_PPT_RELAXED = "ppt_relaxed"

METHOD_CLOSED_FORM = "closed_form"
METHOD_SDP = "sdp"
METHOD_RELAXATION = "relaxation"


class SolverFailure(RuntimeError):
    """Raised when an SDP-backed measure fails to reach optimality."""

    def __init__(self, message: str, solution: sdp.SdpSolution | None = None):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True)
class SmoothParams:
    """Smoothing radius; the derived radii are recomputed, never stored."""

    eps: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps < 1.0:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps!r}")

    @property
    def eps_prime(self) -> float:
        return self.eps + 2.0 * math.sqrt(self.eps)

    @property
    def eps_double_prime(self) -> float:
        return self.eps + 2.0 * math.sqrt(2.0 * self.eps)


@dataclass(frozen=True)
class MeasureResult:
    value: float
    method: str
    gap: float = 0.0
    flags: frozenset[str] = frozenset()
    certificate: dict | None = None

    def __float__(self) -> float:
        return self.value


def _as_pattern(pattern: DephasingPattern | Iterable[int]) -> DephasingPattern:
    if isinstance(pattern, DephasingPattern):
        return pattern
    return DephasingPattern(pattern)


def _as_smooth(smooth: SmoothParams | float | None) -> SmoothParams:
    if smooth is None:
        return SmoothParams(0.0)
    if isinstance(smooth, SmoothParams):
        return smooth
    return SmoothParams(float(smooth))


def _matrix_of(state) -> np.ndarray:
    if isinstance(state, DensityMatrix):
        return state.matrix
    if isinstance(state, MultipartiteOperator):
        return state.matrix
    return np.asarray(state, dtype=np.complex128)


def _op_of(state) -> MultipartiteOperator:
    if isinstance(state, DensityMatrix):
        return state.op
    if isinstance(state, MultipartiteOperator):
        return state
    mat = np.asarray(state, dtype=np.complex128)
    return MultipartiteOperator([mat.shape[0]], mat, 1e-8)


# ---------------------------------------------------------------------------
# entropies and relative entropies


def von_neumann_entropy(rho) -> float:
    """-sum lambda log2 lambda with 0 log 0 = 0."""
    lam = np.linalg.eigvalsh(herm(_matrix_of(rho)))
    lam = lam[lam > 1e-15]
    return float(-(lam * np.log2(lam)).sum())


def _support_leak(rho_mat: np.ndarray, sigma_lam: np.ndarray,
                  sigma_vec: np.ndarray) -> float:
    kernel = sigma_vec[:, sigma_lam <= RANK_TOL]
    if kernel.shape[1] == 0:
        return 0.0
    return float(np.real(np.einsum("ij,ik,kj->", kernel.conj(), rho_mat,
                                   kernel)))


def relative_entropy(rho, sigma) -> float:
    """Tr rho (log2 rho - log2 sigma) on the common support, inf otherwise."""
    rmat, smat = _matrix_of(rho), _matrix_of(sigma)
    lam_s, vec_s = eigh_sym(smat)
    if _support_leak(rmat, lam_s, vec_s) > SUPPORT_TOL:
        return math.inf
    lam_r, vec_r = eigh_sym(rmat)
    pos_r = lam_r > 1e-15
    term_r = float((lam_r[pos_r] * np.log2(lam_r[pos_r])).sum())
    pos_s = lam_s > RANK_TOL
    log_s = vec_s[:, pos_s] @ np.diag(np.log2(lam_s[pos_s])) @ \
        vec_s[:, pos_s].conj().T
    term_s = float(np.trace(rmat @ log_s).real)
    return term_r - term_s


def max_relative_entropy(rho, sigma) -> float:
    """log2 of the smallest factor by which sigma dominates rho."""
    rmat, smat = _matrix_of(rho), _matrix_of(sigma)
    lam_s, vec_s = eigh_sym(smat)
    if _support_leak(rmat, lam_s, vec_s) > SUPPORT_TOL:
        return math.inf
    pos = lam_s > RANK_TOL
    basis = vec_s[:, pos]
    inv_sqrt = np.diag(1.0 / np.sqrt(lam_s[pos]))
    middle = inv_sqrt @ basis.conj().T @ rmat @ basis @ inv_sqrt
    lam_max = float(np.linalg.eigvalsh(herm(middle))[-1])
    if lam_max <= 1e-300:
        return -math.inf
    return math.log2(lam_max)


def min_relative_entropy(rho, sigma, rank_tol: float = RANK_TOL) -> float:
    """-log2 of the overlap of sigma with the support projector of rho."""
    rop = _op_of(rho)
    proj = support_projector(rop, rank_tol).matrix
    overlap = float(np.trace(proj @ _matrix_of(sigma)).real)
    if overlap <= 1e-14:
        return math.inf
    return -math.log2(overlap)


# ---------------------------------------------------------------------------
# coherence by relative entropy (closed form)


def rel_entropy_coherence(rho: DensityMatrix,
                          pattern: DephasingPattern | Iterable[int]
                          ) -> MeasureResult:
    """S(dephased rho) - S(rho); zero exactly on pattern-diagonal states."""
    pattern = _as_pattern(pattern)
    op = _op_of(rho)
    pattern.validate(op.n_factors)
    dephased = dephase(op, pattern)
    value = von_neumann_entropy(dephased.matrix) - von_neumann_entropy(op.matrix)
    return MeasureResult(value=value, method=METHOD_CLOSED_FORM,
                         certificate={"dephased": dephased.matrix})


# ---------------------------------------------------------------------------
# SDP scaffolding shared by the max-type measures


@lru_cache(maxsize=64)
def _hermitian_basis(n: int) -> tuple[np.ndarray, ...]:
    basis = []
    for k in range(n * n):
        e = np.zeros(n * n)
        e[k] = 1.0
        basis.append(sdp.unhvec(e, n))
    return tuple(basis)


def _ball_blocks(problem_dims: list[int], eqs: list[sdp.EqConstraint],
                 rho_mat: np.ndarray, eps: float) -> int:
    """Append smoothing-ball blocks (rho', P, Q, two scalar slacks).

    Encodes rho' = rho + P - Q with P, Q >= 0, Tr(P + Q) <= eps and
    Tr rho' <= Tr rho; returns the index of the rho' block.
    """
    d = rho_mat.shape[0]
    idx_rho = len(problem_dims)
    problem_dims.extend([d, d, d, 1, 1])
    idx_p, idx_q, idx_s1, idx_s2 = idx_rho + 1, idx_rho + 2, idx_rho + 3, idx_rho + 4
    eye = np.eye(d, dtype=np.complex128)
    for ek in _hermitian_basis(d):
        rhs = float(np.trace(ek @ rho_mat).real)
        eqs.append(sdp.EqConstraint({idx_rho: ek, idx_p: -ek, idx_q: ek}, rhs))
    eqs.append(sdp.EqConstraint({idx_rho: eye, idx_s1: np.ones((1, 1))},
                                float(np.trace(rho_mat).real)))
    eqs.append(sdp.EqConstraint({idx_p: eye, idx_q: eye,
                                 idx_s2: np.ones((1, 1))}, float(eps)))
    return idx_rho


def _neg_identity_map(d: int) -> sdp.LinearMap:
    return sdp.LinearMap.identity(d).scaled(-1.0)


def _solve_or_raise(problem: sdp.SdpProblem,
                    opts: sdp.SolveOptions | None = None) -> sdp.SdpSolution:
    sol = sdp.solve(problem, opts)
    if sol.status != sdp.STATUS_OPTIMAL:
        raise SolverFailure(f"SDP ended with status {sol.status} after "
                            f"{sol.iterations} iterations", sol)
    return sol


# ---------------------------------------------------------------------------
# max-relative-entropy coherence


def max_coherence_problem(rho: DensityMatrix,
                          pattern: DephasingPattern | Iterable[int],
                          eps: float = 0.0) -> sdp.SdpProblem:
    """min Tr sigma s.t. dephase(sigma) >= rho', sigma >= 0 (rho' = rho at eps 0)."""
    pattern = _as_pattern(pattern)
    op = _op_of(rho)
    pattern.validate(op.n_factors)
    d = op.side
    classical = tuple(sorted(pattern.classical))
    dims_t = op.dims
    dep_map = sdp.LinearMap.from_function(
        d, d, lambda m: dephase_matrix(m, dims_t, classical), "dephase")
    block_dims = [d]
    eqs: list[sdp.EqConstraint] = []
    if eps > 0.0:
        idx_rho = _ball_blocks(block_dims, eqs, op.matrix, eps)
        lmi = sdp.PsdConstraint(d, {0: dep_map, idx_rho: _neg_identity_map(d)},
                                tag="domination")
    else:
        lmi = sdp.PsdConstraint(d, {0: dep_map}, offset=-op.matrix,
                                tag="domination")
    return sdp.SdpProblem(block_dims, {0: np.eye(d, dtype=np.complex128)},
                          "min", eqs, [lmi])


def max_coherence_dual_problem(rho: DensityMatrix,
                               pattern: DephasingPattern | Iterable[int]
                               ) -> sdp.SdpProblem:
    """max Tr(rho tau) s.t. tau >= 0, dephase(tau) <= identity."""
    pattern = _as_pattern(pattern)
    op = _op_of(rho)
    pattern.validate(op.n_factors)
    d = op.side
    classical = tuple(sorted(pattern.classical))
    dims_t = op.dims
    dep_neg = sdp.LinearMap.from_function(
        d, d, lambda m: -dephase_matrix(m, dims_t, classical), "-dephase")
    lmi = sdp.PsdConstraint(d, {0: dep_neg},
                            offset=np.eye(d, dtype=np.complex128),
                            tag="subunital")
    return sdp.SdpProblem([d], {0: op.matrix.copy()}, "max", [], [lmi])


def max_coherence(rho: DensityMatrix,
                  pattern: DephasingPattern | Iterable[int],
                  smooth: SmoothParams | float | None = None,
                  solver_opts: sdp.SolveOptions | None = None) -> MeasureResult:
    """Coherence by max-relative entropy, optionally smoothed.

    The certificate carries the primal optimizer ``sigma`` and a dual
    witness ``tau`` completed so that dephasing it gives the identity.
    """
    pattern = _as_pattern(pattern)
    smooth = _as_smooth(smooth)
    op = _op_of(rho)
    problem = max_coherence_problem(rho, pattern, smooth.eps)
    if solver_opts is None:
        lam_max = float(op.eigenvalues()[-1])
        seed = 2.0 * max(lam_max, 0.5) * np.eye(op.side, dtype=np.complex128)
        solver_opts = sdp.SolveOptions(
            initial_primal={0: seed} if smooth.eps == 0.0 else None)
    sol = _solve_or_raise(problem, solver_opts)
    opt = sol.primal_value
    tau = herm(sol.psd_duals[0])
    tau_completed = tau + np.eye(op.side) - dephase_matrix(
        tau, op.dims, tuple(sorted(pattern.classical)))
    value = math.log2(max(opt, 1e-300))
    return MeasureResult(
        value=value, method=METHOD_SDP, gap=sol.gap,
        certificate={"sigma": sol.primal_blocks[0], "tau": herm(tau_completed),
                     "optimum": opt, "solution": sol})


# ---------------------------------------------------------------------------
# min-relative-entropy coherence


def _min_coherence_closed(rho: DensityMatrix,
                          pattern: DephasingPattern) -> MeasureResult:
    op = _op_of(rho)
    proj = support_projector(op)
    classical = tuple(sorted(pattern.classical))
    best = -math.inf
    best_string = None
    for string in classical_strings(op.dims, classical):
        block = conditional_block(proj, classical, string)
        lam = float(np.linalg.eigvalsh(herm(block))[-1]) if block.size else 0.0
        if lam > best:
            best = lam
            best_string = tuple(int(s) for s in string)
    value = -math.log2(max(best, 1e-300))
    return MeasureResult(value=value, method=METHOD_CLOSED_FORM,
                         certificate={"best_string": best_string,
                                      "overlap": best})


def _min_coherence_sdp(rho: DensityMatrix, pattern: DephasingPattern,
                       eps: float) -> MeasureResult:
    """min t s.t. 0 <= O <= 1, Tr(O rho) >= 1 - eps, partial pinches <= t."""
    op = _op_of(rho)
    d = op.side
    classical = tuple(sorted(pattern.classical))
    quantum = [i for i in range(op.n_factors) if i not in classical]
    dq = int(np.prod([op.dims[i] for i in quantum])) if quantum else 1

    if eps > 0.0:
        block_dims = [d, 1]
        idx_t = 1
        lmis = [sdp.PsdConstraint(d, {0: _neg_identity_map(d)},
                                  offset=np.eye(d, dtype=np.complex128),
                                  tag="contraction")]
        rmat = op.matrix
        capture = sdp.LinearMap.from_function(
            d, 1, lambda m: np.array([[np.trace(rmat @ m)]]), "capture")
        lmis.append(sdp.PsdConstraint(
            1, {0: capture}, offset=np.array([[-(1.0 - eps)]],
                                             dtype=np.complex128),
            tag="capture"))

        def pinch_term(string):
            return sdp.LinearMap.from_function(
                d, dq, lambda m: -np.asarray(
                    conditional_block(MultipartiteOperator(op.dims, herm(m),
                                                           1e-6),
                                      classical, string)), "pinch")

        scalar_to_eye = sdp.LinearMap.from_function(
            1, dq, lambda m: m[0, 0].real * np.eye(dq), "t*eye")
        for string in classical_strings(op.dims, classical):
            lmis.append(sdp.PsdConstraint(
                dq, {0: pinch_term(string), idx_t: scalar_to_eye},
                tag="pinch"))
        problem = sdp.SdpProblem(block_dims, {idx_t: np.ones((1, 1))}, "min",
                                 [], lmis)
        sol = _solve_or_raise(problem)
        t_opt = sol.primal_value
        cert = {"operator": sol.primal_blocks[0], "solution": sol}
    else:
        # at eps = 0 capture forces O to pin the support of rho; optimize the
        # remaining freedom on the orthocomplement explicitly
        proj_op = support_projector(op)
        lam, vec = eigh_sym(op.matrix)
        kernel = vec[:, lam <= RANK_TOL]
        r_perp = kernel.shape[1]
        proj = proj_op.matrix
        scalar_to_eye = sdp.LinearMap.from_function(
            1, dq, lambda m: m[0, 0].real * np.eye(dq), "t*eye")
        lmis = []
        block_dims = [1]
        if r_perp:
            block_dims.append(r_perp)
            lmis.append(sdp.PsdConstraint(
                r_perp, {1: _neg_identity_map(r_perp)},
                offset=np.eye(r_perp, dtype=np.complex128), tag="contraction"))
        for string in classical_strings(op.dims, classical):
            off = -np.asarray(conditional_block(proj_op, classical, string))
            terms: dict[int, sdp.LinearMap] = {0: scalar_to_eye}
            if r_perp:
                terms[1] = sdp.LinearMap.from_function(
                    r_perp, dq,
                    lambda m, s=string: -np.asarray(conditional_block(
                        MultipartiteOperator(op.dims,
                                             herm(kernel @ m @ kernel.conj().T),
                                             1e-6), classical, s)), "pinch")
            lmis.append(sdp.PsdConstraint(dq, terms, offset=herm(off),
                                          tag="pinch"))
        problem = sdp.SdpProblem(block_dims, {0: np.ones((1, 1))}, "min",
                                 [], lmis)
        sol = _solve_or_raise(problem)
        t_opt = sol.primal_value
        cert = {"solution": sol, "support": proj}
    value = -math.log2(max(t_opt, 1e-300))
    return MeasureResult(value=value, method=METHOD_SDP, gap=sol.gap,
                         certificate=cert)


def min_coherence(rho: DensityMatrix,
                  pattern: DephasingPattern | Iterable[int],
                  smooth: SmoothParams | float | None = None,
                  method: str = "auto") -> MeasureResult:
    """Coherence by min-relative entropy; closed form at eps = 0.

    ``method`` may force the "sdp" path at eps = 0, which must agree with
    the closed form.
    """
    pattern = _as_pattern(pattern)
    smooth = _as_smooth(smooth)
    op = _op_of(rho)
    pattern.validate(op.n_factors)
    if smooth.eps == 0.0 and method in ("auto", "closed_form"):
        return _min_coherence_closed(rho, pattern)
    return _min_coherence_sdp(rho, pattern, smooth.eps)


# ---------------------------------------------------------------------------
# PPT-relaxed entanglement measures


def _normalize_partition(dims: Sequence[int],
                         partition: Sequence[Iterable[int]]
                         ) -> list[tuple[int, ...]]:
    groups = [tuple(sorted(int(i) for i in g)) for g in partition]
    seen = [i for g in groups for i in g]
    if sorted(seen) != list(range(len(dims))):
        raise ValueError(f"partition {groups} must cover factors "
                         f"0..{len(dims) - 1} disjointly")
    if any(not g for g in groups):
        raise ValueError("empty partition group")
    return groups


def ppt_cuts(groups: Sequence[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Factor sets to partial-transpose: proper nonempty group subsets.

    Complementary subsets give transposed (hence isospectral) constraints,
    so only the subsets avoiding group 0 are kept.
    """
    k = len(groups)
    cuts = []
    for mask in range(1, 1 << (k - 1)):
        factors: list[int] = []
        for g in range(1, k):
            if mask & (1 << (g - 1)):
                factors.extend(groups[g])
        cuts.append(tuple(sorted(factors)))
    return cuts


def is_ppt_exact(dims: Sequence[int],
                 groups: Sequence[tuple[int, ...]]) -> bool:
    if len(groups) != 2:
        return False
    sides = sorted(int(np.prod([dims[i] for i in g])) for g in groups)
    return sides in ([2, 2], [2, 3])


def _transpose_map(dims: tuple[int, ...], factors: tuple[int, ...],
                   d: int) -> sdp.LinearMap:
    from .qmat import partial_transpose

    def fn(m: np.ndarray) -> np.ndarray:
        return partial_transpose(MultipartiteOperator(dims, herm(m), 1e-6),
                                 factors).matrix

    return sdp.LinearMap.from_function(d, d, fn, f"pt{factors}")


def max_entanglement(rho: DensityMatrix,
                     partition: Sequence[Iterable[int]],
                     smooth: SmoothParams | float | None = None
                     ) -> MeasureResult:
    """log2 min Tr omega s.t. omega >= rho and omega PPT across every cut."""
    smooth = _as_smooth(smooth)
    op = _op_of(rho)
    groups = _normalize_partition(op.dims, partition)
    d = op.side
    cuts = ppt_cuts(groups)
    block_dims = [d]
    eqs: list[sdp.EqConstraint] = []
    lmis: list[sdp.PsdConstraint] = []
    if smooth.eps > 0.0:
        idx_rho = _ball_blocks(block_dims, eqs, op.matrix, smooth.eps)
        lmis.append(sdp.PsdConstraint(
            d, {0: sdp.LinearMap.identity(d), idx_rho: _neg_identity_map(d)},
            tag="domination"))
    else:
        lmis.append(sdp.PsdConstraint(d, {0: sdp.LinearMap.identity(d)},
                                      offset=-op.matrix, tag="domination"))
    for cut in cuts:
        lmis.append(sdp.PsdConstraint(d, {0: _transpose_map(op.dims, cut, d)},
                                      tag=f"ppt{cut}"))
    problem = sdp.SdpProblem(block_dims, {0: np.eye(d, dtype=np.complex128)},
                             "min", eqs, lmis)
    lam_max = float(op.eigenvalues()[-1])
    opts = sdp.SolveOptions(initial_primal={
        0: 2.0 * max(lam_max, 0.5) * np.eye(d, dtype=np.complex128)}
        if smooth.eps == 0.0 else None)
    sol = _solve_or_raise(problem, opts)
    flags = set()
    if not is_ppt_exact(op.dims, groups):
        flags.add(FLAG_PPT_RELAXED)
    value = math.log2(max(sol.primal_value, 1e-300))
    return MeasureResult(value=value, method=METHOD_SDP, gap=sol.gap,
                         flags=frozenset(flags),
                         certificate={"omega": sol.primal_blocks[0],
                                      "optimum": sol.primal_value,
                                      "solution": sol})


def min_entanglement(rho: DensityMatrix,
                     partition: Sequence[Iterable[int]],
                     smooth: SmoothParams | float | None = None
                     ) -> MeasureResult:
    """-log2 of the best PPT overlap captured by measurement operators.

    At eps = 0 this is max Tr(support(rho) omega) over PPT states omega;
    for eps > 0 the inner maximization over PPT states is dualized and
    folded into a single minimization.
    """
    smooth = _as_smooth(smooth)
    op = _op_of(rho)
    groups = _normalize_partition(op.dims, partition)
    d = op.side
    cuts = ppt_cuts(groups)
    flags = set()
    if not is_ppt_exact(op.dims, groups):
        flags.add(FLAG_PPT_RELAXED)

    if smooth.eps == 0.0:
        proj = support_projector(op).matrix
        lmis = [sdp.PsdConstraint(d, {0: _transpose_map(op.dims, cut, d)},
                                  tag=f"ppt{cut}") for cut in cuts]
        eqs = [sdp.EqConstraint({0: np.eye(d, dtype=np.complex128)}, 1.0)]
        problem = sdp.SdpProblem([d], {0: herm(proj)}, "max", eqs, lmis)
        sol = _solve_or_raise(problem)
        overlap = sol.primal_value
        cert = {"omega": sol.primal_blocks[0], "overlap": overlap,
                "solution": sol}
    else:
        # blocks: O, t, one PPT multiplier per cut
        block_dims = [d, 1] + [d] * len(cuts)
        rmat = op.matrix
        capture = sdp.LinearMap.from_function(
            d, 1, lambda m: np.array([[np.trace(rmat @ m)]]), "capture")
        scalar_to_eye = sdp.LinearMap.from_function(
            1, d, lambda m: m[0, 0].real * np.eye(d), "t*eye")
        lmis = [
            sdp.PsdConstraint(d, {0: _neg_identity_map(d)},
                              offset=np.eye(d, dtype=np.complex128),
                              tag="contraction"),
            sdp.PsdConstraint(1, {0: capture},
                              offset=np.array([[-(1.0 - smooth.eps)]],
                                              dtype=np.complex128),
                              tag="capture"),
        ]
        dominance: dict[int, sdp.LinearMap] = {
            0: _neg_identity_map(d), 1: scalar_to_eye}
        for j, cut in enumerate(cuts):
            dominance[2 + j] = _transpose_map(op.dims, cut, d).scaled(-1.0)
        lmis.append(sdp.PsdConstraint(d, dominance, tag="dominance"))
        problem = sdp.SdpProblem(block_dims, {1: np.ones((1, 1))}, "min",
                                 [], lmis)
        sol = _solve_or_raise(problem)
        overlap = sol.primal_value
        cert = {"operator": sol.primal_blocks[0], "overlap": overlap,
                "solution": sol}
    value = -math.log2(max(overlap, 1e-300))
    return MeasureResult(value=value, method=METHOD_SDP, gap=sol.gap,
                         flags=frozenset(flags), certificate=cert)


# ---------------------------------------------------------------------------
# discord-type quantities


def _conditional_states(rho: DensityMatrix, measured: int,
                        basis: np.ndarray | None = None):
    """Outcome probabilities and conditioned states for a rank-1 measurement.

    ``basis`` columns define the measurement; None means the incoherent basis.
    """
    op = _op_of(rho)
    n = op.n_factors
    d_a = op.dims[measured]
    rest = [i for i in range(n) if i != measured]
    d_b = int(np.prod([op.dims[i] for i in rest])) if rest else 1
    perm = [measured] + rest
    from .qmat import permute_systems

    front = permute_systems(op, perm) if perm != list(range(n)) else op
    arr = front.matrix.reshape(d_a, d_b, d_a, d_b)
    if basis is None:
        basis = np.eye(d_a, dtype=np.complex128)
    out = []
    for i in range(d_a):
        u = basis[:, i]
        block = np.einsum("a,abcd,c->bd", u.conj(), arr, u)
        p = float(np.trace(block).real)
        out.append((p, block))
    return out


def basis_discord(rho: DensityMatrix, measured: int = 0) -> float:
    """Discord-like quantity with the measurement fixed to the incoherent basis."""
    op = _op_of(rho)
    rest = [i for i in range(op.n_factors) if i != measured]
    if not rest:
        raise ValueError("need at least one unmeasured factor")
    s_a = von_neumann_entropy(partial_trace(op, [measured]).matrix)
    s_ab = von_neumann_entropy(op.matrix)
    cond = 0.0
    for p, block in _conditional_states(rho, measured):
        if p > 1e-14:
            cond += p * von_neumann_entropy(block / p)
    return s_a - s_ab + cond


@dataclass
class DiscordOptions:
    starts: int = 8
    max_iter: int = 200
    seed: int = 0
    grid: int = 12


def _conditional_entropy_for_basis(rho: DensityMatrix, measured: int,
                                   basis: np.ndarray) -> float:
    acc = 0.0
    for p, block in _conditional_states(rho, measured, basis):
        if p > 1e-14:
            acc += p * von_neumann_entropy(block / p)
    return acc


def discord(rho: DensityMatrix, measured: int = 0,
            opts: DiscordOptions | None = None) -> MeasureResult:
    """Measurement-minimized discord, multi-start local refinement.

    The incoherent basis is always one start, so the value never exceeds
    ``basis_discord``.  The result is an upper estimate of the true discord
    (exhaustively refined for qubit measurements).
    """
    opts = opts or DiscordOptions()
    op = _op_of(rho)
    d_a = op.dims[measured]
    rng = np.random.default_rng(np.random.SeedSequence(entropy=opts.seed))

    def cost_from_params(theta: np.ndarray) -> float:
        return _conditional_entropy_for_basis(rho, measured,
                                              _unitary_from_params(theta, d_a))

    starts = [np.zeros(d_a * d_a)]
    for _ in range(opts.starts - 1):
        starts.append(rng.normal(scale=1.0, size=d_a * d_a))
    if d_a == 2:
        for k in range(opts.grid):
            theta = np.zeros(4)
            theta[1] = math.pi * k / opts.grid
            theta[2] = 2.0 * math.pi * ((k * 7) % opts.grid) / opts.grid
            starts.append(theta)

    best_val = math.inf
    best_theta = None
    for theta0 in starts:
        res = scipy.optimize.minimize(cost_from_params, theta0,
                                      method="Nelder-Mead",
                                      options={"maxiter": opts.max_iter,
                                               "xatol": 1e-9, "fatol": 1e-12})
        if res.fun < best_val:
            best_val = float(res.fun)
            best_theta = res.x
    base = _conditional_entropy_for_basis(
        rho, measured, np.eye(d_a, dtype=np.complex128))
    if base < best_val:
        best_val = base
        best_theta = np.zeros(d_a * d_a)
    s_a = von_neumann_entropy(partial_trace(op, [measured]).matrix)
    s_ab = von_neumann_entropy(op.matrix)
    value = s_a - s_ab + best_val
    return MeasureResult(
        value=value, method=METHOD_RELAXATION,
        certificate={"basis": _unitary_from_params(best_theta, d_a)})


def _unitary_from_params(theta: np.ndarray, d: int) -> np.ndarray:
    """Unitary from d^2 real parameters through a Hermitian generator."""
    gen = np.zeros((d, d), dtype=np.complex128)
    k = 0
    for i in range(d):
        gen[i, i] = theta[k]
        k += 1
    for i in range(d):
        for j in range(i + 1, d):
            gen[i, j] = theta[k] + 1j * theta[k + 1]
            gen[j, i] = theta[k] - 1j * theta[k + 1]
            k += 2
    lam, vec = np.linalg.eigh(gen)
    return vec @ np.diag(np.exp(1j * lam)) @ vec.conj().T


def conditional_mutual_information(rho: DensityMatrix,
                                   group_a: Iterable[int],
                                   group_b: Iterable[int],
                                   group_c: Iterable[int]) -> float:
    """S(AC) + S(BC) - S(C) - S(ABC) over factor groups."""
    op = _op_of(rho)
    a = sorted(set(int(i) for i in group_a))
    b = sorted(set(int(i) for i in group_b))
    c = sorted(set(int(i) for i in group_c))
    everything = sorted(a + b + c)
    if everything != list(range(op.n_factors)):
        raise ValueError("groups must partition all factors")
    s_ac = von_neumann_entropy(partial_trace(op, a + c).matrix)
    s_bc = von_neumann_entropy(partial_trace(op, b + c).matrix)
    s_c = von_neumann_entropy(partial_trace(op, c).matrix) if c else 0.0
    s_abc = von_neumann_entropy(op.matrix)
    return s_ac + s_bc - s_c - s_abc


def monogamy_score(rho: DensityMatrix,
                   parts: Sequence[Iterable[int]],
                   memory: Iterable[int]) -> float:
    """sum_k C_r(A_k|B) - C_r(A_1..A_N|B); never positive.

    Each one-part term is evaluated on the reduced state of that part plus
    the memory; the joint term dephases every part factor at once.
    """
    op = _op_of(rho)
    part_groups = [tuple(sorted(int(i) for i in p)) for p in parts]
    mem = tuple(sorted(int(i) for i in memory))
    if len(part_groups) < 2:
        raise ValueError("need at least two parts")
    covered = sorted([i for g in part_groups for i in g] + list(mem))
    if covered != list(range(op.n_factors)):
        raise ValueError("parts plus memory must partition all factors")

    total = 0.0
    for group in part_groups:
        keep = sorted(group + mem)
        reduced = partial_trace(op, keep)
        pattern = DephasingPattern(keep.index(i) for i in group)
        total += rel_entropy_coherence(
            DensityMatrix(reduced, psd_tol=1e-7, trace_tol=1e-7),
            pattern).value
    all_parts = DephasingPattern(i for g in part_groups for i in g)
    joint = rel_entropy_coherence(rho, all_parts).value
    return total - joint
