"""A dense primal-dual interior-point solver for small Hermitian SDPs.

Problems are stated over a list of Hermitian PSD matrix blocks with a
real-linear objective, linear equality constraints, and linear matrix
inequalities (affine maps of the blocks required PSD).  Internally every
LMI gets a PSD slack block and the problem is reduced to the standard form

    minimize  <C, X>   subject to  <A_i, X> = b_i,   X >= 0,

over the direct sum of all blocks.  Hermitian matrices are handled over
the reals through the isometric packing in :mod:`cohlab.kernels`, so a
block of side n contributes n^2 real coordinates.

The solver is a path-following method with Nesterov-Todd scaling and a
Mehrotra predictor-corrector step.  Per iteration and per block it

* factors X = L L†, Z = R R†, takes the SVD R†L = U S V† and forms the
  scaling point W = L V S^{-1} V† L† (so W Z W = X), with T = W^{1/2};
* assembles the Schur complement M = A (W ⊗s W) Aᵀ from congruence
  transforms of the stacked constraint matrices (see cohlab.kernels);
* solves the predictor with complementarity target -X, picks
  sigma = (mu_aff/mu)^3, and re-solves with the exact second-order
  corrector computed in the scaled space V = T Z T.

Everything is deterministic for fixed inputs and options.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from . import kernels
from .qmat import herm

_TRACE = bool(os.environ.get("COHLAB_SDP_TRACE"))

DEFAULT_GAP_TOL = 1e-8
DEFAULT_FEAS_TOL = 1e-8
DEFAULT_MAX_ITERS = 200
DEFAULT_DIVERGENCE_BOUND = 1e8

STATUS_OPTIMAL = "optimal"
STATUS_PRIMAL_INFEASIBLE = "primal_infeasible"
STATUS_DUAL_INFEASIBLE = "dual_infeasible"
STATUS_NUMERICAL_FAILURE = "numerical_failure"


def hvec(matrix: np.ndarray) -> np.ndarray:
    """Real isometric coordinates of one Hermitian matrix."""
    return kernels.pack_hvec_batch_numpy(matrix[None, :, :])[0]


def unhvec(vec: np.ndarray, n: int) -> np.ndarray:
    return kernels.unpack_hvec(np.asarray(vec, dtype=np.float64), n)


class LinearMap:
    """A real-linear map from Hermitian n_in-matrices to Hermitian n_out-matrices.

    Stored as its matrix in packed real coordinates, shape (n_out^2, n_in^2).
    """

    def __init__(self, n_in: int, n_out: int, coeffs: np.ndarray, tag: str = ""):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != (n_out * n_out, n_in * n_in):
            raise ValueError(f"coefficient shape {coeffs.shape} does not match "
                             f"({n_out * n_out}, {n_in * n_in})")
        self.n_in = int(n_in)
        self.n_out = int(n_out)
        self.coeffs = coeffs
        self.tag = tag

    @staticmethod
    def from_function(n_in: int, n_out: int,
                      fn: Callable[[np.ndarray], np.ndarray],
                      tag: str = "") -> "LinearMap":
        """Build the coordinate matrix by applying ``fn`` to a Hermitian basis."""
        cols = np.empty((n_out * n_out, n_in * n_in), dtype=np.float64)
        for k in range(n_in * n_in):
            e = np.zeros(n_in * n_in)
            e[k] = 1.0
            image = fn(unhvec(e, n_in))
            dev = np.max(np.abs(image - image.conj().T))
            if dev > 1e-9:
                raise ValueError(f"map {tag!r} is not Hermiticity preserving "
                                 f"(deviation {dev:.2e})")
            cols[:, k] = hvec(herm(image))
        return LinearMap(n_in, n_out, cols, tag)

    @staticmethod
    def identity(n: int) -> "LinearMap":
        return LinearMap(n, n, np.eye(n * n), "identity")

    @staticmethod
    def scaled_identity_to_scalar(n: int) -> "LinearMap":
        """X -> [[Tr X]] as a 1x1 Hermitian output."""
        row = hvec(np.eye(n, dtype=np.complex128))[None, :]
        return LinearMap(n, 1, row, "trace")

    def scaled(self, factor: float) -> "LinearMap":
        return LinearMap(self.n_in, self.n_out, factor * self.coeffs, self.tag)

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        return unhvec(self.coeffs @ hvec(matrix), self.n_out)


@dataclass
class EqConstraint:
    """sum_b <coeffs[b], X_b> = rhs with Hermitian coefficient matrices."""

    coeffs: dict[int, np.ndarray]
    rhs: float


@dataclass
class PsdConstraint:
    """offset + sum_b terms[b](X_b) must be PSD."""

    side: int
    terms: dict[int, LinearMap]
    offset: np.ndarray | None = None
    tag: str = ""

    def offset_matrix(self) -> np.ndarray:
        if self.offset is None:
            return np.zeros((self.side, self.side), dtype=np.complex128)
        return np.asarray(self.offset, dtype=np.complex128)

    def evaluate(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        acc = self.offset_matrix().copy()
        for b, lin in self.terms.items():
            acc = acc + lin.apply(blocks[b])
        return acc


@dataclass
class SdpProblem:
    """A conic program over Hermitian PSD blocks.

    ``objective`` maps block index -> Hermitian coefficient matrix; missing
    blocks contribute nothing.  ``sense`` is "min" or "max".
    """

    block_dims: list[int]
    objective: dict[int, np.ndarray]
    sense: str = "min"
    eq_constraints: list[EqConstraint] = field(default_factory=list)
    psd_constraints: list[PsdConstraint] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.block_dims:
            raise ValueError("need at least one block")
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be min or max, got {self.sense!r}")
        for b, mat in self.objective.items():
            self._check_block_matrix(b, mat, "objective")
        for k, eq in enumerate(self.eq_constraints):
            for b, mat in eq.coeffs.items():
                self._check_block_matrix(b, mat, f"equality {k}")
        for k, lmi in enumerate(self.psd_constraints):
            off = lmi.offset_matrix()
            if off.shape != (lmi.side, lmi.side):
                raise ValueError(f"psd constraint {k}: offset shape mismatch")
            if np.max(np.abs(off - off.conj().T)) > 1e-9:
                raise ValueError(f"psd constraint {k}: offset not Hermitian")
            for b, lin in lmi.terms.items():
                if b < 0 or b >= len(self.block_dims):
                    raise ValueError(f"psd constraint {k}: bad block index {b}")
                if lin.n_in != self.block_dims[b] or lin.n_out != lmi.side:
                    raise ValueError(f"psd constraint {k}: map dims mismatch")

    def _check_block_matrix(self, b: int, mat: np.ndarray, what: str) -> None:
        if b < 0 or b >= len(self.block_dims):
            raise ValueError(f"{what}: block index {b} out of range")
        mat = np.asarray(mat)
        n = self.block_dims[b]
        if mat.shape != (n, n):
            raise ValueError(f"{what}: matrix shape {mat.shape} != ({n},{n})")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-9:
            raise ValueError(f"{what}: coefficient matrix on block {b} "
                             "is not Hermitian")


@dataclass
class SolveOptions:
    gap_tol: float = DEFAULT_GAP_TOL
    feas_tol: float = DEFAULT_FEAS_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    divergence_bound: float = DEFAULT_DIVERGENCE_BOUND
    step_fraction: float = 0.98
    initial_primal: dict[int, np.ndarray] | None = None


@dataclass
class SdpSolution:
    status: str
    primal_value: float
    dual_value: float
    primal_blocks: list[np.ndarray]
    eq_duals: list[float]
    psd_duals: list[np.ndarray]
    block_duals: list[np.ndarray]
    iterations: int
    max_residual: float
    history: list[tuple[float, float, float, float]]

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value)


# ---------------------------------------------------------------------------
# compilation to standard form


class _Compiled:
    def __init__(self, problem: SdpProblem):
        self.problem = problem
        self.flip = problem.sense == "max"
        user_dims = list(problem.block_dims)
        slack_dims = [lmi.side for lmi in problem.psd_constraints]
        self.dims = user_dims + slack_dims
        self.n_user = len(user_dims)
        self.offsets = np.concatenate(([0], np.cumsum([n * n for n in self.dims])))
        self.total = int(self.offsets[-1])
        self.block_degree = sum(self.dims)

        c = np.zeros(self.total)
        for b, mat in problem.objective.items():
            c[self.slice_of(b)] = hvec(np.asarray(mat, dtype=np.complex128))
        if self.flip:
            c = -c
        self.c = c

        rows: list[np.ndarray] = []
        rhs: list[float] = []
        for eq in problem.eq_constraints:
            row = np.zeros(self.total)
            for b, mat in eq.coeffs.items():
                row[self.slice_of(b)] = hvec(np.asarray(mat, dtype=np.complex128))
            rows.append(row)
            rhs.append(float(eq.rhs))
        self.n_eq_user = len(rows)

        self.lmi_row_slices: list[slice] = []
        for j, lmi in enumerate(problem.psd_constraints):
            q2 = lmi.side * lmi.side
            start = len(rows)
            slack_b = self.n_user + j
            block_rows = np.zeros((q2, self.total))
            for b, lin in lmi.terms.items():
                block_rows[:, self.slice_of(b)] = lin.coeffs
            block_rows[:, self.slice_of(slack_b)] = -np.eye(q2)
            rows.extend(block_rows)
            rhs.extend((-hvec(lmi.offset_matrix())).tolist())
            self.lmi_row_slices.append(slice(start, start + q2))

        if not rows:
            raise ValueError("problem has no constraints")
        self.A = np.array(rows, dtype=np.float64)
        self.b = np.asarray(rhs, dtype=np.float64)
        self.m = self.A.shape[0]
        # per-block stacks of the constraint matrices, for the Schur build
        self.stacks = []
        for b, n in enumerate(self.dims):
            sl = self.slice_of(b)
            stack = np.empty((self.m, n, n), dtype=np.complex128)
            for i in range(self.m):
                stack[i] = unhvec(self.A[i, sl], n)
            self.stacks.append(stack)

    def slice_of(self, b: int):
        return slice(int(self.offsets[b]), int(self.offsets[b + 1]))

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        return [unhvec(x[self.slice_of(b)], n) for b, n in enumerate(self.dims)]

    def join(self, mats: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([hvec(m) for m in mats])


def _chol_psd(mat: np.ndarray) -> np.ndarray | None:
    """Cholesky with a tiny escalating shift; iterates can graze the cone."""
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        pass
    scale = max(float(np.trace(mat).real) / mat.shape[0], 1e-30)
    shift = 1e-14 * scale
    for _ in range(6):
        try:
            return np.linalg.cholesky(mat + shift * np.eye(mat.shape[0]))
        except np.linalg.LinAlgError:
            shift *= 100.0
    return None


def _tri_inv(lower: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0 / lower[0, 0]]], dtype=np.complex128)
    return np.linalg.inv(lower)


def _step_length(deltas: list[np.ndarray],
                 chol_invs: list[np.ndarray]) -> float:
    """Largest alpha with X + alpha * delta PSD, via L^{-1} delta L^{-dagger}."""
    alpha = np.inf
    for delta, li in zip(deltas, chol_invs):
        if li.shape[0] == 1:
            lam = float(delta[0, 0].real) * float(li[0, 0].real) ** 2
        else:
            g = li @ delta @ li.conj().T
            lam = float(np.linalg.eigvalsh(herm(g))[0])
        if lam < 0:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def solve(problem: SdpProblem, opts: SolveOptions | None = None) -> SdpSolution:
    """Run the interior-point method; see the module docstring."""
    opts = opts or SolveOptions()
    comp = _Compiled(problem)
    m, total = comp.m, comp.total
    A, b, c = comp.A, comp.b, comp.c
    degree = comp.block_degree

    scale = max(1.0, float(np.max(np.abs(b))) if m else 0.0,
                float(np.max(np.abs(c))) if total else 0.0)
    X = [scale * np.eye(n, dtype=np.complex128) for n in comp.dims]
    if opts.initial_primal:
        X = _seed_primal(comp, opts.initial_primal, X)
    Z = [scale * np.eye(n, dtype=np.complex128) for n in comp.dims]
    y = np.zeros(m)

    history: list[tuple[float, float, float, float]] = []
    status = STATUS_NUMERICAL_FAILURE
    iters = 0
    max_res = np.inf

    for iters in range(1, opts.max_iters + 1):
        x = comp.join(X)
        z = comp.join(Z)
        r_p = b - A @ x
        r_d = c - A.T @ y - z
        mu = float(x @ z) / degree
        pobj = float(c @ x)
        dobj = float(b @ y)
        max_res = max(float(np.max(np.abs(r_p))) if m else 0.0,
                      float(np.max(np.abs(r_d))) if total else 0.0)
        gap = abs(pobj - dobj)
        history.append((_user_value(pobj, comp), _user_value(dobj, comp),
                        max_res, mu))

        if max_res <= opts.feas_tol and gap <= opts.gap_tol:
            status = STATUS_OPTIMAL
            break
        if dobj > opts.divergence_bound:
            status = STATUS_PRIMAL_INFEASIBLE
            break
        if pobj < -opts.divergence_bound:
            status = STATUS_DUAL_INFEASIBLE
            break

        # Nesterov-Todd scaling per block
        LxInv, LzInv, W, T, Tinv, Vmat = [], [], [], [], [], []
        failed = False
        for Xb, Zb, n in zip(X, Z, comp.dims):
            lx = _chol_psd(herm(Xb))
            lz = _chol_psd(herm(Zb))
            if lx is None or lz is None:
                failed = True
                break
            lx_inv = _tri_inv(lx, n)
            lz_inv = _tri_inv(lz, n)
            u, s, vh = np.linalg.svd(lz.conj().T @ lx)
            v = vh.conj().T
            w = lx @ v @ np.diag(1.0 / s) @ v.conj().T @ lx.conj().T
            w = herm(w)
            lam_w, q_w = np.linalg.eigh(w)
            lam_w = np.maximum(lam_w, 1e-300)
            t = q_w @ np.diag(np.sqrt(lam_w)) @ q_w.conj().T
            tinv = q_w @ np.diag(1.0 / np.sqrt(lam_w)) @ q_w.conj().T
            LxInv.append(lx_inv)
            LzInv.append(lz_inv)
            W.append(w)
            T.append(t)
            Tinv.append(tinv)
            Vmat.append(herm(t @ Zb @ t))
        if failed:
            status = STATUS_NUMERICAL_FAILURE
            break

        # Schur complement M = A (W ⊗s W) A^T
        Bmat = np.empty((m, total))
        for bidx, n in enumerate(comp.dims):
            waw = kernels.congruence_batch(W[bidx], comp.stacks[bidx])
            Bmat[:, comp.slice_of(bidx)] = kernels.pack_hvec_batch(waw)
        M = A @ Bmat.T
        M = 0.5 * (M + M.T)
        diag_scale = max(float(np.max(np.diag(M))), 1e-300)

        def apply_w(vec: np.ndarray) -> np.ndarray:
            parts = []
            for bi, n in enumerate(comp.dims):
                mat = unhvec(vec[comp.slice_of(bi)], n)
                parts.append(herm(W[bi] @ mat @ W[bi]))
            return comp.join(parts)

        def newton(rc_vec: np.ndarray, cho):
            # iterative refinement with rollback: near the optimum the Schur
            # matrix is numerically indefinite, and an additive correction
            # from a poor factorization can diverge
            dx = np.zeros(total)
            dy = np.zeros(m)
            dz = np.zeros(total)
            e1, e2, e3 = r_p, r_d, rc_vec
            err_prev = np.inf
            for _ in range(4):
                rhs_y = e1 - A @ e3 + A @ apply_w(e2)
                ddy = _schur_solve(cho, rhs_y)
                ddz = e2 - A.T @ ddy
                ddx = e3 - apply_w(ddz)
                e1n = r_p - A @ (dx + ddx)
                e2n = r_d - (A.T @ (dy + ddy) + dz + ddz)
                err = max(float(np.max(np.abs(e1n))),
                          float(np.max(np.abs(e2n))))
                if err >= err_prev:
                    break
                dx, dy, dz = dx + ddx, dy + ddy, dz + ddz
                e1, e2 = e1n, e2n
                e3 = rc_vec - (dx + apply_w(dz))
                err_prev = err
                if err < 1e-13:
                    break
            return dx, dy, dz, err_prev

        def directions(cho):
            """Affine and corrected directions from one factorization."""
            rc_aff = -x
            dx_a, dy_a, dz_a, err_a = newton(rc_aff, cho)
            dX_a = comp.split(dx_a)
            dZ_a = comp.split(dz_a)
            ap_aff = min(1.0, opts.step_fraction * _step_length(dX_a, LxInv))
            ad_aff = min(1.0, opts.step_fraction * _step_length(dZ_a, LzInv))
            mu_aff = max(0.0, float((x + ap_aff * dx_a)
                                    @ (z + ad_aff * dz_a))) / degree
            sigma = min(1.0, max((mu_aff / mu) ** 3 if mu > 0 else 0.0,
                                 1e-10))
            # keep complementarity from racing below what the gap tolerance
            # needs; the Schur conditioning floor would stall feasibility
            mu_floor = opts.gap_tol / (4.0 * degree)
            if mu > 0 and sigma * mu < mu_floor:
                sigma = min(1.0, mu_floor / mu)
            rc_parts = []
            for bi, n in enumerate(comp.dims):
                dxs = Tinv[bi] @ dX_a[bi] @ Tinv[bi]
                dzs = T[bi] @ dZ_a[bi] @ T[bi]
                cross = 0.5 * (dxs @ dzs + dzs @ dxs)
                resid = sigma * mu * np.eye(n) - Vmat[bi] @ Vmat[bi] - cross
                lam_v, q_v = np.linalg.eigh(Vmat[bi])
                lam_v = np.maximum(lam_v, 1e-300)
                rt = q_v.conj().T @ resid @ q_v
                denom = 0.5 * (lam_v[:, None] + lam_v[None, :])
                g = q_v @ (rt / denom) @ q_v.conj().T
                rc_parts.append(herm(T[bi] @ g @ T[bi]))
            dx, dy, dz, err_c = newton(comp.join(rc_parts), cho)
            return dx, dy, dz, max(err_a, err_c), sigma, ap_aff, ad_aff

        # escalate the factorization shift until the directions are sound
        dir_tol = 1e-7 * max(1.0, float(np.max(np.abs(x))))
        reg = 0.0
        result = None
        for _ in range(4):
            cho = _schur_factor(M, reg)
            if cho is not None:
                result = directions(cho)
                if result[3] <= dir_tol:
                    break
            reg = max(1e-13 * diag_scale, reg * 1e3)
        if result is None:
            status = STATUS_NUMERICAL_FAILURE
            break
        dx, dy, dz, dir_err, sigma, alpha_p_aff, alpha_d_aff = result
        dX = comp.split(dx)
        dZ = comp.split(dz)
        alpha_p = min(1.0, opts.step_fraction * _step_length(dX, LxInv))
        alpha_d = min(1.0, opts.step_fraction * _step_length(dZ, LzInv))
        if _TRACE:
            print(f"    it={iters} sigma={sigma:.3e} "
                  f"aff=({alpha_p_aff:.2e},{alpha_d_aff:.2e}) "
                  f"corr=({alpha_p:.2e},{alpha_d:.2e}) "
                  f"err={dir_err:.2e} |dx|={np.max(np.abs(dx)):.2e}")
        if (alpha_p < 1e-12 and alpha_d < 1e-12) or dir_err > 1e-2:
            status = STATUS_NUMERICAL_FAILURE
            break

        X = [herm(Xb + alpha_p * dXb) for Xb, dXb in zip(X, dX)]
        Z = [herm(Zb + alpha_d * dZb) for Zb, dZb in zip(Z, dZ)]
        y = y + alpha_d * dy

    x = comp.join(X)
    pobj = float(c @ x)
    dobj = float(b @ y)

    eq_duals = [float(v) for v in y[: comp.n_eq_user]]
    psd_duals = [Z[comp.n_user + j].copy() for j in range(len(problem.psd_constraints))]
    if comp.flip:
        eq_duals = [-v for v in eq_duals]
    return SdpSolution(
        status=status,
        primal_value=_user_value(pobj, comp),
        dual_value=_user_value(dobj, comp),
        primal_blocks=[X[bq].copy() for bq in range(comp.n_user)],
        eq_duals=eq_duals,
        psd_duals=psd_duals,
        block_duals=[Z[bq].copy() for bq in range(comp.n_user)],
        iterations=iters,
        max_residual=max_res,
        history=history,
    )


def _user_value(internal: float, comp: _Compiled) -> float:
    return -internal if comp.flip else internal


def _schur_factor(M: np.ndarray, reg: float = 0.0):
    base = max(1e-14, 1e-14 * float(np.max(np.abs(np.diag(M)))) if M.size else 0.0)
    for _ in range(8):
        try:
            return np.linalg.cholesky(M + reg * np.eye(M.shape[0])
                                      if reg else M)
        except np.linalg.LinAlgError:
            reg = base if reg == 0.0 else 10.0 * reg
    return None


def _schur_solve(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    y = sla.solve_triangular(chol, rhs, lower=True, check_finite=False)
    return sla.solve_triangular(chol, y, lower=True, trans="T",
                                check_finite=False)


def _seed_primal(comp: _Compiled, hint: dict[int, np.ndarray],
                 fallback: list[np.ndarray]) -> list[np.ndarray]:
    """Use a strictly feasible user guess, deriving slack blocks from the LMIs."""
    blocks = [mat.copy() for mat in fallback]
    user = [fallback[b].copy() for b in range(comp.n_user)]
    for b, mat in hint.items():
        user[b] = np.asarray(mat, dtype=np.complex128)
    ok = all(float(np.linalg.eigvalsh(herm(u))[0]) > 1e-12 for u in user)
    if not ok:
        return fallback
    slacks = []
    for lmi in comp.problem.psd_constraints:
        s = herm(lmi.evaluate(user))
        if float(np.linalg.eigvalsh(s)[0]) <= 1e-12:
            return fallback
        slacks.append(s)
    for b in range(comp.n_user):
        blocks[b] = herm(user[b])
    for j, s in enumerate(slacks):
        blocks[comp.n_user + j] = s
    return blocks


# ---------------------------------------------------------------------------
# independent certificate checking


@dataclass
class Violation:
    kind: str
    index: int
    amount: float

    def describe(self) -> str:
        return f"{self.kind}[{self.index}] violated by {self.amount:.3e}"


@dataclass
class VerificationReport:
    ok: bool
    violations: list[Violation]


def verify_solution(problem: SdpProblem, solution: SdpSolution,
                    tol: float = 1e-6) -> VerificationReport:
    """Recompute every residual from the reported optimizers alone.

    Checks block PSD-ness, equality residuals, LMI minimum eigenvalues,
    dual feasibility, complementary slackness traces and the duality gap,
    using nothing from the solver's internal state.
    """
    if solution.status != STATUS_OPTIMAL:
        raise ValueError("can only verify an optimal solution")
    sign = -1.0 if problem.sense == "max" else 1.0
    viol: list[Violation] = []
    blocks = solution.primal_blocks

    for b, mat in enumerate(blocks):
        lam = float(np.linalg.eigvalsh(herm(mat))[0])
        if lam < -tol:
            viol.append(Violation("block_psd", b, -lam))
    for k, eq in enumerate(problem.eq_constraints):
        val = sum(float(np.trace(np.asarray(coef) @ blocks[b]).real)
                  for b, coef in eq.coeffs.items())
        if abs(val - eq.rhs) > tol:
            viol.append(Violation("equality", k, abs(val - eq.rhs)))
    slack_mats = []
    for j, lmi in enumerate(problem.psd_constraints):
        s = herm(lmi.evaluate(blocks))
        slack_mats.append(s)
        lam = float(np.linalg.eigvalsh(s)[0])
        if lam < -tol:
            viol.append(Violation("psd_constraint", j, -lam))

    # dual feasibility in the internal min sense:
    #   Z_b = sign*C_b - sum_i y_i A_{i,b} - sum_j L_{j,b}*(Y_j)  must be PSD
    y = [sign * v for v in solution.eq_duals]
    for b, n in enumerate(problem.block_dims):
        zb = sign * np.asarray(problem.objective.get(b, np.zeros((n, n))),
                               dtype=np.complex128).copy()
        for k, eq in enumerate(problem.eq_constraints):
            if b in eq.coeffs:
                zb = zb - y[k] * np.asarray(eq.coeffs[b], dtype=np.complex128)
        for j, lmi in enumerate(problem.psd_constraints):
            if b in lmi.terms:
                adj = lmi.terms[b].coeffs.T @ hvec(solution.psd_duals[j])
                zb = zb - unhvec(adj, n)
        lam = float(np.linalg.eigvalsh(herm(zb))[0])
        if lam < -tol:
            viol.append(Violation("dual_feasibility", b, -lam))
        comp_tr = abs(float(np.trace(zb @ blocks[b]).real))
        if comp_tr > tol * max(1.0, float(np.trace(blocks[b]).real)):
            viol.append(Violation("complementary_slackness_block", b, comp_tr))
    for j, (lmi, s) in enumerate(zip(problem.psd_constraints, slack_mats)):
        yj = solution.psd_duals[j]
        lam = float(np.linalg.eigvalsh(herm(yj))[0])
        if lam < -tol:
            viol.append(Violation("psd_dual_psd", j, -lam))
        comp_tr = abs(float(np.trace(yj @ s).real))
        if comp_tr > tol * max(1.0, float(np.trace(s).real)):
            viol.append(Violation("complementary_slackness_lmi", j, comp_tr))

    # independently recomputed objective values and gap; the internal dual
    # value is sum_k b_k y_k - sum_j <offset_j, Y_j> in the min sense
    pval = sum(float(np.trace(np.asarray(mat) @ blocks[b]).real)
               for b, mat in problem.objective.items())
    d_int = sum(float(eq.rhs) * yk for eq, yk in zip(problem.eq_constraints, y))
    for j, lmi in enumerate(problem.psd_constraints):
        d_int -= float(np.trace(lmi.offset_matrix()
                                @ solution.psd_duals[j]).real)
    dval = sign * d_int
    if abs(pval - solution.primal_value) > 10 * tol * max(1.0, abs(pval)):
        viol.append(Violation("primal_value_mismatch", 0,
                              abs(pval - solution.primal_value)))
    if abs(pval - dval) > 10 * tol * max(1.0, abs(pval)):
        viol.append(Violation("gap", 0, abs(pval - dval)))
    return VerificationReport(ok=not viol, violations=viol)


# ---------------------------------------------------------------------------
# structured-text problem files


def _mat_to_doc(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat)]


def _mat_from_doc(doc: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in doc],
                    dtype=np.complex128)


def problem_to_dict(problem: SdpProblem) -> dict:
    doc: dict = {
        "blocks": list(problem.block_dims),
        "sense": problem.sense,
        "objective": {str(b): _mat_to_doc(m) for b, m in problem.objective.items()},
        "eq_constraints": [
            {"coeffs": {str(b): _mat_to_doc(m) for b, m in eq.coeffs.items()},
             "rhs": float(eq.rhs)}
            for eq in problem.eq_constraints
        ],
        "psd_constraints": [],
    }
    for lmi in problem.psd_constraints:
        doc["psd_constraints"].append({
            "side": lmi.side,
            "offset": _mat_to_doc(lmi.offset_matrix()),
            "terms": {str(b): {"coeffs": [list(map(float, row))
                                          for row in lin.coeffs],
                               "tag": lin.tag}
                      for b, lin in lmi.terms.items()},
            "tag": lmi.tag,
        })
    return doc


def problem_from_dict(doc: dict) -> SdpProblem:
    dims = [int(d) for d in doc["blocks"]]
    objective = {int(b): _mat_to_hermitian(_mat_from_doc(m))
                 for b, m in doc.get("objective", {}).items()}
    eqs = [EqConstraint({int(b): _mat_to_hermitian(_mat_from_doc(m))
                         for b, m in eq["coeffs"].items()}, float(eq["rhs"]))
           for eq in doc.get("eq_constraints", [])]
    lmis = []
    for item in doc.get("psd_constraints", []):
        side = int(item["side"])
        terms = {}
        for b, term in item.get("terms", {}).items():
            coeffs = np.asarray(term["coeffs"], dtype=np.float64)
            terms[int(b)] = LinearMap(dims[int(b)], side, coeffs,
                                      term.get("tag", ""))
        offset = _mat_from_doc(item["offset"]) if item.get("offset") else None
        lmis.append(PsdConstraint(side, terms, offset, item.get("tag", "")))
    return SdpProblem(dims, objective, doc.get("sense", "min"), eqs, lmis)


def _mat_to_hermitian(mat: np.ndarray) -> np.ndarray:
    if np.max(np.abs(mat - mat.conj().T)) > 1e-9:
        raise ValueError("matrix in problem file is not Hermitian")
    return mat


def save_problem(path: str, problem: SdpProblem) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_problem(path: str) -> SdpProblem:
    with open(path, "r", encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh))
