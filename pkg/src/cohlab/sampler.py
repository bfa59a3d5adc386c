"""Deterministic, seedable random ensembles for the property suites.

One master seed fans out to per-trial streams by a counter, so trials are
reproducible individually and under parallel execution.  All draws go
through numpy Generators seeded from (seed, stream) SeedSequences, which
are stable across platforms.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .discgame import Instrument
from .qmat import (DensityMatrix, DephasingPattern, KrausChannel,
                   MultipartiteOperator, dephase, permute_systems,
                   tensor_product)


class SeededRng:
    """A numpy Generator pinned to a (seed, stream) pair."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.generator = np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed,
                                   spawn_key=(self.stream,)))

    def stream_for(self, counter: int) -> "SeededRng":
        return SeededRng(self.seed, counter)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


def _gen(rng: SeededRng | np.random.Generator) -> np.random.Generator:
    return rng.generator if isinstance(rng, SeededRng) else rng


def complex_normal(rng, shape) -> np.ndarray:
    g = _gen(rng)
    return g.standard_normal(shape) + 1j * g.standard_normal(shape)


def ginibre_state(dims: Sequence[int], rank: int, rng) -> DensityMatrix:
    """G G† / Tr(G G†) with G a (prod dims) x rank matrix of complex normals."""
    dims = [int(d) for d in dims]
    side = int(np.prod(dims))
    if not 1 <= rank <= side:
        raise ValueError(f"rank must be in 1..{side}, got {rank}")
    g = complex_normal(rng, (side, rank))
    mat = g @ g.conj().T
    mat /= np.trace(mat).real
    return DensityMatrix.from_matrix(dims, mat)


def haar_unitary(d: int, rng) -> np.ndarray:
    """QR-based Haar unitary with the R-diagonal phase fixed."""
    if d < 1:
        raise ValueError("dimension must be positive")
    q, r = np.linalg.qr(complex_normal(rng, (d, d)))
    phase = np.diag(r).copy()
    phase /= np.abs(phase)
    return q * phase[None, :]


def random_state_vector(d: int, rng) -> np.ndarray:
    v = complex_normal(rng, d)
    return v / np.linalg.norm(v)


def random_iq_state(dims: Sequence[int],
                    pattern: DephasingPattern | Iterable[int],
                    terms: int, rng) -> DensityMatrix:
    """Convex mix of (diagonal on classical factors) x (Ginibre on the rest).

    Exactly invariant under dephasing with the same pattern.
    """
    if not isinstance(pattern, DephasingPattern):
        pattern = DephasingPattern(pattern)
    dims = [int(d) for d in dims]
    n = len(dims)
    pattern.validate(n)
    if terms < 1:
        raise ValueError("terms must be >= 1")
    g = _gen(rng)
    classical = sorted(pattern.classical)
    quantum = [i for i in range(n) if i not in pattern.classical]
    d_c = int(np.prod([dims[i] for i in classical])) if classical else 1
    weights = g.dirichlet(np.ones(terms))
    acc = np.zeros((int(np.prod(dims)),) * 2, dtype=np.complex128)
    for w in weights:
        diag_probs = g.dirichlet(np.ones(d_c))
        c_op = MultipartiteOperator([dims[i] for i in classical] or [1],
                                    np.diag(diag_probs.astype(np.complex128)))
        if quantum:
            q_state = ginibre_state([dims[i] for i in quantum],
                                    int(np.prod([dims[i] for i in quantum])),
                                    g)
            term = tensor_product(c_op, q_state.op)
            if classical:
                order = classical + quantum
                perm = [order.index(k) for k in range(n)]
                term = permute_systems(
                    MultipartiteOperator(term.dims, term.matrix), perm)
        else:
            term = c_op
        acc += w * term.matrix
    out = MultipartiteOperator(dims, acc)
    assert np.array_equal(dephase(out, pattern).matrix, out.matrix)
    return DensityMatrix(out)


def random_incoherent_channel(d: int, branches: int, rng) -> Instrument:
    """Instrument of structurally incoherent branches, trace preserving exactly.

    Kraus operators have at most one nonzero entry per column.  Two families
    are drawn: weighted permutation-with-phase operators (one Kraus per
    branch), and splits of the rank-one set {|g(j)><j|} across branches,
    which exercises many-to-one column maps.  Both complete to a channel by
    construction; arbitrary column maps generally cannot.
    """
    if branches < 1:
        raise ValueError("branches must be >= 1")
    g = _gen(rng)
    family = int(g.integers(0, 2)) if branches <= d else 0
    subchannels = []
    if family == 0:
        amps = complex_normal(g, (branches, d))
        amps /= np.linalg.norm(amps, axis=0, keepdims=True)
        for m in range(branches):
            perm = g.permutation(d)
            k = np.zeros((d, d), dtype=np.complex128)
            for j in range(d):
                k[perm[j], j] = amps[m, j]
            subchannels.append(KrausChannel([k], completeness_tol=1e-9))
    else:
        targets = g.integers(0, d, size=d)
        phases = np.exp(2j * np.pi * g.uniform(size=d))
        owner = np.concatenate([np.arange(branches),
                                g.integers(0, branches, size=d - branches)])
        owner = owner[g.permutation(d)]
        for m in range(branches):
            ops = []
            for j in np.flatnonzero(owner == m):
                k = np.zeros((d, d), dtype=np.complex128)
                k[targets[j], j] = phases[j]
                ops.append(k)
            subchannels.append(KrausChannel(ops, completeness_tol=1e-9))
    return Instrument(subchannels, incoherent=True)


def random_channel(d: int, env: int, rng) -> KrausChannel:
    """Haar-random CPTP channel from a Stinespring isometry with env branches."""
    if env < 1:
        raise ValueError("env must be >= 1")
    u = haar_unitary(d * env, rng)
    isometry = u[:, :d].reshape(env, d, d)
    return KrausChannel(list(isometry), completeness_tol=1e-9)


def random_psd_contraction(d: int, rng) -> np.ndarray:
    """Random 0 <= M <= 1 with Haar eigenbasis and uniform eigenvalues."""
    g = _gen(rng)
    u = haar_unitary(d, g)
    lam = g.uniform(0.0, 1.0, size=d)
    return u @ np.diag(lam.astype(np.complex128)) @ u.conj().T
