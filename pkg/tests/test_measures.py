import math

import numpy as np
import pytest

from cohlab import measures as ms
from cohlab.qmat import (DensityMatrix, DephasingPattern, MultipartiteOperator,
                         partial_trace, tensor_product)
from cohlab.sampler import SeededRng, ginibre_state, random_iq_state


def mixed_rank_state(rng: SeededRng, dims, deficient_every=4, counter=0):
    side = int(np.prod(dims))
    rank = side if counter % deficient_every else max(1, side - 1)
    return ginibre_state(dims, rank, rng)


class TestSmoothParams:
    def test_derived_radii(self):
        sp = ms.SmoothParams(0.04)
        assert sp.eps_prime == pytest.approx(0.04 + 2 * math.sqrt(0.04))
        assert sp.eps_double_prime == pytest.approx(0.04 + 2 * math.sqrt(0.08))

    def test_zero(self):
        sp = ms.SmoothParams(0.0)
        assert sp.eps_prime == 0.0 and sp.eps_double_prime == 0.0

    def test_range_check(self):
        with pytest.raises(ValueError):
            ms.SmoothParams(1.0)


class TestEntropies:
    def test_pure_state_zero(self, bell_state):
        assert ms.von_neumann_entropy(bell_state) == pytest.approx(0.0,
                                                                   abs=1e-12)

    def test_maximally_mixed_qubit(self):
        assert ms.von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0)

    def test_three_quarters(self):
        # -(3/4)log2(3/4) - (1/4)log2(1/4)
        want = 2.0 - 0.75 * math.log2(3.0)
        assert ms.von_neumann_entropy(np.diag([0.75, 0.25])) == \
            pytest.approx(want, abs=1e-12)


class TestRelativeEntropies:
    def test_self_zero(self):
        rng = SeededRng(1)
        rho = ginibre_state([2, 2], 4, rng)
        assert ms.relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-9)
        assert ms.max_relative_entropy(rho, rho) == pytest.approx(0.0,
                                                                  abs=1e-9)
        assert ms.min_relative_entropy(rho, rho) == pytest.approx(0.0,
                                                                  abs=1e-9)

    def test_plus_vs_maximally_mixed(self, plus_state):
        assert ms.relative_entropy(plus_state, np.eye(2) / 2) == \
            pytest.approx(1.0, abs=1e-10)
        assert ms.max_relative_entropy(plus_state, np.eye(2) / 2) == \
            pytest.approx(1.0, abs=1e-10)
        assert ms.min_relative_entropy(plus_state, np.eye(2) / 2) == \
            pytest.approx(1.0, abs=1e-10)

    def test_disjoint_supports_are_infinite(self):
        zero = np.diag([1.0, 0.0]).astype(complex)
        one = np.diag([0.0, 1.0]).astype(complex)
        assert math.isinf(ms.relative_entropy(zero, one))
        assert math.isinf(ms.max_relative_entropy(zero, one))
        assert math.isinf(ms.min_relative_entropy(zero, one))

    def test_dominance_value(self):
        # largest eigenvalue of sigma^{-1/2} rho sigma^{-1/2} is 4
        got = ms.max_relative_entropy(np.diag([1.0, 0.0]),
                                      np.diag([0.25, 0.75]))
        assert got == pytest.approx(2.0, abs=1e-10)

    def test_dominance_certificate(self):
        rng = SeededRng(2)
        rho = ginibre_state([2, 2], 4, rng)
        sigma = ginibre_state([2, 2], 4, rng.stream_for(1))
        lam = ms.max_relative_entropy(rho, sigma)
        gap = 2.0 ** lam * sigma.matrix - rho.matrix
        assert np.linalg.eigvalsh(gap)[0] >= -1e-9

    def test_sandwich_on_random_pairs(self):
        for k in range(25):
            rng = SeededRng(3, k)
            rho = ginibre_state([2, 2], 4, rng)
            sigma = ginibre_state([2, 2], 4, rng.stream_for(99))
            s = ms.relative_entropy(rho, sigma)
            assert ms.min_relative_entropy(rho, sigma) <= s + 1e-7
            assert s <= ms.max_relative_entropy(rho, sigma) + 1e-7

    def test_dominance_triangle_inequality(self):
        for k in range(15):
            rng = SeededRng(4, k)
            a = ginibre_state([2, 2], 4, rng)
            b = ginibre_state([2, 2], 4, rng.stream_for(1))
            c = ginibre_state([2, 2], 4, rng.stream_for(2))
            lhs = ms.max_relative_entropy(a, c)
            rhs = ms.max_relative_entropy(a, b) + ms.max_relative_entropy(b, c)
            assert lhs <= rhs + 1e-7


class TestRelEntropyCoherence:
    def test_plus_is_one_bit(self, plus_state):
        assert ms.rel_entropy_coherence(plus_state, [0]).value == \
            pytest.approx(1.0, abs=1e-10)

    def test_bell_one_sided(self, bell_state):
        assert ms.rel_entropy_coherence(bell_state, [0]).value == \
            pytest.approx(1.0, abs=1e-10)

    def test_diagonal_state_zero(self):
        rho = DensityMatrix.from_matrix([2, 2], np.diag(
            [0.4, 0.3, 0.2, 0.1]).astype(complex))
        assert ms.rel_entropy_coherence(rho, [0, 1]).value == \
            pytest.approx(0.0, abs=1e-12)


class TestMaxCoherence:
    def test_plus(self, plus_state):
        res = ms.max_coherence(plus_state, [0])
        assert res.value == pytest.approx(1.0, abs=1e-7)
        assert res.gap <= 1e-7

    def test_bell_one_sided_with_witnesses(self, bell_state):
        res = ms.max_coherence(bell_state, [0])
        assert res.value == pytest.approx(1.0, abs=1e-7)
        sigma = res.certificate["sigma"]
        # primal witness dominates the state after dephasing
        from cohlab.qmat import dephase_matrix

        gap = dephase_matrix(sigma, (2, 2), (0,)) - bell_state.matrix
        assert np.linalg.eigvalsh(gap)[0] >= -1e-7
        tau = res.certificate["tau"]
        np.testing.assert_allclose(dephase_matrix(tau, (2, 2), (0,)),
                                   np.eye(4), atol=1e-7)
        want = 2 * bell_state.matrix + np.diag([0, 1.0, 1.0, 0])
        np.testing.assert_allclose(tau, want, atol=1e-5)

    def test_iq_state_is_zero(self):
        rng = SeededRng(5)
        iq = random_iq_state([2, 2], [0], 3, rng)
        assert abs(ms.max_coherence(iq, [0]).value) <= 1e-6

    def test_subadditive_on_products(self):
        for k in range(8):
            rng = SeededRng(6, k)
            a = ginibre_state([2], 2, rng)
            b = ginibre_state([2], 2, rng.stream_for(1))
            joint = DensityMatrix(tensor_product(a.op, b.op))
            lhs = ms.max_coherence(joint, [0, 1]).value
            rhs = ms.max_coherence(a, [0]).value + \
                ms.max_coherence(b, [0]).value
            assert lhs <= rhs + 1e-7

    def test_smooth_nonincreasing(self):
        rng = SeededRng(7)
        rho = ginibre_state([2, 2], 4, rng)
        values = [ms.max_coherence(rho, [0], eps).value
                  for eps in (0.0, 0.01, 0.05, 0.1)]
        for lo, hi in zip(values[1:], values[:-1]):
            assert lo <= hi + 1e-7

    def test_smooth_zero_matches_plain(self):
        rng = SeededRng(8)
        rho = ginibre_state([2, 2], 4, rng)
        plain = ms.max_coherence(rho, [0]).value
        smooth = ms.max_coherence(rho, [0], ms.SmoothParams(0.0)).value
        assert smooth == pytest.approx(plain, abs=1e-7)


class TestMinCoherence:
    def test_plus_closed_form(self, plus_state):
        res = ms.min_coherence(plus_state, [0])
        assert res.value == pytest.approx(1.0, abs=1e-10)
        assert res.method == ms.METHOD_CLOSED_FORM

    def test_bell_one_sided(self, bell_state):
        assert ms.min_coherence(bell_state, [0]).value == \
            pytest.approx(1.0, abs=1e-10)

    def test_sdp_path_matches_closed_form(self):
        for k in range(10):
            rng = SeededRng(9, k)
            rho = mixed_rank_state(rng, [2, 2], counter=k)
            closed = ms.min_coherence(rho, [0]).value
            via_sdp = ms.min_coherence(rho, [0], method="sdp")
            assert via_sdp.method == ms.METHOD_SDP
            assert via_sdp.value == pytest.approx(closed, abs=1e-7)

    def test_smooth_increases_capture_freedom(self):
        rng = SeededRng(10)
        rho = ginibre_state([2, 2], 4, rng)
        v0 = ms.min_coherence(rho, [0]).value
        v1 = ms.min_coherence(rho, [0], 0.05).value
        assert v1 >= v0 - 1e-7


class TestOrdering:
    def test_chain_on_random_states(self):
        for k in range(15):
            rng = SeededRng(11, k)
            rho = mixed_rank_state(rng, [2, 2], counter=k)
            for pattern in ([0], [0, 1]):
                low = ms.min_coherence(rho, pattern).value
                mid = ms.rel_entropy_coherence(rho, pattern).value
                high = ms.max_coherence(rho, pattern).value
                assert low <= mid + 1e-7
                assert mid <= high + 1e-7


class TestEntanglement:
    def test_bell_values(self, bell_state):
        assert ms.max_entanglement(bell_state, [[0], [1]]).value == \
            pytest.approx(1.0, abs=1e-6)
        assert ms.min_entanglement(bell_state, [[0], [1]]).value == \
            pytest.approx(1.0, abs=1e-6)

    def test_bell_primal_witness(self, bell_state):
        # omega = |00><00| + |11><11| dominates the state and stays PPT
        res = ms.max_entanglement(bell_state, [[0], [1]])
        omega = res.certificate["omega"]
        assert np.trace(omega).real == pytest.approx(2.0, abs=1e-6)
        gap = omega - bell_state.matrix
        assert np.linalg.eigvalsh(0.5 * (gap + gap.conj().T))[0] >= -1e-7

    def test_product_state_zero(self):
        rng = SeededRng(12)
        a = ginibre_state([2], 2, rng)
        b = ginibre_state([2], 2, rng.stream_for(1))
        joint = DensityMatrix(tensor_product(a.op, b.op))
        assert abs(ms.max_entanglement(joint, [[0], [1]]).value) <= 1e-6
        assert abs(ms.min_entanglement(joint, [[0], [1]]).value) <= 1e-6

    def test_exactness_flagging(self, bell_state, ghz_state):
        assert not ms.max_entanglement(bell_state, [[0], [1]]).flags
        res = ms.max_entanglement(ghz_state, [[0], [1], [2]])
        assert ms.FLAG_PPT_RELAXED in res.flags
        assert res.value == pytest.approx(1.0, abs=1e-6)

    def test_min_below_max(self):
        for k in range(10):
            rng = SeededRng(13, k)
            rho = ginibre_state([2, 2], 4, rng)
            lo = ms.min_entanglement(rho, [[0], [1]]).value
            hi = ms.max_entanglement(rho, [[0], [1]]).value
            assert lo <= hi + 1e-7


class TestDiscord:
    def test_bell_basis_discord(self, bell_state):
        assert ms.basis_discord(bell_state, 0) == pytest.approx(1.0,
                                                                abs=1e-10)

    def test_classical_state_zero(self):
        rho = DensityMatrix.from_matrix(
            [2, 2], np.diag([0.5, 0, 0, 0.5]).astype(complex))
        assert ms.basis_discord(rho, 0) == pytest.approx(0.0, abs=1e-12)

    def test_diagonal_product_zero(self):
        rng = SeededRng(14)
        a = np.diag([0.7, 0.3]).astype(complex)
        b = ginibre_state([2], 2, rng)
        joint = DensityMatrix(tensor_product(
            MultipartiteOperator([2], a), b.op))
        assert ms.basis_discord(joint, 0) == pytest.approx(0.0, abs=1e-10)

    def test_bell_measured_discord(self, bell_state):
        res = ms.discord(bell_state, 0, ms.DiscordOptions(starts=4))
        assert res.value == pytest.approx(1.0, abs=1e-7)
        assert res.method == ms.METHOD_RELAXATION

    def test_classical_classical_discord_zero(self):
        rho = DensityMatrix.from_matrix(
            [2, 2], np.diag([0.5, 0, 0, 0.5]).astype(complex))
        res = ms.discord(rho, 0, ms.DiscordOptions(starts=4))
        assert abs(res.value) <= 1e-9

    def test_bounded_by_basis_discord(self):
        for k in range(5):
            rng = SeededRng(15, k)
            rho = ginibre_state([2, 2], 4, rng)
            upper = ms.basis_discord(rho, 0)
            got = ms.discord(rho, 0, ms.DiscordOptions(starts=4)).value
            assert got <= upper + 1e-9

    def test_basis_identity(self):
        for k in range(10):
            rng = SeededRng(16, k)
            rho = mixed_rank_state(rng, [2, 2], counter=k)
            lhs = ms.rel_entropy_coherence(rho, [0]).value
            reduced = DensityMatrix(partial_trace(rho.op, [0]),
                                    psd_tol=1e-7, trace_tol=1e-7)
            rhs = ms.rel_entropy_coherence(reduced, [0]).value + \
                ms.basis_discord(rho, 0)
            assert lhs == pytest.approx(rhs, abs=1e-9)


class TestConditionalMutualInformation:
    def test_ghz(self, ghz_state):
        assert ms.conditional_mutual_information(
            ghz_state, [0], [1], [2]) == pytest.approx(1.0, abs=1e-10)

    def test_product_zero(self):
        rng = SeededRng(17)
        a = ginibre_state([2], 2, rng)
        b = ginibre_state([2], 2, rng.stream_for(1))
        c = ginibre_state([2], 2, rng.stream_for(2))
        joint = DensityMatrix(tensor_product(tensor_product(a.op, b.op),
                                             c.op))
        assert ms.conditional_mutual_information(
            joint, [0], [1], [2]) == pytest.approx(0.0, abs=1e-9)

    def test_strong_subadditivity(self):
        for k in range(10):
            rng = SeededRng(18, k)
            rho = ginibre_state([2, 2, 2], 8, rng)
            assert ms.conditional_mutual_information(
                rho, [0], [1], [2]) >= -1e-9


class TestMonogamy:
    def test_incoherent_product_zero(self):
        rho = DensityMatrix.from_matrix(
            [2, 2, 2], np.diag([0.2, 0.1, 0.15, 0.05, 0.1, 0.1, 0.2, 0.1]
                               ).astype(complex))
        assert ms.monogamy_score(rho, [[0], [1]], [2]) == \
            pytest.approx(0.0, abs=1e-10)

    def test_ghz_value(self, ghz_state):
        assert ms.monogamy_score(ghz_state, [[0], [1]], [2]) == \
            pytest.approx(-1.0, abs=1e-10)

    def test_never_positive_on_random_states(self):
        for k in range(20):
            rng = SeededRng(19, k)
            rho = mixed_rank_state(rng, [2, 2, 2], counter=k)
            assert ms.monogamy_score(rho, [[0], [1]], [2]) <= 1e-7


class TestQuasiConvexity:
    def test_mixtures(self):
        for k in range(6):
            rng = SeededRng(20, k)
            comps = [ginibre_state([2, 2], 4, rng.stream_for(j))
                     for j in range(3)]
            w = rng.generator.dirichlet(np.ones(3))
            mix = DensityMatrix.from_matrix(
                [2, 2], sum(wi * c.matrix for wi, c in zip(w, comps)))
            lhs = ms.max_coherence(mix, [0]).value
            rhs = max(ms.max_coherence(c, [0]).value for c in comps)
            assert lhs <= rhs + 1e-7


class TestMinimaxInterchange:
    def test_smooth_min_upper_bounded_by_sampled_iq(self):
        # the optimized value never exceeds the quantity at any single
        # incoherent-quantum state, which sandwiches the exchanged order
        rng = SeededRng(21)
        rho = ginibre_state([2, 2], 4, rng)
        eps = 0.05
        res = ms.min_coherence(rho, [0], eps)
        for k in range(6):
            sigma = random_iq_state([2, 2], [0], 3, rng.stream_for(k))
            # D_min^eps(rho || sigma) = -log2 min Tr(O sigma) over feasible O
            from cohlab import sdp as sdp_mod

            smat = sigma.matrix
            rmat = rho.matrix
            capture = sdp_mod.LinearMap.from_function(
                4, 1, lambda m: np.array([[np.trace(rmat @ m)]]), "capture")
            prob = sdp_mod.SdpProblem(
                [4], {0: smat.copy()}, "min",
                psd_constraints=[
                    sdp_mod.PsdConstraint(
                        4, {0: sdp_mod.LinearMap.identity(4).scaled(-1.0)},
                        offset=np.eye(4, dtype=complex)),
                    sdp_mod.PsdConstraint(
                        1, {0: capture},
                        offset=np.array([[-(1 - eps)]], dtype=complex)),
                ])
            sol = sdp_mod.solve(prob)
            assert sol.status == sdp_mod.STATUS_OPTIMAL
            upper = -math.log2(max(sol.primal_value, 1e-300))
            assert res.value <= upper + 1e-6
