import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from channel_engine.airlink import TransmissionScenario, synthesize
from channel_engine.channel import sample_channel
from channel_engine.dictionaries import build_dictionaries
from coding.codebook import Codebook, draw_messages, gen_codebook, id_bits_for
from recovery_engine.somp import ERASED, recover_all_blocks, resolve_permutation, somp
from ris_engine.schedules import random_schedule
from utils.errors import ConfigError
from utils.helpers import Helpers


def orthogonal_book(m_bits, k_users):
    """Identity codebook: every S-OMP correlation off the support is zero"""
    size = 2 ** m_bits
    return Codebook(matrix=np.eye(size, dtype=np.complex128), m_bits=m_bits,
                    id_bits=id_bits_for(k_users), n_users=k_users)


def exhaustive_support(y, c, k):
    """Best K-subset by least-squares residual, and whether it beats the runner-up"""
    residuals = []
    for subset in itertools.combinations(range(c.shape[1]), k):
        sub = c[:, subset]
        coeffs, *_ = np.linalg.lstsq(sub, y, rcond=None)
        residuals.append((np.linalg.norm(y - sub @ coeffs), set(subset)))
    residuals.sort(key=lambda item: item[0])
    (best, best_set), (runner_up, _) = residuals[0], residuals[1]
    return best_set, runner_up - best > 1e-8 * np.linalg.norm(y)


class TestSomp:
    def test_single_user_exact(self, rng):
        book = gen_codebook(12, 5, 1, rng)
        g = Helpers.crandn(rng, 1, 3)
        y = np.outer(book.codeword(17), g[0])
        result = somp(y, book, 1)
        assert result.support == [17]
        assert_allclose(result.coeffs, g, atol=1e-10)
        assert result.residual_norms[-1] < 1e-10

    def test_matches_exhaustive_oracle(self):
        """Noiseless blocks; greedy selection agrees with the unique oracle in about 97% of draws"""
        rng = np.random.default_rng(7)
        agree = unique = 0
        for _ in range(200):
            book = gen_codebook(8, 4, 2, rng)
            true = rng.choice(16, size=2, replace=False)
            y = book.matrix[:, true] @ Helpers.crandn(rng, 2, 4)
            oracle, is_unique = exhaustive_support(y, book.matrix, 2)
            if not is_unique:
                continue
            unique += 1
            agree += set(somp(y, book, 2).support) == oracle
        assert unique >= 190
        assert agree >= 0.93 * unique

    def test_residual_norms_non_increasing(self, rng):
        book = gen_codebook(16, 6, 4, rng)
        y = book.matrix[:, [3, 17, 40, 58]] @ Helpers.crandn(rng, 4, 4)
        y = y + 0.1 * Helpers.crandn(rng, *y.shape)
        result = somp(y, book, 4, n_iters=10)
        norms = np.array(result.residual_norms)
        assert len(norms) == 10
        assert np.all(np.diff(norms) <= 1e-12 * norms[:-1])
        assert norms[-1] < np.linalg.norm(y)

    def test_ties_pick_lowest_index(self):
        book = orthogonal_book(4, 2)
        result = somp(np.zeros((16, 2), dtype=np.complex128), book, 2)
        assert result.support == [0, 1]

    def test_extra_iterations_keep_strongest_rows(self, rng):
        book = orthogonal_book(5, 2)
        g = Helpers.crandn(rng, 2, 2)
        y = np.zeros((32, 2), dtype=np.complex128)
        y[9], y[20] = g[0], g[1]
        result = somp(y, book, 2, n_iters=5)
        assert sorted(result.support) == [9, 20]
        assert len(result.residual_norms) == 5

    @pytest.mark.parametrize("n_iters", [1, 13])
    def test_iteration_bounds(self, rng, n_iters):
        book = gen_codebook(12, 5, 2, rng)
        with pytest.raises(ConfigError):
            somp(Helpers.crandn(rng, 12, 2), book, 2, n_iters=n_iters)


class TestResolvePermutation:
    def test_four_users(self, rng):
        book = gen_codebook(28, 8, 4, rng)
        rows = Helpers.crandn(rng, 4, 3)
        index, resolved = resolve_permutation([128, 5, 200, 70], rows, book)
        assert index.tolist() == [5, 70, 128, 200]
        assert_allclose(resolved, rows[[1, 3, 0, 2]])

    def test_collisions_erase_both_users(self, rng):
        book = gen_codebook(28, 8, 2, rng)
        rows = Helpers.crandn(rng, 4, 3)
        index, resolved = resolve_permutation([3, 7, 130, 200], rows, book)
        assert index.tolist() == [ERASED, ERASED]
        assert np.all(resolved == 0)

    def test_unassigned_range_is_ignored(self, rng):
        book = gen_codebook(28, 8, 3, rng)
        rows = Helpers.crandn(rng, 3, 2)
        index, _ = resolve_permutation([10, 230, 150], rows, book)
        assert index.tolist() == [10, ERASED, 150]

    def test_order_independence(self, rng):
        book = gen_codebook(28, 8, 4, rng)
        support = [128, 5, 200, 70]
        rows = Helpers.crandn(rng, 4, 3)
        base_index, base_rows = resolve_permutation(support, rows, book)
        for perm in itertools.permutations(range(4)):
            index, resolved = resolve_permutation([support[p] for p in perm], rows[list(perm)], book)
            assert index.tolist() == base_index.tolist()
            assert_allclose(resolved, base_rows)


class TestRecoverAllBlocks:
    def test_noiseless_recovery_is_exact(self, small_cfg, rng):
        cfg = small_cfg.replace(codeword_len=32)
        dictionary = build_dictionaries(cfg)
        book = orthogonal_book(cfg.bits_per_block, cfg.n_users)
        scenario = TransmissionScenario(
            cfg=cfg,
            book=book,
            channels=sample_channel(cfg, dictionary, rng),
            schedule=random_schedule(cfg.n_ris_elements, cfg.n_blocks, rng),
            messages=draw_messages(book, cfg.n_blocks, rng),
        )
        received = synthesize(scenario, cfg.snr_db, rng, noiseless=True)
        out = recover_all_blocks(received, book, cfg)

        assert not out.erasure_mask.any()
        truth = np.array([[scenario.messages[k, j].codeword_index for j in range(cfg.n_blocks)]
                          for k in range(cfg.n_users)])
        assert np.array_equal(out.indices, truth)
        n_b = cfg.n_bs_antennas
        for j in range(cfg.n_blocks):
            assert_allclose(out.g_hat[:, j * n_b:(j + 1) * n_b], received.ground_truth_equiv[j], atol=1e-9)

    def test_shapes(self, small_cfg, small_dict, rng):
        book = gen_codebook(small_cfg.codeword_len, small_cfg.bits_per_block, small_cfg.n_users, rng)
        scenario = TransmissionScenario(
            cfg=small_cfg,
            book=book,
            channels=sample_channel(small_cfg, small_dict, rng),
            schedule=random_schedule(small_cfg.n_ris_elements, small_cfg.n_blocks, rng),
            messages=draw_messages(book, small_cfg.n_blocks, rng),
        )
        out = recover_all_blocks(synthesize(scenario, 10.0, rng), book, small_cfg)
        k, j, n_b = small_cfg.n_users, small_cfg.n_blocks, small_cfg.n_bs_antennas
        assert out.g_hat.shape == (k, j * n_b)
        assert out.erasure_mask.shape == (k, j)
        assert out.indices.shape == (k, j)
        assert np.all(out.g_hat[out.erasure_mask.repeat(n_b, axis=1)] == 0)
