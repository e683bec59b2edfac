import numpy as np
import pytest
from numpy.testing import assert_array_equal

from coding.codebook import decode_index, draw_messages, encode, gen_codebook, id_bits_for
from utils.errors import ConfigError, EncodingError, InvalidUserError


@pytest.fixture
def book(rng):
    return gen_codebook(28, 8, 4, rng)


class TestGenCodebook:
    def test_full_size_shape(self, book):
        assert book.matrix.shape == (28, 256)
        assert book.id_bits == 2
        assert book.data_bits == 6

    def test_seeded(self):
        a = gen_codebook(28, 8, 4, np.random.default_rng(3))
        b = gen_codebook(28, 8, 4, np.random.default_rng(3))
        assert_array_equal(a.matrix, b.matrix)

    def test_unit_variance(self, book):
        assert np.mean(np.abs(book.matrix) ** 2) == pytest.approx(1.0, rel=0.05)

    def test_invalid_sizes(self, rng):
        with pytest.raises(ConfigError):
            gen_codebook(0, 8, 4, rng)
        with pytest.raises(ConfigError):
            gen_codebook(10, 2, 5, rng)

    def test_id_bits(self):
        assert [id_bits_for(k) for k in (1, 2, 3, 4, 5, 8)] == [0, 1, 2, 2, 3, 3]


class TestEncode:
    def test_range_start(self, book):
        msg, cw = encode(book, 2, [0] * 6)
        assert msg.codeword_index == 128
        assert_array_equal(cw, book.matrix[:, 128])
        assert_array_equal(msg.full_bits[:2], [1, 0])

    def test_range_top(self, book):
        msg, _ = encode(book, 3, [1] * 6)
        assert msg.codeword_index == 255

    def test_codeword_is_c_times_gamma(self, book):
        msg, cw = encode(book, 1, [1, 0, 1, 0, 1, 0])
        gamma = np.zeros(book.size)
        gamma[msg.codeword_index] = 1.0
        np.testing.assert_allclose(book.matrix @ gamma, cw)

    def test_wrong_length(self, book):
        with pytest.raises(EncodingError):
            encode(book, 0, [0] * 5)

    def test_bad_user(self, book):
        with pytest.raises(EncodingError):
            encode(book, 4, [0] * 6)

    def test_exhaustive_round_trip(self, book):
        for n in range(256):
            user, data = decode_index(book, n)
            msg, _ = encode(book, user, data)
            assert msg.codeword_index == n
            assert n in book.user_range(user)


class TestDecodeIndex:
    def test_values(self, book):
        user, data = decode_index(book, 128)
        assert user == 2
        assert_array_equal(data, [0] * 6)
        assert decode_index(book, 0)[0] == 0

    def test_unassigned_range(self, rng):
        book3 = gen_codebook(16, 8, 3, rng)
        for n in (192, 200, 255):
            with pytest.raises(InvalidUserError):
                decode_index(book3, n)
        assert decode_index(book3, 191)[0] == 2

    def test_out_of_range(self, book):
        with pytest.raises(EncodingError):
            decode_index(book, 256)

    def test_ranges_partition(self, book):
        seen = set()
        for k in range(book.n_users):
            r = set(book.user_range(k))
            assert not r & seen
            seen |= r
        assert seen == set(range(256))


class TestDrawMessages:
    def test_layout(self, book, rng):
        msgs = draw_messages(book, 5, rng)
        assert msgs.shape == (4, 5)
        for (k, j), msg in np.ndenumerate(msgs):
            assert msg.user == k and msg.block == j
            assert msg.codeword_index in book.user_range(k)

    def test_distinct_indices_per_block(self, book, rng):
        msgs = draw_messages(book, 10, rng)
        for j in range(10):
            assert len({msgs[k, j].codeword_index for k in range(4)}) == 4
