"""
Shared Gaussian codebook with ID bits in the most significant positions.

User k owns the contiguous index range [k * 2^(M_b - M_K), (k + 1) * 2^(M_b - M_K)).
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from utils.errors import EncodingError, InvalidUserError, ConfigError
from utils.helpers import Helpers


@dataclass(frozen=True)
class Codebook:
    matrix: np.ndarray      # M x 2^M_b
    m_bits: int
    id_bits: int
    n_users: int

    @property
    def length(self) -> int:
        return self.matrix.shape[0]

    @property
    def size(self) -> int:
        return self.matrix.shape[1]

    @property
    def data_bits(self) -> int:
        return self.m_bits - self.id_bits

    @property
    def range_size(self) -> int:
        return 2 ** self.data_bits

    def user_range(self, user: int) -> range:
        return range(user * self.range_size, (user + 1) * self.range_size)

    def codeword(self, index: int) -> np.ndarray:
        return self.matrix[:, index]


@dataclass(frozen=True)
class BlockMessage:
    user: int
    block: int
    data_bits: np.ndarray
    full_bits: np.ndarray
    codeword_index: int


def id_bits_for(k_users: int) -> int:
    return math.ceil(math.log2(k_users)) if k_users > 1 else 0


def gen_codebook(m: int, m_bits: int, k_users: int, rng: np.random.Generator) -> Codebook:
    """M x 2^M_b matrix of i.i.d. CN(0, 1) entries"""
    if m < 1 or m_bits < 1 or k_users < 1:
        raise ConfigError(f"invalid codebook sizes m={m}, m_bits={m_bits}, k_users={k_users}")
    id_bits = id_bits_for(k_users)
    if id_bits > m_bits:
        raise ConfigError(f"{k_users} users do not fit in {m_bits}-bit indices")
    matrix = Helpers.crandn(rng, m, 2 ** m_bits)
    matrix.setflags(write=False)
    return Codebook(matrix=matrix, m_bits=m_bits, id_bits=id_bits, n_users=k_users)


def encode(book: Codebook, user: int, data_bits: Sequence[int], block: int = 0) -> Tuple[BlockMessage, np.ndarray]:
    """Map [binary(user) | data_bits] to its codebook column"""
    data = np.asarray(data_bits, dtype=np.uint8).ravel()
    if data.size != book.data_bits:
        raise EncodingError(f"expected {book.data_bits} data bits, got {data.size}")
    if np.any(data > 1):
        raise EncodingError("data bits must be 0 or 1")
    if not 0 <= user < book.n_users:
        raise EncodingError(f"user {user} outside 0..{book.n_users - 1}")

    full = np.concatenate([Helpers.int_to_bits(user, book.id_bits), data]).astype(np.uint8)
    index = Helpers.bits_to_int(full)
    message = BlockMessage(user=user, block=block, data_bits=data, full_bits=full, codeword_index=index)
    return message, book.codeword(index)


def decode_index(book: Codebook, n: int) -> Tuple[int, np.ndarray]:
    """Owning user and data bits of codebook index n"""
    if not 0 <= n < book.size:
        raise EncodingError(f"index {n} outside codebook of size {book.size}")
    user = n >> book.data_bits
    if user >= book.n_users:
        raise InvalidUserError(f"index {n} lies in the unassigned range of user slot {user}")
    data = Helpers.int_to_bits(n & (book.range_size - 1), book.data_bits)
    return user, data


def draw_messages(book: Codebook, n_blocks: int, rng: np.random.Generator):
    """Uniform random data bits for every (user, block), as a K x J object array"""
    messages = np.empty((book.n_users, n_blocks), dtype=object)
    for j in range(n_blocks):
        for k in range(book.n_users):
            bits = rng.integers(0, 2, size=book.data_bits, dtype=np.uint8)
            messages[k, j], _ = encode(book, k, bits, block=j)
    return messages
