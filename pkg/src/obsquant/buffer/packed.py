"""Contiguous bit-packed storage of fixed-point observation codes."""

from __future__ import annotations

import math

import numpy as np

from obsquant.quant import InvalidObservationError, QuantScheme, decode, encode, encode_row

# rows up to this many components are staged, this many at a time
_STAGE_DIM_LIMIT = 64
_STAGE_ROWS = 64


class PackedObsStore:
    """``capacity`` rows of ``obs_dim`` codes, each ``scheme.total_bits`` wide.

    Codes are laid out MSB-first, row after row, with no padding between
    components or rows; only the tail of the final byte is unused.
    """

    def __init__(self, scheme: QuantScheme, obs_dim: int, capacity: int):
        if obs_dim <= 0 or capacity <= 0:
            raise ValueError("obs_dim and capacity must be positive")
        self.scheme = scheme
        self.obs_dim = int(obs_dim)
        self.capacity = int(capacity)
        tb = scheme.total_bits
        self.row_bits = self.obs_dim * tb
        n = -(-self.capacity * self.row_bits // 8)
        # 7 trailing pad bytes let every byte offset start a full 8-byte word;
        # _words[k] is the big-endian word beginning at byte k (overlapping view)
        self._padded = np.zeros(n + 7, dtype=np.uint8)
        self._data = self._padded[:n]
        self._words = np.ndarray((n,), dtype=">u8", buffer=self._padded, strides=(1,))

        self._mask = np.uint64((1 << tb) - 1) if tb < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
        self._shifts = np.arange(tb - 1, -1, -1, dtype=np.uint64)
        self._weights = np.left_shift(np.uint64(1), self._shifts)
        self._sign_shift = np.int64(64 - tb)
        # widest byte window any row can touch, given a 0..7 bit offset
        self._span = (7 + self.row_bits + 7) // 8
        self._span_cols = np.arange(self._span)
        self._row_cols = np.arange(self.row_bits)
        self._code_offsets = np.arange(self.obs_dim, dtype=np.int64) * tb
        # Short rows are staged as floats and packed a block at a time; per-row
        # packing in Python costs more than the rest of an environment step.
        self._stage_rows = _STAGE_ROWS if self.obs_dim <= _STAGE_DIM_LIMIT else 0
        self._stage = np.empty((self._stage_rows, self.obs_dim))
        self._stage_start = 0
        self._staged = 0

    @property
    def data(self) -> np.ndarray:
        """The packed byte array, with any staged rows flushed into it."""
        self.flush()
        return self._data

    @property
    def nbytes(self) -> int:
        """Packed storage only; the staging block is a fixed scratch area (see scratch_nbytes)."""
        return self._data.nbytes

    @property
    def scratch_nbytes(self) -> int:
        return self._stage.nbytes

    def _check_index(self, index: int) -> None:
        if not 0 <= index < self.capacity:
            raise IndexError(f"index {index} out of range for capacity {self.capacity}")

    def write(self, index: int, obs) -> None:
        index = int(index)
        self._check_index(index)
        if self._stage_rows:
            self._write_staged(index, obs)
            return
        self._pack_run(index, self._checked(obs)[None, :])

    def _checked(self, obs) -> np.ndarray:
        if type(obs) is not np.ndarray or obs.dtype != np.float64:
            obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != (self.obs_dim,):
            raise ValueError(f"expected observation of shape ({self.obs_dim},), got {obs.shape}")
        return obs

    def _write_staged(self, index: int, obs) -> None:
        obs = self._checked(obs)
        # a non-finite sum is rare for valid rows (only on overflow), so the exact check is the fallback
        if not math.isfinite(sum(obs.tolist())) and not np.isfinite(obs).all():
            raise InvalidObservationError("observation contains NaN or infinite components")
        if self._staged and index != self._stage_start + self._staged:
            self.flush()
        if not self._staged:
            self._stage_start = index
        self._stage[self._staged] = obs
        self._staged += 1
        if self._staged == self._stage_rows:
            self.flush()

    def flush(self) -> None:
        """Pack any staged rows into the byte array."""
        if self._staged:
            count, self._staged = self._staged, 0
            self._pack_run(self._stage_start, self._stage[:count])

    def _pack_run(self, first: int, rows: np.ndarray) -> None:
        """Pack consecutive rows starting at row ``first``."""
        if rows.shape[0] == 1 and self.row_bits <= 1024:
            self._pack_row_int(first, encode_row(rows[0].tolist(), self.scheme))
            return
        u = encode(rows, self.scheme).astype(np.uint64) & self._mask
        bits = ((u[..., None] >> self._shifts) & np.uint64(1)).astype(np.uint8).ravel()
        start = first * self.row_bits
        lo, hi = start >> 3, (start + bits.size + 7) >> 3
        off = start & 7
        window = np.unpackbits(self._data[lo:hi])
        window[off : off + bits.size] = bits
        self._data[lo:hi] = np.packbits(window)

    def _pack_row_int(self, index: int, codes: list[int]) -> None:
        # a lone row is cheaper to splice with Python ints than with unpackbits
        tb = self.scheme.total_bits
        mask = (1 << tb) - 1
        row = 0
        for c in codes:
            row = (row << tb) | (c & mask)
        start = index * self.row_bits
        lo = start >> 3
        nbytes = ((start + self.row_bits + 7) >> 3) - lo
        shift = nbytes * 8 - (start & 7) - self.row_bits
        window = int.from_bytes(self._data[lo : lo + nbytes].tobytes(), "big")
        window &= ((1 << nbytes * 8) - 1) ^ (((1 << self.row_bits) - 1) << shift)
        self._data[lo : lo + nbytes] = np.frombuffer((window | (row << shift)).to_bytes(nbytes, "big"), np.uint8)

    def read_codes(self, indices) -> np.ndarray:
        """Signed codes for ``indices`` (int or 1-D array) -> ``(n, obs_dim)`` int64."""
        self.flush()
        idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        if idx.size and (idx.min() < 0 or idx.max() >= self.capacity):
            raise IndexError(f"index out of range for capacity {self.capacity}")
        if self.scheme.total_bits <= 57:
            return self._read_codes_words(idx)
        return self._read_codes_bits(idx)

    def _read_codes_words(self, idx: np.ndarray) -> np.ndarray:
        # any code of <= 57 bits lies inside the 8 bytes starting at its first byte
        pos = (idx * self.row_bits)[:, None] + self._code_offsets
        words = self._words[pos >> 3].astype(np.uint64)
        words <<= (pos & 7).astype(np.uint64)
        return words.view(np.int64) >> self._sign_shift

    def _read_codes_bits(self, idx: np.ndarray) -> np.ndarray:
        start = idx * self.row_bits
        bits = np.unpackbits(self._padded[(start >> 3)[:, None] + self._span_cols], axis=1)
        cols = (start & 7)[:, None] + self._row_cols
        bits = np.take_along_axis(bits, cols, axis=1)
        bits = bits.reshape(idx.size, self.obs_dim, self.scheme.total_bits).astype(np.uint64)
        u = (bits * self._weights).sum(axis=-1, dtype=np.uint64)
        return (u << np.uint64(self._sign_shift)).view(np.int64) >> self._sign_shift

    def read(self, index: int) -> np.ndarray:
        self._check_index(index)
        return decode(self.read_codes(index)[0], self.scheme)

    def read_many(self, indices) -> np.ndarray:
        # stored codes are in range by construction, so skip decode's check
        return self.read_codes(indices) / self.scheme.scale


class FloatObsStore:
    """Full-precision observation rows; the unquantized counterpart of PackedObsStore."""

    def __init__(self, obs_dim: int, capacity: int, dtype=np.float64):
        if obs_dim <= 0 or capacity <= 0:
            raise ValueError("obs_dim and capacity must be positive")
        self.obs_dim = int(obs_dim)
        self.capacity = int(capacity)
        self.data = np.zeros((self.capacity, self.obs_dim), dtype=dtype)

    @property
    def nbytes(self) -> int:
        return self.data.nbytes

    def write(self, index: int, obs) -> None:
        if not 0 <= index < self.capacity:
            raise IndexError(f"index {index} out of range for capacity {self.capacity}")
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != (self.obs_dim,):
            raise ValueError(f"expected observation of shape ({self.obs_dim},), got {obs.shape}")
        self.data[index] = obs

    def read(self, index: int) -> np.ndarray:
        if not 0 <= index < self.capacity:
            raise IndexError(f"index {index} out of range for capacity {self.capacity}")
        return self.data[index].copy()

    def read_many(self, indices) -> np.ndarray:
        return self.data[np.asarray(indices)]


def make_obs_store(scheme: QuantScheme | None, obs_dim: int, capacity: int):
    if scheme is None:
        return FloatObsStore(obs_dim, capacity)
    return PackedObsStore(scheme, obs_dim, capacity)
