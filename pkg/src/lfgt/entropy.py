"""Self-contained context-adaptive binary arithmetic coder.

32-bit low/high range coder with underflow handling; probabilities come
from per-context bit counters capped at a total of 1024 so adaptation keeps
tracking.  Payloads are independent byte strings: the encoder terminates
with a single disambiguating bit and zero padding, and the decoder treats
reads past the end as zero bits, so concatenated payloads can be framed by
explicit lengths alone.
"""

from __future__ import annotations

from .errors import BitstreamError

_STATE_BITS = 32
_MASK = (1 << _STATE_BITS) - 1
_TOP = 1 << (_STATE_BITS - 1)
_SECOND = _TOP >> 1
_COUNT_CAP = 1024


class BitWriter:
    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._n = 0

    def write_bit(self, bit: int) -> None:
        self._acc = (self._acc << 1) | (bit & 1)
        self._n += 1
        if self._n == 8:
            self._bytes.append(self._acc)
            self._acc = 0
            self._n = 0

    def write_bits(self, value: int, count: int) -> None:
        for shift in range(count - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    def getvalue(self) -> bytes:
        if self._n:
            return bytes(self._bytes) + bytes([self._acc << (8 - self._n)])
        return bytes(self._bytes)


class BitReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def read_bit(self) -> int:
        byte_index = self._pos >> 3
        if byte_index >= len(self._data):
            self._pos += 1
            return 0
        bit = (self._data[byte_index] >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read_bits(self, count: int) -> int:
        value = 0
        for _ in range(count):
            value = (value << 1) | self.read_bit()
        return value


class AdaptiveBit:
    """Two-counter binary probability model."""

    __slots__ = ("c0", "c1")

    def __init__(self):
        self.c0 = 1
        self.c1 = 1

    def update(self, bit: int) -> None:
        if bit:
            self.c1 += 1
        else:
            self.c0 += 1
        if self.c0 + self.c1 > _COUNT_CAP:
            self.c0 = (self.c0 + 1) >> 1
            self.c1 = (self.c1 + 1) >> 1


class ArithmeticEncoder:
    def __init__(self):
        self._low = 0
        self._high = _MASK
        self._pending = 0
        self._writer = BitWriter()

    def _emit(self, bit: int) -> None:
        self._writer.write_bit(bit)
        inv = bit ^ 1
        while self._pending:
            self._writer.write_bit(inv)
            self._pending -= 1

    def _renormalize(self) -> None:
        while True:
            if self._high < _TOP:
                self._emit(0)
            elif self._low >= _TOP:
                self._emit(1)
                self._low -= _TOP
                self._high -= _TOP
            elif self._low >= _SECOND and self._high < _TOP + _SECOND:
                self._pending += 1
                self._low -= _SECOND
                self._high -= _SECOND
            else:
                break
            self._low = (self._low << 1) & _MASK
            self._high = ((self._high << 1) | 1) & _MASK

    def _encode(self, bit: int, c0: int, total: int) -> None:
        span = self._high - self._low + 1
        split = self._low + (span * c0) // total - 1
        if bit:
            self._low = split + 1
        else:
            self._high = split
        self._renormalize()

    def encode(self, bit: int, model: AdaptiveBit) -> None:
        self._encode(bit, model.c0, model.c0 + model.c1)
        model.update(bit)

    def encode_bypass(self, bit: int) -> None:
        self._encode(bit, 1, 2)

    def finish(self) -> bytes:
        self._pending += 1
        self._emit(1 if self._low >= _SECOND else 0)
        return self._writer.getvalue()


class ArithmeticDecoder:
    def __init__(self, data: bytes):
        self._reader = BitReader(data)
        self._low = 0
        self._high = _MASK
        self._code = self._reader.read_bits(_STATE_BITS)

    def _renormalize(self) -> None:
        while True:
            if self._high < _TOP:
                pass
            elif self._low >= _TOP:
                self._low -= _TOP
                self._high -= _TOP
                self._code -= _TOP
            elif self._low >= _SECOND and self._high < _TOP + _SECOND:
                self._low -= _SECOND
                self._high -= _SECOND
                self._code -= _SECOND
            else:
                break
            self._low = (self._low << 1) & _MASK
            self._high = ((self._high << 1) | 1) & _MASK
            self._code = ((self._code << 1) | self._reader.read_bit()) & _MASK

    def _decode(self, c0: int, total: int) -> int:
        span = self._high - self._low + 1
        split = self._low + (span * c0) // total - 1
        bit = 1 if self._code > split else 0
        if bit:
            self._low = split + 1
        else:
            self._high = split
        self._renormalize()
        return bit

    def decode(self, model: AdaptiveBit) -> int:
        bit = self._decode(model.c0, model.c0 + model.c1)
        model.update(bit)
        return bit

    def decode_bypass(self) -> int:
        return self._decode(1, 2)


def signed_bins(value: int) -> tuple[int, list[int]]:
    """Binarize a signed integer: sign bit then order-0 Exp-Golomb magnitude."""
    sign = 1 if value < 0 else 0
    return sign, eg0_bins(abs(value))


def eg0_bins(value: int) -> list[int]:
    """Order-0 Exp-Golomb bin string for a non-negative integer."""
    if value < 0:
        raise ValueError("eg0 encodes non-negative values")
    m = value + 1
    length = m.bit_length()
    bins = [0] * (length - 1)
    for shift in range(length - 1, -1, -1):
        bins.append((m >> shift) & 1)
    return bins


class SymbolEncoder:
    """Signed-symbol layer: one adaptive context per (tag, bin position),
    positions capped so long magnitudes share tails."""

    def __init__(self, encoder: ArithmeticEncoder, position_cap: int = 8):
        self._enc = encoder
        self._cap = position_cap
        self._models: dict[tuple, AdaptiveBit] = {}

    def _model(self, tag, position: int) -> AdaptiveBit:
        key = (tag, min(position, self._cap))
        model = self._models.get(key)
        if model is None:
            model = AdaptiveBit()
            self._models[key] = model
        return model

    def encode(self, value: int, tag=()) -> None:
        sign, bins = signed_bins(value)
        self._enc.encode(sign, self._model(tag, 0))
        for pos, bit in enumerate(bins, start=1):
            self._enc.encode(bit, self._model(tag, pos))


class SymbolDecoder:
    def __init__(self, decoder: ArithmeticDecoder, position_cap: int = 8):
        self._dec = decoder
        self._cap = position_cap
        self._models: dict[tuple, AdaptiveBit] = {}

    def _model(self, tag, position: int) -> AdaptiveBit:
        key = (tag, min(position, self._cap))
        model = self._models.get(key)
        if model is None:
            model = AdaptiveBit()
            self._models[key] = model
        return model

    def decode(self, tag=()) -> int:
        sign = self._dec.decode(self._model(tag, 0))
        zeros = 0
        pos = 1
        while True:
            bit = self._dec.decode(self._model(tag, pos))
            pos += 1
            if bit:
                break
            zeros += 1
            if zeros > 64:
                raise BitstreamError("runaway Exp-Golomb prefix (corrupt payload)")
        m = 1
        for _ in range(zeros):
            m = (m << 1) | self._dec.decode(self._model(tag, pos))
            pos += 1
        value = m - 1
        return -value if sign else value
