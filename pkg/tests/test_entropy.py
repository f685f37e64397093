"""Bit I/O, adaptive models, arithmetic coding, and symbol round trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfgt.entropy import (
    AdaptiveBit,
    ArithmeticDecoder,
    ArithmeticEncoder,
    BitReader,
    BitWriter,
    SymbolDecoder,
    SymbolEncoder,
    eg0_bins,
    signed_bins,
)
from lfgt.errors import BitstreamError


class TestBitIO:
    def test_round_trip_unaligned(self):
        bits = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1]
        w = BitWriter()
        for b in bits:
            w.write_bit(b)
        data = w.getvalue()
        assert len(data) == 2
        r = BitReader(data)
        assert [r.read_bit() for _ in range(len(bits))] == bits

    def test_multi_bit_values(self):
        w = BitWriter()
        w.write_bits(0b10110, 5)
        w.write_bits(0x3A7, 12)
        r = BitReader(w.getvalue())
        assert r.read_bits(5) == 0b10110
        assert r.read_bits(12) == 0x3A7

    def test_read_past_end_yields_zeros(self):
        r = BitReader(b"\xff")
        assert r.read_bits(8) == 0xFF
        assert [r.read_bit() for _ in range(16)] == [0] * 16

    def test_empty_stream(self):
        assert BitWriter().getvalue() == b""
        assert BitReader(b"").read_bits(5) == 0


class TestAdaptiveBit:
    def test_initial_counts(self):
        m = AdaptiveBit()
        assert (m.c0, m.c1) == (1, 1)

    def test_counts_follow_updates(self):
        m = AdaptiveBit()
        for b in [1, 1, 0, 1]:
            m.update(b)
        assert (m.c0, m.c1) == (2, 4)

    def test_total_capped_by_halving(self):
        m = AdaptiveBit()
        for _ in range(2000):
            m.update(0)
        assert m.c0 + m.c1 <= 1024
        assert m.c0 >= 1 and m.c1 >= 1
        # heavily skewed history must stay skewed after rescaling
        assert m.c0 > 100 * m.c1


class TestBinarization:
    def test_order_zero_codes_frozen(self):
        assert eg0_bins(0) == [1]
        assert eg0_bins(1) == [0, 1, 0]
        assert eg0_bins(2) == [0, 1, 1]
        assert eg0_bins(3) == [0, 0, 1, 0, 0]
        assert eg0_bins(4) == [0, 0, 1, 0, 1]
        assert eg0_bins(7) == [0, 0, 0, 1, 0, 0, 0]

    def test_prefix_length_matches_magnitude(self):
        for value in [0, 1, 5, 100, 2**20]:
            bins = eg0_bins(value)
            zeros = bins.index(1)
            assert len(bins) == 2 * zeros + 1
            # decode by hand: suffix bits after the marker, offset by 2^zeros - 1
            suffix = 0
            for b in bins[zeros + 1 :]:
                suffix = (suffix << 1) | b
            assert (1 << zeros) - 1 + suffix == value

    def test_signed_mapping(self):
        assert signed_bins(0) == (0, [1])
        assert signed_bins(3) == (0, [0, 0, 1, 0, 0])
        assert signed_bins(-3) == (1, [0, 0, 1, 0, 0])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            eg0_bins(-1)


class TestArithmeticCoder:
    def test_adaptive_round_trip(self):
        rng = np.random.default_rng(5)
        bits = (rng.random(4000) < 0.83).astype(int).tolist()
        enc = ArithmeticEncoder()
        model = AdaptiveBit()
        for b in bits:
            enc.encode(b, model)
        data = enc.finish()
        # a strongly biased source must beat 1 bit per symbol
        assert len(data) * 8 < len(bits)
        dec = ArithmeticDecoder(data)
        model = AdaptiveBit()
        assert [dec.decode(model) for _ in bits] == bits

    def test_bypass_round_trip(self):
        rng = np.random.default_rng(6)
        bits = (rng.random(512) < 0.5).astype(int).tolist()
        enc = ArithmeticEncoder()
        for b in bits:
            enc.encode_bypass(b)
        dec = ArithmeticDecoder(enc.finish())
        assert [dec.decode_bypass() for _ in bits] == bits

    def test_mixed_contexts_round_trip(self):
        rng = np.random.default_rng(7)
        plan = [(int(rng.integers(3)), int(rng.integers(2))) for _ in range(3000)]
        enc = ArithmeticEncoder()
        models = [AdaptiveBit() for _ in range(3)]
        for ctx, b in plan:
            enc.encode(b, models[ctx])
        dec = ArithmeticDecoder(enc.finish())
        models = [AdaptiveBit() for _ in range(3)]
        assert all(dec.decode(models[ctx]) == b for ctx, b in plan)

    def test_encode_deterministic(self):
        def run():
            enc = ArithmeticEncoder()
            m = AdaptiveBit()
            for b in [1, 0, 0, 1, 1, 1, 0, 1, 0, 0]:
                enc.encode(b, m)
            enc.encode_bypass(1)
            return enc.finish()

        assert run() == run()


class TestSymbolCoder:
    def test_known_sequence(self):
        values = [0, 5, -3, 1000]
        enc = ArithmeticEncoder()
        se = SymbolEncoder(enc)
        for v in values:
            se.encode(v)
        data = enc.finish()
        dec = ArithmeticDecoder(data)
        sd = SymbolDecoder(dec)
        assert [sd.decode() for _ in values] == values

    def test_zero_run_compresses_hard(self):
        enc = ArithmeticEncoder()
        se = SymbolEncoder(enc)
        for _ in range(10_000):
            se.encode(0)
        data = enc.finish()
        assert len(data) * 8 < 2 * 10_000
        dec = ArithmeticDecoder(data)
        sd = SymbolDecoder(dec)
        assert all(sd.decode() == 0 for _ in range(10_000))

    def test_tagged_contexts_round_trip(self):
        rng = np.random.default_rng(8)
        plan = []
        for _ in range(2000):
            tag = ("band", int(rng.integers(4)))
            value = int(rng.integers(-50, 51))
            plan.append((tag, value))
        enc = ArithmeticEncoder()
        se = SymbolEncoder(enc)
        for tag, value in plan:
            se.encode(value, tag=tag)
        dec = ArithmeticDecoder(enc.finish())
        sd = SymbolDecoder(dec)
        assert all(sd.decode(tag=tag) == value for tag, value in plan)

    @settings(deadline=None, max_examples=40)
    @given(
        st.lists(
            st.integers(min_value=-(2**40), max_value=2**40),
            min_size=0,
            max_size=120,
        )
    )
    def test_round_trip_any_integers(self, values):
        enc = ArithmeticEncoder()
        se = SymbolEncoder(enc)
        for v in values:
            se.encode(v)
        dec = ArithmeticDecoder(enc.finish())
        sd = SymbolDecoder(dec)
        assert [sd.decode() for _ in values] == values

    def test_corrupt_stream_raises(self):
        dec = ArithmeticDecoder(b"\x00" * 100)
        sd = SymbolDecoder(dec)
        with pytest.raises(BitstreamError):
            for _ in range(10_000):
                sd.decode()
