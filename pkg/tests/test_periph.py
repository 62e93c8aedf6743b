"""Acquisition FIFO chain and storage timing model."""

from __future__ import annotations

import numpy as np
import pytest

from femu.errors import (
    BadArguments,
    EmptySource,
    InvalidRate,
    OutOfRange,
    SourceExhausted,
    Underrun,
)
from femu.model import ClockConfig
from femu.periph import (
    PHYSICAL_BANDWIDTH_BPS,
    VIRTUAL_BANDWIDTH_BPS,
    AdcConfig,
    AdcSession,
    FlashMode,
    HardFifo,
    SampleSource,
    SoftFifo,
    UnderrunPolicy,
    VirtualFlash,
    flash_transfer_cycles,
    no_underrun_bound_cycles,
)

CLK = ClockConfig()


def make_session(
    count=10_000,
    fs_hz=100_000,
    soft_cap=4096,
    batch=32,
    latency=1000,
    hard_cap=64,
    policy=UnderrunPolicy.COUNT_AND_STALL,
    kind="ramp",
):
    return AdcSession(
        source=SampleSource.synthetic(kind, count),
        config=AdcConfig(fs_hz=fs_hz, underrun_policy=policy),
        soft=SoftFifo(capacity=soft_cap, refill_batch=batch, refill_latency_cycles=latency),
        hard=HardFifo(capacity=hard_cap),
        clock=CLK,
    )


def drain(session, n, period):
    """Pops n samples at nominal instants; returns (values, ready_times)."""
    vals, times = [], []
    now = 0
    for k in range(n):
        v, ready = session.pop(max(now, k * period))
        vals.append(v)
        times.append(ready)
        now = ready
    return vals, times


# ---------------------------------------------------------------- sources


def test_synthetic_kinds():
    assert SampleSource.synthetic("ramp", 5).samples.tolist() == [-32768, -32767, -32766, -32765, -32764]
    assert not SampleSource.synthetic("zeros", 8).samples.any()
    sine = SampleSource.synthetic("sine", 480).samples
    assert sine[0] == 0 and sine[120] == 30000
    with pytest.raises(BadArguments):
        SampleSource.synthetic("sawtooth", 5)
    with pytest.raises(BadArguments):
        SampleSource.synthetic("ramp", -1)


def test_noise_source_is_seed_deterministic():
    a = SampleSource.synthetic("noise", 1000, seed=7).samples
    b = SampleSource.synthetic("noise", 1000, seed=7).samples
    c = SampleSource.synthetic("noise", 1000, seed=8).samples
    np.testing.assert_array_equal(a, b)
    assert (a != c).any()


def test_source_from_raw_and_json(tmp_path):
    values = np.array([-5, 0, 7, 32767, -32768], dtype="<i2")
    raw = tmp_path / "wave.bin"
    raw.write_bytes(values.tobytes())
    assert SampleSource.from_file(raw).samples.tolist() == values.tolist()

    header = tmp_path / "wave.json"
    header.write_text('{"format": "s16le", "payload": "wave.bin"}')
    assert SampleSource.from_file(header).samples.tolist() == values.tolist()

    inline = tmp_path / "inline.json"
    inline.write_text('{"format": "s16le", "data": [1, 2, 3]}')
    assert SampleSource.from_file(inline).samples.tolist() == [1, 2, 3]

    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "f32", "data": []}')
    with pytest.raises(BadArguments):
        SampleSource.from_file(bad)


# ---------------------------------------------------------------- config


def test_fifo_config_validation():
    with pytest.raises(BadArguments):
        SoftFifo(capacity=0, refill_batch=1, refill_latency_cycles=0)
    with pytest.raises(BadArguments):
        SoftFifo(capacity=8, refill_batch=9, refill_latency_cycles=0)
    with pytest.raises(BadArguments):
        SoftFifo(capacity=8, refill_batch=0, refill_latency_cycles=0)
    with pytest.raises(BadArguments):
        SoftFifo(capacity=8, refill_batch=4, refill_latency_cycles=-1)
    with pytest.raises(BadArguments):
        HardFifo(capacity=0)
    assert HardFifo(capacity=64).threshold == 32


def test_session_rejects_empty_source_and_bad_rate():
    with pytest.raises(EmptySource):
        make_session(count=0)
    with pytest.raises(InvalidRate):
        make_session(fs_hz=0)
    with pytest.raises(InvalidRate):
        make_session(fs_hz=CLK.freq_hz + 1)


def test_pop_rejects_time_running_backwards():
    s = make_session()
    s.pop(100)
    with pytest.raises(BadArguments):
        s.pop(99)


# ---------------------------------------------------------------- delivery


def test_exactly_once_in_order_small():
    s = make_session(count=5000)
    vals, _ = drain(s, 5000, period=200)
    assert vals == SampleSource.synthetic("ramp", 5000).samples.tolist()
    assert s.delivered == 5000 and s.remaining() == 0
    with pytest.raises(SourceExhausted):
        s.pop(10**9)


def test_exactly_once_randomized_configs():
    rng = np.random.default_rng(42)
    for _ in range(6):
        count = 50_000
        hard_cap = int(rng.integers(4, 129))
        batch = int(rng.integers(1, hard_cap + 1))
        soft_cap = int(rng.integers(batch, 4 * batch + 64))
        latency = int(rng.integers(0, 5000))
        fs = int(rng.choice([10_000, 50_000, 100_000, 500_000]))
        s = make_session(
            count=count, fs_hz=fs, soft_cap=soft_cap, batch=batch,
            latency=latency, hard_cap=hard_cap,
        )
        vals, times = drain(s, count, period=CLK.freq_hz // fs)
        assert vals == SampleSource.synthetic("ramp", count).samples.tolist()
        assert times == sorted(times)
        assert s.delivered == count


def test_refill_count_matches_batch_arithmetic():
    # every sample beyond the initial hard-FIFO fill arrives in batches
    count, hard_cap, batch = 100_000, 64, 32
    s = make_session(count=count, hard_cap=hard_cap, batch=batch, latency=100)
    drain(s, count, period=200)
    assert s.refill_events == -(-(count - hard_cap) // batch)  # ceil
    assert s.underruns == 0


def test_reset_rewinds_identically():
    s = make_session(count=3000, latency=2500)
    first = drain(s, 3000, period=200)
    stats = (s.refill_events, s.stall_cycles, s.underruns)
    s.reset()
    assert s.delivered == 0 and s.refill_events == 0
    second = drain(s, 3000, period=200)
    assert second == first
    assert (s.refill_events, s.stall_cycles, s.underruns) == stats


# ---------------------------------------------------------------- underrun


def test_underrun_bound_holds_at_equality():
    fs = 100_000
    period = CLK.freq_hz // fs  # 200
    hard = HardFifo(capacity=64)
    soft_latency = int(no_underrun_bound_cycles(SoftFifo(4096, 32, 0), hard, fs, CLK))
    assert soft_latency == (64 - 32) * period
    s = make_session(fs_hz=fs, latency=soft_latency, policy=UnderrunPolicy.FATAL, count=50_000)
    _, times = drain(s, 50_000, period=period)
    assert s.underruns == 0 and s.stall_cycles == 0
    assert times == [k * period for k in range(50_000)]  # never waited


def test_underrun_bound_fails_one_cycle_past():
    fs = 100_000
    period = CLK.freq_hz // fs
    bound = (64 - 32) * period
    s = make_session(fs_hz=fs, latency=bound + 1, count=50_000)
    drain(s, 50_000, period=period)
    assert s.underruns > 0
    assert s.stall_cycles > 0


def test_fatal_policy_raises_on_underrun():
    fs = 100_000
    period = CLK.freq_hz // fs
    s = make_session(fs_hz=fs, latency=(64 - 32) * period + 1,
                     policy=UnderrunPolicy.FATAL, count=50_000)
    with pytest.raises(Underrun):
        drain(s, 50_000, period=period)


def test_stall_accounting_matches_observed_waits():
    # past the bound the chain is throughput-limited, so waits grow;
    # the counter must equal exactly what the consumer observed
    fs = 100_000
    period = CLK.freq_hz // fs
    bound = (64 - 32) * period
    s = make_session(fs_hz=fs, latency=bound + 7, count=20_000)
    waited = 0
    now = 0
    for k in range(20_000):
        asked = max(now, k * period)
        _, ready = s.pop(asked)
        waited += ready - asked
        now = ready
    assert s.underruns > 0
    assert s.stall_cycles == waited


def test_refill_on_pop_cycle_services_refill_first():
    # a refill landing exactly at the pop instant prevents the underrun
    s = make_session(count=200, hard_cap=4, batch=4, latency=2 * 200, fs_hz=100_000,
                     policy=UnderrunPolicy.FATAL)
    vals, _ = drain(s, 200, period=200)
    assert s.underruns == 0
    assert vals == SampleSource.synthetic("ramp", 200).samples.tolist()


# ---------------------------------------------------------------- flash


def test_flash_read_unwritten_is_zero():
    flash = VirtualFlash()
    assert flash.read(123, 10) == bytes(10)


def test_flash_roundtrip_random_blocks():
    rng = np.random.default_rng(9)
    flash = VirtualFlash()
    blocks = []
    for _ in range(20):
        addr = int(rng.integers(0, 2**32 - 10_000))
        data = rng.bytes(int(rng.integers(1, 10_000)))
        flash.write(addr, data)
        blocks.append((addr, data))
    addr, data = blocks[-1]
    assert flash.read(addr, len(data)) == data


def test_flash_write_crosses_page_boundaries():
    flash = VirtualFlash()
    data = bytes(range(256)) * 40  # 10240 bytes, > 2 pages
    flash.write(4096 - 100, data)
    assert flash.read(4096 - 100, len(data)) == data
    # neighbors untouched
    assert flash.read(4096 - 200, 100) == bytes(100)


def test_flash_range_checks():
    flash = VirtualFlash()
    with pytest.raises(OutOfRange):
        flash.read(2**32 - 5, 10)
    with pytest.raises(OutOfRange):
        flash.write(-1, b"x")
    with pytest.raises(OutOfRange):
        flash_transfer_cycles(flash, -1, CLK)


def test_flash_load_image(tmp_path):
    img = tmp_path / "fw.bin"
    img.write_bytes(b"\xde\xad\xbe\xef" * 100)
    flash = VirtualFlash()
    assert flash.load_image(img, base_addr=512) == 400
    assert flash.read(512, 4) == b"\xde\xad\xbe\xef"


def test_transfer_cycles_by_mode():
    virtual = VirtualFlash(mode=FlashMode.VIRTUAL)
    physical = VirtualFlash(mode=FlashMode.PHYSICAL_MODEL)
    window = 70_000  # one acquisition window: 35 000 samples, 16 bits
    assert flash_transfer_cycles(virtual, window, CLK) == round(window * CLK.freq_hz / VIRTUAL_BANDWIDTH_BPS)
    assert flash_transfer_cycles(physical, window, CLK) == round(window * CLK.freq_hz / PHYSICAL_BANDWIDTH_BPS)
    # mode is the only difference: exact bandwidth ratio
    ratio = flash_transfer_cycles(physical, window, CLK) / flash_transfer_cycles(virtual, window, CLK)
    assert ratio == VIRTUAL_BANDWIDTH_BPS / PHYSICAL_BANDWIDTH_BPS == 250.0


def test_transfer_cycles_zero_and_rounding():
    flash = VirtualFlash()
    assert flash_transfer_cycles(flash, 0, CLK) == 0
    # 1 byte at 7 MB/s under a 20 MHz clock: 20/7 cycles, rounds to 3
    assert flash_transfer_cycles(flash, 1, CLK) == 3


def test_flash_contents_never_affect_timing():
    flash = VirtualFlash()
    before = flash_transfer_cycles(flash, 4096, CLK)
    flash.write(0, bytes(4096))
    assert flash_transfer_cycles(flash, 4096, CLK) == before
