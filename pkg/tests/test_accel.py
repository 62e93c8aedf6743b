"""Accelerator lab: mailbox protocol, offload handshake, stages."""

from __future__ import annotations

import numpy as np
import pytest

from femu.accel import (
    CONFIG_WORDS,
    Accelerator,
    AcceleratorSpec,
    ConvOperands,
    FftOperands,
    Mailbox,
    MailboxLayout,
    MailboxStatus,
    MatMulOperands,
    Platform,
    Stage,
    input_words,
    load_accelerator,
    offload,
    operands_to_json,
    output_words,
    parse_operands,
    register_accelerator,
    transfer_words,
)
from femu.control import DATA_DIR
from femu.errors import (
    AcceleratorError,
    BadArguments,
    DuplicateName,
    IncompleteRtlSpec,
    MailboxBusy,
    MailboxProtocolError,
    ShapeMismatch,
    UnknownKernel,
    UnsupportedKernel,
)
from femu.kernels import conv2d_i32, fft512_q31, matmul_i32
from femu.model import DEFAULT_PLATFORM, DomainPower
from helpers import rand_i32

RTL_SPEC = load_accelerator(DATA_DIR / "accels" / "cgra_rtl.json")
SW_SPEC = load_accelerator(DATA_DIR / "accels" / "cgra_sw.json")


def mm_ops(rng) -> MatMulOperands:
    return MatMulOperands(a=rand_i32(rng, (121, 16)), b=rand_i32(rng, (16, 4)))


def conv_ops(rng) -> ConvOperands:
    return ConvOperands(x=rand_i32(rng, (16, 16, 3)), w=rand_i32(rng, (8, 3, 3, 3)))


def fft_ops(rng) -> FftOperands:
    return FftOperands(re=rand_i32(rng, 512), im=rand_i32(rng, 512))


# ---------------------------------------------------------------- sizing


def test_transfer_word_arithmetic():
    assert transfer_words("mm") == CONFIG_WORDS + (121 * 16 + 16 * 4) + 121 * 4 == 2492
    assert transfer_words("conv") == CONFIG_WORDS + (16 * 16 * 3 + 8 * 27) + 14 * 14 * 8 == 2560
    assert transfer_words("fft") == CONFIG_WORDS + 2 * 512 + 2 * 512 == 2056
    for k in ("mm", "conv", "fft"):
        assert transfer_words(k) == CONFIG_WORDS + input_words(k) + output_words(k)
    # kernels without a canonical layout cost the config block only
    assert transfer_words("sort") == CONFIG_WORDS


def test_mailbox_layout_validation():
    with pytest.raises(BadArguments):
        MailboxLayout(config_base=0)  # collides with status word
    with pytest.raises(BadArguments):
        MailboxLayout(input_base=10, input_words=0)
    layout = MailboxLayout()
    assert layout.total_words == 2016 + 1568


# ---------------------------------------------------------------- mailbox


def test_status_protocol_happy_path():
    mb = Mailbox(MailboxLayout())
    assert mb.status is MailboxStatus.IDLE
    mb.write_config(1, (121, 16, 4, 0))
    mb.write_input(np.zeros(4, dtype=np.int32))
    mb.ring_doorbell()
    assert mb.status is MailboxStatus.DOORBELL
    mb.accept()
    assert mb.status is MailboxStatus.BUSY
    mb.finish(np.zeros(2, dtype=np.int32))
    assert mb.status is MailboxStatus.DONE
    mb.acknowledge()
    assert mb.status is MailboxStatus.IDLE


def test_illegal_transitions_rejected():
    mb = Mailbox(MailboxLayout())
    with pytest.raises(MailboxProtocolError):
        mb.accept()  # IDLE -> BUSY skips the doorbell
    with pytest.raises(MailboxProtocolError):
        mb.finish(np.zeros(1, dtype=np.int32))
    with pytest.raises(MailboxProtocolError):
        mb.read_output(1)
    mb.ring_doorbell()
    with pytest.raises(MailboxBusy):
        mb.ring_doorbell()
    with pytest.raises(MailboxBusy):
        mb.write_config(1, (0, 0, 0, 0))
    with pytest.raises(MailboxBusy):
        mb.write_input(np.zeros(1, dtype=np.int32))


def test_error_state_must_be_acknowledged():
    mb = Mailbox(MailboxLayout())
    mb.ring_doorbell()
    mb.accept()
    mb.fail("boom")
    assert mb.status is MailboxStatus.ERROR and mb.error_detail == "boom"
    with pytest.raises(MailboxProtocolError):
        mb.read_output(1)
    mb.acknowledge()
    assert mb.status is MailboxStatus.IDLE


def test_region_overflow_checked():
    mb = Mailbox(MailboxLayout(input_words=4, output_base=20, output_words=4))
    with pytest.raises(ShapeMismatch):
        mb.write_input(np.zeros(5, dtype=np.int32))


def test_doorbell_without_config_fails_the_job():
    accel = Accelerator(RTL_SPEC)
    accel.mailbox.ring_doorbell()
    accel.service()  # kernel code 0 in the config region
    assert accel.mailbox.status is MailboxStatus.ERROR
    assert "kernel code 0" in accel.mailbox.error_detail


def test_service_requires_doorbell():
    accel = Accelerator(RTL_SPEC)
    with pytest.raises(MailboxProtocolError):
        accel.service()


def test_dimension_words_checked_by_device():
    accel = Accelerator(RTL_SPEC)
    mb = accel.mailbox
    mb.write_config(1, (120, 16, 4, 0))  # wrong row count for mm
    mb.ring_doorbell()
    accel.service()
    assert mb.status is MailboxStatus.ERROR
    assert "dimension words" in mb.error_detail


# ---------------------------------------------------------------- offload


def test_offload_results_equal_direct_calls():
    rng = np.random.default_rng(21)
    accel = Accelerator(RTL_SPEC)
    for _ in range(3):
        ops = mm_ops(rng)
        res = offload(accel, ops)
        np.testing.assert_array_equal(res.output, matmul_i32(ops.a, ops.b))

        ops = conv_ops(rng)
        res = offload(accel, ops)
        np.testing.assert_array_equal(res.output, conv2d_i32(ops.x, ops.w))

        ops = fft_ops(rng)
        res = offload(accel, ops)
        fr, fi = fft512_q31(ops.re, ops.im)
        np.testing.assert_array_equal(res.output[0], fr)
        np.testing.assert_array_equal(res.output[1], fi)


def test_stage_equivalence_software_model_vs_rtl():
    rng = np.random.default_rng(22)
    sw = Accelerator(SW_SPEC)
    rtl = Accelerator(RTL_SPEC)
    for make in (mm_ops, conv_ops, fft_ops):
        ops = make(rng)
        a = offload(sw, ops).output
        b = offload(rtl, ops).output
        if isinstance(a, tuple):
            np.testing.assert_array_equal(a[0], b[0])
            np.testing.assert_array_equal(a[1], b[1])
        else:
            np.testing.assert_array_equal(a, b)


def test_offload_cycle_charges():
    rng = np.random.default_rng(23)
    rtl = Accelerator(RTL_SPEC)
    res = offload(rtl, mm_ops(rng))
    assert res.host_cycles == 2492
    assert res.accel_cycles == RTL_SPEC.timing["mm"] == 7508
    assert res.total_cycles == 10_000

    sw = Accelerator(SW_SPEC)
    res = offload(sw, conv_ops(rng))
    assert res.host_cycles == 2560
    assert res.accel_cycles == 0  # functional model costs no device time


def test_offload_leaves_mailbox_idle_for_reuse():
    rng = np.random.default_rng(24)
    accel = Accelerator(RTL_SPEC)
    first = offload(accel, mm_ops(rng))
    assert accel.mailbox.status is MailboxStatus.IDLE
    second = offload(accel, mm_ops(rng))
    assert second.host_cycles == first.host_cycles


def test_offload_rejects_unsupported_kernel_and_bad_shapes():
    rng = np.random.default_rng(25)
    narrow = AcceleratorSpec(
        name="fft_only",
        stage=Stage.RTL_STAGE,
        kernels=("fft",),
        timing={"fft": 100},
        power=DomainPower(1.0, 1.0, 1.0),
    )
    accel = Accelerator(narrow)
    with pytest.raises(UnsupportedKernel):
        offload(accel, mm_ops(rng))
    wrong = MatMulOperands(a=rand_i32(rng, (2, 2)), b=rand_i32(rng, (2, 2)))
    with pytest.raises(ShapeMismatch):
        offload(Accelerator(RTL_SPEC), wrong)


def test_offload_busy_mailbox_rejected():
    rng = np.random.default_rng(26)
    accel = Accelerator(RTL_SPEC)
    accel.mailbox.ring_doorbell()
    with pytest.raises(MailboxBusy):
        offload(accel, mm_ops(rng))


def test_extra_claimed_kernels_do_not_break_known_ones():
    rng = np.random.default_rng(27)
    spec = AcceleratorSpec(name="wide", stage=Stage.SOFTWARE_MODEL, kernels=("mm", "sort"))
    accel = Accelerator(spec)
    mm = mm_ops(rng)
    res = offload(accel, mm)
    np.testing.assert_array_equal(res.output, matmul_i32(mm.a, mm.b))


def test_doorbell_error_path_through_offload():
    accel = Accelerator(RTL_SPEC)
    # corrupt the handshake by hand, then check offload reports it
    accel.mailbox.write_config(9, (0, 0, 0, 0))
    accel.mailbox.ring_doorbell()
    accel.service()
    assert accel.mailbox.status is MailboxStatus.ERROR
    accel.mailbox.acknowledge()
    res = offload(accel, mm_ops(np.random.default_rng(28)))
    assert res.host_cycles == 2492


def test_unknown_kernel_code_raises_accelerator_error():
    spec = AcceleratorSpec(name="sw", stage=Stage.SOFTWARE_MODEL, kernels=("mm",))
    accel = Accelerator(spec)
    mb = accel.mailbox
    mb.write_config(3, (512, 0, 0, 0))  # fft code, not in spec.kernels
    mb.ring_doorbell()
    accel.service()
    assert mb.status is MailboxStatus.ERROR


# ---------------------------------------------------------------- specs


def test_rtl_spec_requires_timing_and_power():
    with pytest.raises(IncompleteRtlSpec):
        AcceleratorSpec(name="x", stage=Stage.RTL_STAGE, kernels=("mm",))
    with pytest.raises(IncompleteRtlSpec):
        AcceleratorSpec(
            name="x", stage=Stage.RTL_STAGE, kernels=("mm", "fft"),
            timing={"mm": 1}, power=DomainPower(1.0, 1.0, 1.0),
        )


def test_software_spec_needs_no_annotations():
    spec = AcceleratorSpec(name="x", stage=Stage.SOFTWARE_MODEL, kernels=("mm",))
    assert spec.timing is None and spec.power is None


def test_energy_contribution_requires_power():
    from femu.model import EnergyModel

    host = EnergyModel("t", 0.8, 20_000_000, {"cpu": DomainPower(1.0, 1.0, 1.0)})
    frag = RTL_SPEC.energy_contribution(host)
    assert set(frag.domains) == {"cgra"}
    with pytest.raises(IncompleteRtlSpec):
        SW_SPEC.energy_contribution(host)


def test_register_duplicate_rejected():
    platform = Platform(domains=DEFAULT_PLATFORM)
    platform = register_accelerator(platform, RTL_SPEC)
    with pytest.raises(DuplicateName):
        register_accelerator(platform, RTL_SPEC)


def test_operands_json_roundtrip():
    rng = np.random.default_rng(29)
    for make in (mm_ops, conv_ops, fft_ops):
        ops = make(rng)
        again = parse_operands(operands_to_json(ops))
        assert type(again) is type(ops)
        assert operands_to_json(again) == operands_to_json(ops)
    with pytest.raises(UnknownKernel):
        parse_operands({"kernel": "sort"})
    with pytest.raises(BadArguments):
        parse_operands({"kernel": "mm", "a": [[1]]})
