import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risp import asm, isa
from risp.errors import FieldOverflow, IllegalEncoding, MisalignedAccess, MisalignedTarget, RegisterOutOfRange

REG = st.integers(0, 15)


def random_insn(rng: random.Random, mnemonic: str) -> isa.DecodedInstruction:
    spec = isa.REGISTRY[mnemonic]
    kw = {f: rng.randrange(16) for f in ("rd", "rs1", "rs2") if f in spec.fields}
    if "imm" in spec.fields:
        lo, hi, step = isa.imm_range(mnemonic)
        kw["imm"] = rng.randrange(lo, hi + 1, step)
    return isa.make(mnemonic, **kw)


def test_registry_shape():
    formats = [s.format for s in isa.REGISTRY.values()]
    assert len(isa.REGISTRY) == 37
    assert {f: formats.count(f) for f in "BRISUJ"} == {"B": 6, "R": 10, "I": 15, "S": 3, "U": 2, "J": 1}
    keys = {(s.opcode, s.funct3, s.funct7) for s in isa.REGISTRY.values()}
    assert len(keys) == 37


@pytest.mark.parametrize("word,text", [
    (0x00000013, "addi x0, x0, 0"),
    (0x003100B3, "add x1, x2, x3"),
    (0x00000063, "beq x0, x0, 0"),
])
def test_decode_examples(word, text):
    d = isa.decode(word)
    assert str(d) == text
    assert isa.encode(d) == word


def test_decode_errors():
    with pytest.raises(IllegalEncoding):
        isa.decode(0xFFFFFFFF)
    with pytest.raises(RegisterOutOfRange):
        isa.decode(0x00080813)  # addi x16, x16, 0


def test_encode_examples():
    assert isa.make("addi", rd=0, rs1=0, imm=0).raw == 0x13
    assert isa.make("jal", rd=0, imm=0).raw == isa.HALT_WORD
    with pytest.raises(FieldOverflow):
        isa.make("addi", rd=1, rs1=1, imm=4096)
    with pytest.raises(FieldOverflow):
        isa.make("beq", rs1=1, rs2=1, imm=3)


@pytest.mark.parametrize("mnemonic", sorted(isa.REGISTRY))
def test_round_trip_per_mnemonic(mnemonic):
    rng = random.Random(mnemonic)
    for _ in range(300):
        d = random_insn(rng, mnemonic)
        back = isa.decode(d.raw)
        assert back == d
        assert isa.encode(back) == d.raw


@settings(max_examples=300)
@given(st.sampled_from(sorted(isa.REGISTRY)), st.randoms(use_true_random=False))
def test_round_trip_property(mnemonic, rng):
    d = random_insn(rng, mnemonic)
    assert isa.decode(isa.encode(d)) == d
    assert asm.parse_insn(str(d)) == d


def _state(**regs):
    return isa.MachineState().with_regs(**regs)


def _exec(text, state):
    return isa.execute(asm.parse_insn(text), state)


def test_execute_examples():
    assert _exec("add x1, x2, x3", _state(x2=2, x3=3)).regs[1] == 5
    assert _exec("srai x1, x2, 4", _state(x2=0x80000000)).regs[1] == 0xF8000000
    assert _exec("sra x1, x2, x3", _state(x2=0x80000000, x3=4)).regs[1] == 0xF8000000
    assert _exec("sltu x1, x2, x3", _state(x2=0xFFFFFFFF, x3=1)).regs[1] == 0
    assert _exec("slt x1, x2, x3", _state(x2=0xFFFFFFFF, x3=1)).regs[1] == 1


def test_memory_semantics():
    s = _state(x2=0x100, x3=0x80FF)
    s = _exec("sw x3, 0(x2)", s)
    s = _exec("sb x3, 5(x2)", s)
    assert s.mem.word(0x100) == 0x80FF
    assert s.mem.word(0x104) == 0xFF00
    assert _exec("lb x1, 0(x2)", s).regs[1] == 0xFFFFFFFF
    assert _exec("lbu x1, 0(x2)", s).regs[1] == 0xFF
    assert _exec("lh x1, 0(x2)", s).regs[1] == 0xFFFF80FF
    assert _exec("lhu x1, 0(x2)", s).regs[1] == 0x80FF
    with pytest.raises(MisalignedAccess):
        _exec("lw x1, 2(x2)", s)
    with pytest.raises(MisalignedAccess):
        _exec("sh x1, 1(x2)", s)
    assert _exec("lb x1, 3(x2)", s).regs[1] == 0  # byte accesses never trap


def test_control_flow():
    s = isa.MachineState(pc=0x10, regs=_state(x1=0x40).regs)
    j = _exec("jal x1, -8", s)
    assert (j.pc, j.regs[1]) == (0x8, 0x14)
    r = _exec("jalr x2, 5(x1)", s)  # low bit cleared
    assert (r.pc, r.regs[2]) == (0x44, 0x14)
    with pytest.raises(MisalignedTarget):
        _exec("jalr x2, 2(x1)", s)
    assert _exec("auipc x3, 0x1", s).regs[3] == 0x1010


@given(st.integers(0, 31), st.integers(0, isa.MASK32))
def test_shift_oracle(sh, a):
    bits = [(a >> i) & 1 for i in range(32)]
    sll = sum(bits[i - sh] << i for i in range(sh, 32))
    srl = sum(bits[i + sh] << i for i in range(32 - sh))
    sra = srl | sum(bits[31] << i for i in range(32 - sh, 32))
    s = _state(x2=a, x3=sh)
    assert _exec("sll x1, x2, x3", s).regs[1] == sll
    assert _exec("srl x1, x2, x3", s).regs[1] == srl
    assert _exec("sra x1, x2, x3", s).regs[1] == sra
    assert _exec("srli x1, x2, %d" % sh, s).regs[1] == srl


@given(st.integers(0, isa.MASK32), st.integers(0, isa.MASK32))
def test_branch_symmetry(a, b):
    s = isa.MachineState(pc=0x100, regs=_state(x1=a, x2=b).regs)
    taken = {m: _exec(f"{m} x1, x2, 64", s).pc == 0x140 for m in isa.BRANCHES}
    assert taken["beq"] != taken["bne"]
    assert taken["blt"] != taken["bge"]
    assert taken["bltu"] != taken["bgeu"]


@given(st.sampled_from(sorted(m for m, s in isa.REGISTRY.items() if "rd" in s.fields)), st.randoms())
def test_x0_sink(mnemonic, rng):
    d = random_insn(rng, mnemonic)
    d = isa.make(mnemonic, rd=0, **{k: getattr(d, k) for k in ("rs1", "rs2", "imm")
                                     if k in d.spec.fields and k != "rd"})
    regs = (0,) + tuple(rng.getrandbits(32) & ~3 for _ in range(15))
    s = isa.MachineState(pc=0x1000, regs=regs)
    try:
        out = isa.execute(d, s)
    except (MisalignedAccess, MisalignedTarget):
        return
    assert out.regs == s.regs
    assert isa.execute(d, s) == out  # determinism


def test_capstone_spot_check():
    capstone = pytest.importorskip("capstone")
    md = capstone.Cs(capstone.CS_ARCH_RISCV, capstone.CS_MODE_RISCV32)
    rng = random.Random(7)
    names = sorted(isa.REGISTRY)
    for i in range(100):
        d = random_insn(rng, names[i % len(names)])
        got = list(md.disasm(d.raw.to_bytes(4, "little"), 0x1000))
        assert len(got) == 1, d
        assert got[0].mnemonic.split(".")[0] in (d.mnemonic, *_ALIASES.get(d.mnemonic, ())), (d, got[0].mnemonic)


# capstone prints pseudo-instructions for some encodings
_ALIASES = {"addi": ("mv", "li", "nop"), "jal": ("j", "jal"), "jalr": ("jr", "ret", "jalr"), "xori": ("not",),
            "sub": ("neg",), "sltiu": ("seqz",), "sltu": ("snez",), "slt": ("sltz", "sgtz"),
            "beq": ("beqz",), "bne": ("bnez",), "blt": ("bltz", "bgtz"), "bge": ("bgez", "blez"),
            "add": ("add",), "bltu": ("bgtu",), "bgeu": ("bleu",)}
