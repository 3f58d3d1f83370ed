"""RV32E base instruction set: registry, encode/decode and executable semantics.

The registry holds the 37 base instructions grouped by format class::

    B  beq bne blt bge bltu bgeu
    R  add sub sll slt sltu xor srl sra or and
    I  lb lh lw lbu lhu addi slli slti sltiu xori srli srai ori andi jalr
    S  sb sh sw
    U  lui auipc
    J  jal

fence, ecall and ebreak are deliberately absent; programs stop on the
jump-to-self halt convention (``jal x0, 0``) instead.

Immediates are held sign-extended (U-type immediates as the full shifted
32-bit value, shift immediates as the 0..31 amount).  Register values are
held as unsigned 32-bit integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Callable, Mapping

from .errors import (
    FieldOverflow,
    IllegalEncoding,
    MisalignedAccess,
    MisalignedTarget,
    RegisterOutOfRange,
)

MASK32 = 0xFFFFFFFF
NUM_REGS = 16
FORMATS = ("R", "I", "S", "B", "U", "J")
HALT_WORD = 0x0000006F  # jal x0, 0


def u32(x: int) -> int:
    return x & MASK32


def s32(x: int) -> int:
    x &= MASK32
    return x - (1 << 32) if x & 0x80000000 else x


def sext(value: int, bits: int) -> int:
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


@dataclass(frozen=True)
class InstructionSpec:
    mnemonic: str
    format: str
    opcode: int
    funct3: int | None = None
    funct7: int | None = None
    semantic_id: str = ""

    @property
    def fields(self) -> tuple[str, ...]:
        return _FORMAT_FIELDS[self.format]

    @property
    def is_control(self) -> bool:
        return self.format in ("B", "J") or self.mnemonic == "jalr"


_FORMAT_FIELDS = {
    "R": ("rd", "rs1", "rs2"),
    "I": ("rd", "rs1", "imm"),
    "S": ("rs1", "rs2", "imm"),
    "B": ("rs1", "rs2", "imm"),
    "U": ("rd", "imm"),
    "J": ("rd", "imm"),
}

SHIFT_IMM = frozenset({"slli", "srli", "srai"})
LOADS = frozenset({"lb", "lh", "lw", "lbu", "lhu"})
STORES = frozenset({"sb", "sh", "sw"})
BRANCHES = frozenset({"beq", "bne", "blt", "bge", "bltu", "bgeu"})


def _spec(mnemonic, fmt, opcode, funct3=None, funct7=None):
    return InstructionSpec(mnemonic, fmt, opcode, funct3, funct7, semantic_id=mnemonic)


_TABLE = [
    # B-type
    _spec("beq", "B", 0x63, 0), _spec("bne", "B", 0x63, 1),
    _spec("blt", "B", 0x63, 4), _spec("bge", "B", 0x63, 5),
    _spec("bltu", "B", 0x63, 6), _spec("bgeu", "B", 0x63, 7),
    # R-type
    _spec("add", "R", 0x33, 0, 0x00), _spec("sub", "R", 0x33, 0, 0x20),
    _spec("sll", "R", 0x33, 1, 0x00), _spec("slt", "R", 0x33, 2, 0x00),
    _spec("sltu", "R", 0x33, 3, 0x00), _spec("xor", "R", 0x33, 4, 0x00),
    _spec("srl", "R", 0x33, 5, 0x00), _spec("sra", "R", 0x33, 5, 0x20),
    _spec("or", "R", 0x33, 6, 0x00), _spec("and", "R", 0x33, 7, 0x00),
    # I-type
    _spec("lb", "I", 0x03, 0), _spec("lh", "I", 0x03, 1), _spec("lw", "I", 0x03, 2),
    _spec("lbu", "I", 0x03, 4), _spec("lhu", "I", 0x03, 5),
    _spec("addi", "I", 0x13, 0), _spec("slli", "I", 0x13, 1, 0x00),
    _spec("slti", "I", 0x13, 2), _spec("sltiu", "I", 0x13, 3),
    _spec("xori", "I", 0x13, 4), _spec("srli", "I", 0x13, 5, 0x00),
    _spec("srai", "I", 0x13, 5, 0x20), _spec("ori", "I", 0x13, 6),
    _spec("andi", "I", 0x13, 7), _spec("jalr", "I", 0x67, 0),
    # S-type
    _spec("sb", "S", 0x23, 0), _spec("sh", "S", 0x23, 1), _spec("sw", "S", 0x23, 2),
    # U-type
    _spec("lui", "U", 0x37), _spec("auipc", "U", 0x17),
    # J-type
    _spec("jal", "J", 0x6F),
]

REGISTRY: Mapping[str, InstructionSpec] = MappingProxyType({s.mnemonic: s for s in _TABLE})
MNEMONICS: tuple[str, ...] = tuple(sorted(REGISTRY))

_DECODE_KEYS = {(s.opcode, s.funct3, s.funct7): s for s in _TABLE}
assert len(_DECODE_KEYS) == len(_TABLE)


@dataclass(frozen=True)
class DecodedInstruction:
    spec: InstructionSpec
    rd: int | None = None
    rs1: int | None = None
    rs2: int | None = None
    imm: int | None = None
    raw: int = 0

    @property
    def mnemonic(self) -> str:
        return self.spec.mnemonic

    @property
    def format(self) -> str:
        return self.spec.format

    def reads(self) -> tuple[int, ...]:
        """Register indices read by the instruction."""
        return tuple(r for r in (self.rs1, self.rs2) if r is not None)

    def writes(self) -> int | None:
        return self.rd

    def __str__(self):
        from .asm import format_insn

        return format_insn(self)


def make(mnemonic: str, rd=None, rs1=None, rs2=None, imm=None) -> DecodedInstruction:
    """Build a checked DecodedInstruction; fields the format lacks must be omitted."""
    try:
        spec = REGISTRY[mnemonic]
    except KeyError:
        raise IllegalEncoding(f"unknown mnemonic {mnemonic!r}") from None
    given = {"rd": rd, "rs1": rs1, "rs2": rs2, "imm": imm}
    wanted = spec.fields
    vals = {}
    for name, v in given.items():
        if name in wanted:
            vals[name] = 0 if v is None else int(v)
        elif v not in (None, 0):
            raise FieldOverflow(f"{mnemonic} has no {name} field")
    insn = DecodedInstruction(spec, **vals)
    return replace(insn, raw=encode(insn))


def _imm_range(spec: InstructionSpec) -> tuple[int, int, int]:
    """(low, high, step) of the immediate's legal values."""
    if spec.mnemonic in SHIFT_IMM:
        return 0, 31, 1
    return {
        "I": (-2048, 2047, 1),
        "S": (-2048, 2047, 1),
        "B": (-4096, 4094, 2),
        "U": (-(1 << 31), (1 << 31) - 4096, 4096),
        "J": (-(1 << 20), (1 << 20) - 2, 2),
    }[spec.format]


def imm_range(mnemonic: str) -> tuple[int, int, int]:
    return _imm_range(REGISTRY[mnemonic])


def encode(insn: DecodedInstruction) -> int:
    spec = insn.spec
    word = spec.opcode
    for name in ("rd", "rs1", "rs2"):
        if name in spec.fields:
            r = getattr(insn, name)
            if r is None or not 0 <= r < NUM_REGS:
                raise RegisterOutOfRange(f"{spec.mnemonic}: {name}={r}")
    if spec.funct3 is not None:
        word |= spec.funct3 << 12
    if spec.funct7 is not None:
        word |= spec.funct7 << 25
    if "rd" in spec.fields:
        word |= insn.rd << 7
    if "rs1" in spec.fields:
        word |= insn.rs1 << 15
    if "rs2" in spec.fields:
        word |= insn.rs2 << 20
    if "imm" not in spec.fields:
        return word
    imm = insn.imm
    lo, hi, step = _imm_range(spec)
    if imm is None or not lo <= imm <= hi or imm % step:
        raise FieldOverflow(f"{spec.mnemonic}: immediate {imm} outside [{lo}, {hi}] step {step}")
    fmt = spec.format
    if spec.mnemonic in SHIFT_IMM:
        word |= imm << 20
    elif fmt == "I":
        word |= (imm & 0xFFF) << 20
    elif fmt == "S":
        word |= ((imm >> 5) & 0x7F) << 25 | (imm & 0x1F) << 7
    elif fmt == "B":
        word |= ((imm >> 12) & 1) << 31 | ((imm >> 5) & 0x3F) << 25
        word |= ((imm >> 1) & 0xF) << 8 | ((imm >> 11) & 1) << 7
    elif fmt == "U":
        word |= imm & 0xFFFFF000
    else:  # J
        word |= ((imm >> 20) & 1) << 31 | ((imm >> 1) & 0x3FF) << 21
        word |= ((imm >> 11) & 1) << 20 | ((imm >> 12) & 0xFF) << 12
    return word & MASK32


def _lookup(word: int) -> InstructionSpec | None:
    op = word & 0x7F
    f3 = (word >> 12) & 7
    f7 = word >> 25
    return (
        _DECODE_KEYS.get((op, f3, f7))
        or _DECODE_KEYS.get((op, f3, None))
        or _DECODE_KEYS.get((op, None, None))
    )


def decode(word: int) -> DecodedInstruction:
    word &= MASK32
    spec = _lookup(word)
    if spec is None:
        raise IllegalEncoding(f"no instruction encodes as 0x{word:08x}")
    fmt = spec.format
    regs = {"rd": (word >> 7) & 0x1F, "rs1": (word >> 15) & 0x1F, "rs2": (word >> 20) & 0x1F}
    vals = {}
    for name in ("rd", "rs1", "rs2"):
        if name in spec.fields:
            if regs[name] >= NUM_REGS:
                raise RegisterOutOfRange(f"0x{word:08x}: {name}=x{regs[name]} outside RV32E")
            vals[name] = regs[name]
    if spec.mnemonic in SHIFT_IMM:
        imm = (word >> 20) & 0x1F
    elif fmt == "I":
        imm = sext(word >> 20, 12)
    elif fmt == "S":
        imm = sext((word >> 25) << 5 | (word >> 7) & 0x1F, 12)
    elif fmt == "B":
        imm = sext(
            (word >> 31) << 12 | ((word >> 7) & 1) << 11 | ((word >> 25) & 0x3F) << 5 | ((word >> 8) & 0xF) << 1,
            13,
        )
    elif fmt == "U":
        imm = s32(word & 0xFFFFF000)
    elif fmt == "J":
        imm = sext(
            (word >> 31) << 20 | ((word >> 12) & 0xFF) << 12 | ((word >> 20) & 1) << 11 | ((word >> 21) & 0x3FF) << 1,
            21,
        )
    else:
        imm = None
    if imm is not None:
        vals["imm"] = imm
    return DecodedInstruction(spec, raw=word, **vals)


# ---------------------------------------------------------------------------
# semantics


@dataclass(frozen=True)
class Effect:
    """Architectural consequences of one instruction.

    ``rd`` records write intent even when it names x0; the register file
    drops that write.  ``store`` is (address, size in bytes, value).
    """

    next_pc: int
    taken: bool = False
    rd: int | None = None
    rd_value: int = 0
    load_addr: int | None = None
    store: tuple[int, int, int] | None = None


ReadFn = Callable[[int, int], int]

_ALU = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "sll": lambda a, b: a << (b & 31),
    "slt": lambda a, b: int(s32(a) < s32(b)),
    "sltu": lambda a, b: int(a < b),
    "xor": lambda a, b: a ^ b,
    "srl": lambda a, b: a >> (b & 31),
    "sra": lambda a, b: s32(a) >> (b & 31),
    "or": lambda a, b: a | b,
    "and": lambda a, b: a & b,
}
_ALU_IMM = {
    "addi": "add", "slti": "slt", "sltiu": "sltu", "xori": "xor",
    "ori": "or", "andi": "and", "slli": "sll", "srli": "srl", "srai": "sra",
}
_BRANCH = {
    "beq": lambda a, b: a == b,
    "bne": lambda a, b: a != b,
    "blt": lambda a, b: s32(a) < s32(b),
    "bge": lambda a, b: s32(a) >= s32(b),
    "bltu": lambda a, b: a < b,
    "bgeu": lambda a, b: a >= b,
}
_LOAD = {"lb": (1, True), "lh": (2, True), "lw": (4, False), "lbu": (1, False), "lhu": (2, False)}
_STORE = {"sb": 1, "sh": 2, "sw": 4}


def effect(insn: DecodedInstruction, pc: int, rs1_value: int = 0, rs2_value: int = 0,
           read: ReadFn | None = None) -> Effect:
    """Pure semantic function of one instruction.

    ``read(addr, size)`` supplies memory for loads.  Raises MisalignedAccess
    or MisalignedTarget for the trapping cases.
    """
    m = insn.spec.mnemonic
    a, b = rs1_value, rs2_value
    seq = u32(pc + 4)
    if m in _ALU:
        return Effect(seq, rd=insn.rd, rd_value=u32(_ALU[m](a, b)))
    if m in _ALU_IMM:
        return Effect(seq, rd=insn.rd, rd_value=u32(_ALU[_ALU_IMM[m]](a, u32(insn.imm))))
    if m in _BRANCH:
        if not _BRANCH[m](a, b):
            return Effect(seq)
        target = u32(pc + insn.imm)
        if target & 3:
            raise MisalignedTarget(f"{m} target 0x{target:08x}")
        return Effect(target, taken=True)
    if m in _LOAD:
        size, signed = _LOAD[m]
        addr = u32(a + insn.imm)
        if addr % size:
            raise MisalignedAccess(f"{m} at 0x{addr:08x}")
        value = read(addr, size) if read else 0
        if signed:
            value = u32(sext(value, 8 * size))
        return Effect(seq, rd=insn.rd, rd_value=value, load_addr=addr)
    if m in _STORE:
        size = _STORE[m]
        addr = u32(a + insn.imm)
        if addr % size:
            raise MisalignedAccess(f"{m} at 0x{addr:08x}")
        return Effect(seq, store=(addr, size, b & ((1 << (8 * size)) - 1)))
    if m == "lui":
        return Effect(seq, rd=insn.rd, rd_value=u32(insn.imm))
    if m == "auipc":
        return Effect(seq, rd=insn.rd, rd_value=u32(pc + insn.imm))
    if m == "jal":
        target = u32(pc + insn.imm)
        if target & 3:
            raise MisalignedTarget(f"jal target 0x{target:08x}")
        return Effect(target, taken=True, rd=insn.rd, rd_value=seq)
    if m == "jalr":
        target = u32(a + insn.imm) & ~1
        if target & 3:
            raise MisalignedTarget(f"jalr target 0x{target:08x}")
        return Effect(target, taken=True, rd=insn.rd, rd_value=seq)
    raise IllegalEncoding(m)  # pragma: no cover - registry and table agree


# ---------------------------------------------------------------------------
# architectural state


class Memory(Mapping):
    """Sparse little-endian memory, stored as aligned word address -> word.

    Instances are treated as immutable; ``write`` returns a new Memory.
    """

    __slots__ = ("_words",)

    def __init__(self, words: Mapping[int, int] | None = None):
        self._words = dict(words or {})

    @classmethod
    def from_bytes(cls, base: int, data: bytes) -> Memory:
        mem = {}
        for i, byte in enumerate(data):
            addr = base + i
            w = addr & ~3
            mem[w] = mem.get(w, 0) | byte << (8 * (addr & 3))
        return cls(mem)

    def __getitem__(self, addr):
        return self._words[addr]

    def __iter__(self):
        return iter(self._words)

    def __len__(self):
        return len(self._words)

    def __eq__(self, other):
        if not isinstance(other, Memory):
            return NotImplemented
        return {k: v for k, v in self._words.items() if v} == {k: v for k, v in other._words.items() if v}

    def __hash__(self):
        return hash(frozenset((k, v) for k, v in self._words.items() if v))

    def __repr__(self):
        return f"Memory({len(self._words)} words)"

    def word(self, addr: int) -> int:
        return self._words.get(addr & ~3 & MASK32, 0)

    def read(self, addr: int, size: int) -> int:
        shift = 8 * (addr & 3)
        return (self.word(addr) >> shift) & ((1 << (8 * size)) - 1)

    def write(self, addr: int, size: int, value: int) -> Memory:
        words = dict(self._words)
        store_into(words, addr, size, value)
        return Memory(words)

    def as_dict(self) -> dict[int, int]:
        return dict(self._words)


def store_into(words: dict, addr: int, size: int, value: int) -> None:
    """In-place little-endian store into a word dict (caller checks alignment)."""
    w = addr & ~3 & MASK32
    shift = 8 * (addr & 3)
    mask = ((1 << (8 * size)) - 1) << shift
    words[w] = (words.get(w, 0) & ~mask | (value << shift) & mask) & MASK32


RUNNING, HALTED, TRAPPED = "running", "halted", "trapped"


@dataclass(frozen=True)
class MachineState:
    pc: int = 0
    regs: tuple[int, ...] = (0,) * NUM_REGS
    mem: Memory = field(default_factory=Memory)
    status: str = RUNNING
    trap_reason: str | None = None

    def __post_init__(self):
        if len(self.regs) != NUM_REGS:
            raise ValueError("RV32E has 16 registers")
        regs = tuple(u32(r) for r in self.regs)
        if regs[0] != 0 or regs != self.regs:
            object.__setattr__(self, "regs", (0,) + regs[1:])

    def with_regs(self, **named: int) -> MachineState:
        """``state.with_regs(x2=5, x3=7)``"""
        regs = list(self.regs)
        for name, value in named.items():
            regs[int(name.lstrip("x"))] = value
        return replace(self, regs=tuple(regs))


def execute(insn: DecodedInstruction, state: MachineState) -> MachineState:
    """Successor state of ``state`` after ``insn``; a pure function."""
    if state.status != RUNNING:
        raise ValueError(f"cannot execute in status {state.status!r}")
    rs1 = state.regs[insn.rs1] if insn.rs1 is not None else 0
    rs2 = state.regs[insn.rs2] if insn.rs2 is not None else 0
    eff = effect(insn, state.pc, rs1, rs2, state.mem.read)
    return apply_effect(state, eff)


def apply_effect(state: MachineState, eff: Effect) -> MachineState:
    regs = state.regs
    if eff.rd:
        regs = regs[: eff.rd] + (eff.rd_value,) + regs[eff.rd + 1:]
    mem = state.mem
    if eff.store is not None:
        mem = mem.write(*eff.store)
    return replace(state, pc=eff.next_pc, regs=regs, mem=mem)
