"""Interface-level behavioural models of the hardware blocks.

Each model mirrors its Verilog template: full decode on the raw word,
immediate slicing, the datapath, then the trap/enable gating.  A model can
be evaluated with a named *mutation* switched on; :func:`mutation_smoke`
uses these to check that a vector set is strong enough to notice a broken
block.
"""

from __future__ import annotations

from dataclasses import dataclass

from .. import isa
from ..errors import SurvivingMutant
from .library import OUTPUT_NAMES, HardwareBlock
from .vectors import MIN_VECTORS, TestVector, trap_outputs

M = isa.MASK32

_ARITH = {
    "add": lambda a, b, sh: a + b,
    "sub": lambda a, b, sh: a - b,
    "sll": lambda a, b, sh: a << (b & sh),
    "slt": lambda a, b, sh: int(isa.s32(a) < isa.s32(b)),
    "sltu": lambda a, b, sh: int(a < b),
    "xor": lambda a, b, sh: a ^ b,
    "srl": lambda a, b, sh: a >> (b & sh),
    "sra": lambda a, b, sh: isa.s32(a) >> (b & sh),
    "or": lambda a, b, sh: a | b,
    "and": lambda a, b, sh: a & b,
}
_IMM_OP = {"addi": "add", "slti": "slt", "sltiu": "sltu", "xori": "xor", "ori": "or",
           "andi": "and", "slli": "sll", "srli": "srl", "srai": "sra"}
_CMP = {
    "beq": lambda a, b: a == b,
    "bne": lambda a, b: a != b,
    "blt": lambda a, b: isa.s32(a) < isa.s32(b),
    "bge": lambda a, b: isa.s32(a) >= isa.s32(b),
    "bltu": lambda a, b: a < b,
    "bgeu": lambda a, b: a >= b,
}
_LOAD_SHAPE = {"lb": (1, True), "lh": (2, True), "lw": (4, False), "lbu": (1, False), "lhu": (2, False)}
_STORE_SIZE = {"sb": 1, "sh": 2, "sw": 4}

# what "op_swap" turns each operation into
OP_SWAP = {
    "add": "sub", "sub": "add", "sll": "srl", "slt": "sltu", "sltu": "slt", "xor": "or",
    "srl": "sra", "sra": "srl", "or": "xor", "and": "or",
    "addi": "sub", "slti": "sltu", "sltiu": "slt", "xori": "or", "ori": "xor", "andi": "or",
    "slli": "srl", "srli": "sra", "srai": "srl",
    "lb": "lbu", "lbu": "lb", "lh": "lhu", "lhu": "lh", "lw": "lhu",
    "sb": "sh", "sh": "sb", "sw": "sh",
    "beq": "bge", "bne": "blt", "blt": "bltu", "bltu": "blt", "bge": "bgeu", "bgeu": "bge",
    "lui": "auipc", "auipc": "lui", "jal": "link_pc", "jalr": "pc_relative",
}

COMMON_MUTATIONS = ("op_swap", "result_bit_flip", "result_msb_flip", "enable_stuck_0",
                    "no_reg_check", "operand_b_zero")


def catalog(mnemonic: str) -> tuple[str, ...]:
    """Mutation ids applicable to a block."""
    extra = []
    if mnemonic in ("sll", "srl", "sra"):
        extra.append("shift_amount_6bit")
    if mnemonic in ("slt", "sltu", "slti", "sltiu") or mnemonic in isa.BRANCHES:
        extra.append("cmp_invert")
    if mnemonic in ("lh", "lhu", "lw", "sh", "sw", "jal", "jalr") or mnemonic in isa.BRANCHES:
        extra.append("no_align_check")
    if mnemonic in ("lb", "lbu", "lh", "lhu", "sb", "sh"):
        extra.append("lane_ignored")
    return COMMON_MUTATIONS + tuple(extra)


def _imm(fmt: str, w: int, shift: bool) -> int:
    if shift:
        return (w >> 20) & 31
    if fmt == "I":
        return isa.sext(w >> 20, 12)
    if fmt == "S":
        return isa.sext((w >> 25) << 5 | (w >> 7) & 31, 12)
    if fmt == "B":
        v = (w >> 31) << 12 | ((w >> 7) & 1) << 11 | ((w >> 25) & 63) << 5 | ((w >> 8) & 15) << 1
        return isa.sext(v, 13)
    if fmt == "U":
        return w & 0xFFFFF000
    if fmt == "J":
        v = (w >> 31) << 20 | ((w >> 12) & 255) << 12 | ((w >> 20) & 1) << 11 | ((w >> 21) & 1023) << 1
        return isa.sext(v, 21)
    return 0


def evaluate(mnemonic: str, s: dict, mutation: str | None = None) -> dict:
    """Outputs of block ``mnemonic`` for stimulus ``s`` (optionally mutated)."""
    spec = isa.REGISTRY[mnemonic]
    mut = mutation
    fmt = spec.format
    w, pc, a, b, rdata = s["insn"], s["pc"], s["rs1_value"], s["rs2_value"], s["mem_rdata"]

    hit = (w & 0x7F) == spec.opcode
    if spec.funct3 is not None:
        hit = hit and (w >> 12) & 7 == spec.funct3
    if spec.funct7 is not None:
        hit = hit and (w >> 25) == spec.funct7
    regs_ok = True
    for name, bit in (("rd", 11), ("rs1", 19), ("rs2", 24)):
        if name in spec.fields and (w >> bit) & 1:
            regs_ok = False
    if mut == "no_reg_check":
        regs_ok = True

    imm = _imm(fmt, w, mnemonic in isa.SHIFT_IMM)
    if mut == "operand_b_zero":
        if fmt in ("R", "B"):
            b = 0
        else:
            imm = 0
    op = OP_SWAP[mnemonic] if mut == "op_swap" else mnemonic
    seq = (pc + 4) & M
    fault = False
    result = None  # rd_value for writers
    target = None
    cond = False
    wdata = be = addr = None

    if fmt == "R" or mnemonic in _IMM_OP:
        base = _IMM_OP.get(op, op)
        x = b if fmt == "R" else imm & M
        result = _ARITH[base](a, x, 63 if mut == "shift_amount_6bit" else 31) & M
        if mut == "cmp_invert":
            result ^= 1
    elif mnemonic in _LOAD_SHAPE:
        addr = (a + imm) & M
        size = _LOAD_SHAPE[mnemonic][0]
        fault = addr % size != 0 and mut != "no_align_check"
        lane = 0 if mut == "lane_ignored" else addr & 3
        osize, signed = _LOAD_SHAPE[op]
        raw = (rdata >> 8 * lane) & ((1 << 8 * osize) - 1)
        result = (isa.sext(raw, 8 * osize) if signed else raw) & M
    elif mnemonic in _STORE_SIZE:
        addr = (a + imm) & M
        size = _STORE_SIZE[mnemonic]
        fault = addr % size != 0 and mut != "no_align_check"
        lane = 0 if mut == "lane_ignored" else addr & 3
        osize = _STORE_SIZE[op]
        wdata = ((b & ((1 << 8 * osize) - 1)) << 8 * lane) & M
        be = (((1 << osize) - 1) << lane) & 0xF
    elif mnemonic in _CMP:
        cond = _CMP[op](a, b)
        if mut == "cmp_invert":
            cond = not cond
        target = (pc + imm) & M
        fault = cond and target & 3 != 0 and mut != "no_align_check"
    elif mnemonic in ("lui", "auipc"):
        result = (imm + (pc if op == "auipc" else 0)) & M
    elif mnemonic == "jal":
        cond = True
        target = (pc + imm) & M
        result = pc if op == "link_pc" else seq
        fault = target & 3 != 0 and mut != "no_align_check"
    else:  # jalr
        cond = True
        target = (pc + imm) & M if op == "pc_relative" else (a + imm) & M & ~1
        result = seq
        fault = target & 3 != 0 and mut != "no_align_check"

    if not (hit and regs_ok and not fault):
        return trap_outputs(pc)

    flip = 1 if mut == "result_bit_flip" else (1 << 31) if mut == "result_msb_flip" else 0
    out = dict.fromkeys(OUTPUT_NAMES, 0)
    if result is not None:
        out["rd_value"] = result ^ flip
        out["rd_write_enable"] = 0 if mut == "enable_stuck_0" else 1
    if addr is not None:
        out["mem_addr"] = addr
    if wdata is not None:
        out["mem_wdata"] = wdata ^ flip
        out["byte_enables"] = be
        out["mem_write_enable"] = 0 if mut == "enable_stuck_0" else 1
    if target is not None:
        if mnemonic in _CMP and flip:
            target ^= 4 if flip == 1 else 1 << 31
        out["next_pc"] = target if cond else seq
        out["pc_select"] = int(cond) if mut != "enable_stuck_0" or mnemonic not in _CMP else 0
    else:
        out["next_pc"] = seq
    return out


@dataclass(frozen=True)
class MutationReport:
    mnemonic: str
    killed: dict[str, bool]
    vectors: int

    @property
    def n_killed(self) -> int:
        return sum(self.killed.values())

    @property
    def survivors(self) -> list[str]:
        return [m for m, k in self.killed.items() if not k]

    def to_json(self) -> dict:
        return {"mnemonic": self.mnemonic, "vectors": self.vectors, "mutants": len(self.killed),
                "killed": self.n_killed, "survivors": self.survivors}


def model_agrees(block: HardwareBlock, vectors: list[TestVector]) -> list[int]:
    """Indices of vectors where the unmutated model disagrees with the golden outputs."""
    return [i for i, v in enumerate(vectors) if evaluate(block.mnemonic, v.stimulus) != v.expected]


def mutation_smoke(block: HardwareBlock, vectors: list[TestVector], strict: bool = True) -> MutationReport:
    """Run every catalog mutant of ``block`` against ``vectors``.

    A mutant is killed when some vector's mutated outputs differ from the
    expected ones.  Raises SurvivingMutant (when ``strict``) if any lives.
    """
    if len(vectors) < MIN_VECTORS:
        raise ValueError(f"mutation smoke needs at least {MIN_VECTORS} vectors, got {len(vectors)}")
    killed = {}
    for mut in catalog(block.mnemonic):
        killed[mut] = any(evaluate(block.mnemonic, v.stimulus, mut) != v.expected for v in vectors)
    report = MutationReport(block.mnemonic, killed, len(vectors))
    if strict and report.survivors:
        raise SurvivingMutant(block.mnemonic, report.survivors)
    return report
