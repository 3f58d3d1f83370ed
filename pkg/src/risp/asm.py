"""Textual form of RV32E instructions: formatter and a small label-aware assembler.

The syntax follows GNU ``as``: ``add x1, x2, x3``, ``lw a0, 8(sp)``,
``lui t0, 0x12345``.  Branch and jump operands are byte offsets, or labels
when going through :func:`assemble`.
"""

import re

from . import isa
from .errors import IllegalEncoding

ABI_NAMES = ("zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2",
             "s0", "s1", "a0", "a1", "a2", "a3", "a4", "a5")
_REG_ALIASES = {name: i for i, name in enumerate(ABI_NAMES)}
_REG_ALIASES["fp"] = 8


def reg_index(token: str) -> int:
    t = token.strip().lower()
    if t in _REG_ALIASES:
        return _REG_ALIASES[t]
    if re.fullmatch(r"x\d+", t):
        n = int(t[1:])
        if n < 32:
            return n
    raise IllegalEncoding(f"bad register {token!r}")


def parse_int(token: str) -> int:
    t = token.strip().lower().replace("_", "")
    neg = t.startswith("-")
    t = t.lstrip("+-")
    if t.startswith("0x"):
        v = int(t, 16)
    elif t.startswith("0b"):
        v = int(t, 2)
    else:
        v = int(t, 10)
    return -v if neg else v


def format_insn(insn: isa.DecodedInstruction) -> str:
    m, fmt = insn.mnemonic, insn.format
    x = "x{}".format
    if fmt == "R":
        return f"{m} {x(insn.rd)}, {x(insn.rs1)}, {x(insn.rs2)}"
    if m in isa.LOADS or m == "jalr":
        return f"{m} {x(insn.rd)}, {insn.imm}({x(insn.rs1)})"
    if fmt == "I":
        return f"{m} {x(insn.rd)}, {x(insn.rs1)}, {insn.imm}"
    if fmt == "S":
        return f"{m} {x(insn.rs2)}, {insn.imm}({x(insn.rs1)})"
    if fmt == "B":
        return f"{m} {x(insn.rs1)}, {x(insn.rs2)}, {insn.imm}"
    if fmt == "U":
        return f"{m} {x(insn.rd)}, 0x{(insn.imm >> 12) & 0xFFFFF:x}"
    return f"{m} {x(insn.rd)}, {insn.imm}"


_MEM_OPERAND = re.compile(r"^(.*)\((\s*\w+\s*)\)$")


def split_operands(text: str) -> tuple[str, list[str]]:
    text = text.split("#")[0].strip()
    if not text:
        return "", []
    parts = text.split(None, 1)
    ops = [o.strip() for o in parts[1].split(",")] if len(parts) > 1 else []
    return parts[0].lower(), ops


def parse_insn(text: str, resolve=None) -> isa.DecodedInstruction:
    """Parse one instruction line.

    ``resolve(token)`` maps a non-numeric branch/jump operand to an offset.
    """
    m, ops = split_operands(text)
    spec = isa.REGISTRY.get(m)
    if spec is None:
        raise IllegalEncoding(f"unknown mnemonic in {text!r}")

    def imm_of(tok):
        try:
            return parse_int(tok)
        except ValueError:
            if resolve is None:
                raise IllegalEncoding(f"bad immediate {tok!r} in {text!r}") from None
            return resolve(tok)

    def mem(tok):
        mt = _MEM_OPERAND.match(tok.strip())
        if not mt:
            raise IllegalEncoding(f"expected offset(reg) in {text!r}")
        off = mt.group(1).strip() or "0"
        return imm_of(off), reg_index(mt.group(2))

    fmt = spec.format
    try:
        if fmt == "R":
            rd, rs1, rs2 = ops
            return isa.make(m, rd=reg_index(rd), rs1=reg_index(rs1), rs2=reg_index(rs2))
        if m in isa.LOADS or m == "jalr":
            if len(ops) == 3:
                return isa.make(m, rd=reg_index(ops[0]), rs1=reg_index(ops[1]), imm=imm_of(ops[2]))
            if m == "jalr" and len(ops) == 1 and "(" not in ops[0]:
                return isa.make(m, rd=1, rs1=reg_index(ops[0]), imm=0)
            imm, rs1 = mem(ops[1])
            return isa.make(m, rd=reg_index(ops[0]), rs1=rs1, imm=imm)
        if fmt == "I":
            rd, rs1, imm = ops
            return isa.make(m, rd=reg_index(rd), rs1=reg_index(rs1), imm=imm_of(imm))
        if fmt == "S":
            imm, rs1 = mem(ops[1])
            return isa.make(m, rs1=rs1, rs2=reg_index(ops[0]), imm=imm)
        if fmt == "B":
            rs1, rs2, off = ops
            return isa.make(m, rs1=reg_index(rs1), rs2=reg_index(rs2), imm=imm_of(off))
        if fmt == "U":
            rd, hi = ops
            field = imm_of(hi)
            if not -(1 << 19) <= field < (1 << 20):
                raise isa.FieldOverflow(f"{m}: upper immediate {field:#x} exceeds 20 bits")
            return isa.make(m, rd=reg_index(rd), imm=isa.s32(field << 12))
        if len(ops) == 1:
            return isa.make(m, rd=1, imm=imm_of(ops[0]))
        rd, off = ops
        return isa.make(m, rd=reg_index(rd), imm=imm_of(off))
    except ValueError:
        raise IllegalEncoding(f"wrong operand count in {text!r}") from None


_LABEL = re.compile(r"^\s*([A-Za-z_.$][\w.$]*)\s*:(.*)$")


def assemble(source: str, base: int = 0) -> list[tuple[int, int]]:
    """Two-pass assembly of a label-annotated listing into (address, word) pairs.

    Supports ``.word VALUE`` for inline data; everything else must be a
    registry instruction.
    """
    lines = []
    labels = {}
    addr = base
    for raw in source.splitlines():
        text = raw.split("#")[0].strip()
        while True:
            ml = _LABEL.match(text)
            if not ml:
                break
            labels[ml.group(1)] = addr
            text = ml.group(2).strip()
        if not text:
            continue
        lines.append((addr, text))
        addr += 4
    out = []
    for addr, text in lines:
        if text.startswith(".word"):
            out.append((addr, parse_int(text.split(None, 1)[1]) & isa.MASK32))
            continue

        def resolve(tok, here=addr):
            if tok not in labels:
                raise IllegalEncoding(f"undefined label {tok!r}")
            return labels[tok] - here

        out.append((addr, parse_insn(text, resolve).raw))
    return out
