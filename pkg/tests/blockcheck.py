"""Check block vectors against isa.execute on a concrete machine state."""

from risp import isa
from risp.blocklib import OUTPUT_NAMES


def execute_view(vec) -> bool | None:
    """True/False when the vector's expected outputs agree with isa.execute; None if not realisable."""
    s, e = vec.stimulus, vec.expected
    try:
        insn = isa.decode(s["insn"])
    except (isa.IllegalEncoding, isa.RegisterOutOfRange):
        return e["trap"] == 1 and all(e[k] == 0 for k in OUTPUT_NAMES if k not in ("trap", "next_pc"))
    regs = [0] * isa.NUM_REGS
    for name, port in (("rs1", "rs1_value"), ("rs2", "rs2_value")):
        r = getattr(insn, name)
        if r is None:
            continue
        if (r == 0 and s[port]) or (regs[r] and regs[r] != s[port]):
            return None
        regs[r] = s[port]
    if insn.rs1 is not None and insn.rs2 is not None and insn.rs1 == insn.rs2 and s["rs1_value"] != s["rs2_value"]:
        return None
    words = {}
    if insn.mnemonic in isa.LOADS:
        addr = isa.u32(s["rs1_value"] + insn.imm)
        words[addr & ~3] = s["mem_rdata"]
    state = isa.MachineState(s["pc"], tuple(regs), isa.Memory(words))
    try:
        out = isa.execute(insn, state)
    except (isa.MisalignedAccess, isa.MisalignedTarget):
        return e["trap"] == 1 and e["next_pc"] == s["pc"]
    if e["trap"] or out.pc != e["next_pc"]:
        return False
    if insn.rd:
        if out.regs[insn.rd] != e["rd_value"] or not e["rd_write_enable"]:
            return False
    if insn.mnemonic in isa.STORES:
        addr = e["mem_addr"]
        mask = sum(0xFF << 8 * i for i in range(4) if e["byte_enables"] >> i & 1)
        if out.mem.word(addr & ~3) != e["mem_wdata"] & mask or not e["mem_write_enable"]:
            return False
        return addr == isa.u32(s["rs1_value"] + insn.imm)
    return not e["mem_write_enable"]
