"""Seeded test vectors for instruction blocks, with golden outputs.

Expected outputs come from :func:`risp.isa.effect`, mapped onto the block
port list by :func:`golden`.  Vector lists are prefix-stable: the edge-value
section comes first, then a random stream drawn from the block's seed, so
``gen_vectors(b, n)`` is a prefix of ``gen_vectors(b, n + k)``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .. import isa
from ..errors import IllegalEncoding, RegisterOutOfRange, Trap
from .library import INPUT_NAMES, OUTPUT_NAMES, HardwareBlock

MIN_VECTORS = 100
EDGE_VALUES = (1, 0, isa.MASK32, 0x7FFFFFFF, 0x80000000)
ILLEGAL_EVERY = 8  # every 8th random vector carries an out-of-range register field
_REG_BIT = {"rd": 11, "rs1": 19, "rs2": 24}


@dataclass(frozen=True)
class TestVector:
    stimulus: dict
    expected: dict

    __test__ = False  # keep pytest from collecting this class


def trap_outputs(pc: int) -> dict:
    out = dict.fromkeys(OUTPUT_NAMES, 0)
    out["next_pc"] = pc & isa.MASK32
    out["trap"] = 1
    return out


def golden(stimulus: dict) -> dict:
    """Reference block outputs for one stimulus, from the ISA semantics."""
    pc = stimulus["pc"]
    try:
        insn = isa.decode(stimulus["insn"])
    except (IllegalEncoding, RegisterOutOfRange):
        return trap_outputs(pc)
    rdata = stimulus["mem_rdata"]

    def read(addr, size):
        return (rdata >> 8 * (addr & 3)) & ((1 << 8 * size) - 1)

    try:
        eff = isa.effect(insn, pc, stimulus["rs1_value"], stimulus["rs2_value"], read)
    except Trap:
        return trap_outputs(pc)
    out = dict.fromkeys(OUTPUT_NAMES, 0)
    if eff.rd is not None:
        out["rd_value"] = eff.rd_value
        out["rd_write_enable"] = 1
    if eff.load_addr is not None:
        out["mem_addr"] = eff.load_addr
    if eff.store is not None:
        addr, size, value = eff.store
        lane = addr & 3
        out["mem_addr"] = addr
        out["mem_wdata"] = (value << 8 * lane) & isa.MASK32
        out["mem_write_enable"] = 1
        out["byte_enables"] = ((1 << size) - 1) << lane
    out["next_pc"] = eff.next_pc
    out["pc_select"] = int(eff.taken)
    return out


def vector(stimulus: dict) -> TestVector:
    stim = {k: stimulus[k] & isa.MASK32 for k in INPUT_NAMES}
    return TestVector(stim, golden(stim))


class _Gen:
    """Stimulus builder for one block."""

    def __init__(self, block: HardwareBlock, rng: random.Random):
        self.spec = block.spec
        self.mn = block.mnemonic
        self.rng = rng
        self.fields = self.spec.fields

    def rand_word(self):
        r = self.rng.random()
        if r < 0.15:
            return self.rng.choice(EDGE_VALUES)
        if r < 0.25:
            return self.rng.randrange(0, 64)
        return self.rng.getrandbits(32)

    def regs(self):
        rs1 = self.rng.randrange(1, 16)
        rs2 = self.rng.choice([r for r in range(1, 16) if r != rs1])
        rd = self.rng.randrange(0, 16) if self.rng.random() < 0.1 else self.rng.randrange(1, 16)
        return rd, rs1, rs2

    def rand_imm(self):
        lo, hi, step = isa.imm_range(self.mn)
        r = self.rng.random()
        if r < 0.1:
            return self.rng.choice([lo, hi, 0])
        return self.rng.randrange(lo, hi + 1, step) if step > 1 else self.rng.randint(lo, hi)

    def stim(self, rs1_value=None, rs2_value=None, imm=None, pc=None, regs=None, mem_rdata=None):
        rd, rs1, rs2 = regs or self.regs()
        kw = {}
        if "rd" in self.fields:
            kw["rd"] = rd
        if "rs1" in self.fields:
            kw["rs1"] = rs1
        if "rs2" in self.fields:
            kw["rs2"] = rs2
        if "imm" in self.fields:
            kw["imm"] = self.rand_imm() if imm is None else imm
        insn = isa.make(self.mn, **kw)
        if pc is None:
            pc = self.rng.getrandbits(32) & ~3 if self.rng.random() < 0.7 else self.rng.randrange(0, 1 << 16, 4)
        return {
            "insn": insn.raw,
            "pc": pc,
            "rs1_value": (self.rand_word() if rs1_value is None else rs1_value) if "rs1" in self.fields else 0,
            "rs2_value": (self.rand_word() if rs2_value is None else rs2_value) if "rs2" in self.fields else 0,
            "mem_rdata": self.rng.getrandbits(32) if mem_rdata is None else mem_rdata,
        }

    def make_illegal(self, stim):
        """Set bit 4 of one register field the format defines."""
        fields = [f for f in ("rd", "rs1", "rs2") if f in self.fields]
        bit = _REG_BIT[self.rng.choice(fields)]
        return dict(stim, insn=stim["insn"] | (1 << bit))

    # edge sections -------------------------------------------------------

    def edges(self):
        mn, fmt = self.mn, self.spec.format
        regs = (3, 1, 2)
        pc0 = 0x100
        out = []
        if fmt == "R":
            rs2_vals = list(EDGE_VALUES)
            if mn in ("sll", "srl", "sra"):
                rs2_vals += [4, 31, 32 + 3]
            for b, a in itertools.product(rs2_vals, EDGE_VALUES):
                out.append(self.stim(a, b, pc=pc0, regs=regs))
        elif mn in isa.SHIFT_IMM:
            for sh, a in itertools.product((1, 0, 4, 31, 16), EDGE_VALUES):
                out.append(self.stim(a, imm=sh, pc=pc0, regs=regs))
        elif mn in isa.LOADS or mn in isa.STORES:
            for a, imm in itertools.product(EDGE_VALUES, (0, 1, 2, 3, -1, 4, -4, 2047, -2048)):
                out.append(self.stim(a, self.rng.choice(EDGE_VALUES), imm=imm, pc=pc0, regs=regs))
            for k in range(4):  # aligned accesses at every lane
                out.append(self.stim(0x1000 + k, 0x11223344, imm=0, pc=pc0, regs=regs, mem_rdata=0x8899AABB))
        elif mn == "jalr":
            for a, imm in itertools.product(EDGE_VALUES + (0x1000,), (0, 1, 2, 3, -1, -2048, 2047, 4)):
                out.append(self.stim(a, imm=imm, pc=pc0, regs=regs))
        elif fmt == "I":
            for imm, a in itertools.product((1, 0, -1, 2047, -2048), EDGE_VALUES):
                out.append(self.stim(a, imm=imm, pc=pc0, regs=regs))
        elif fmt == "B":
            for b, a in itertools.product(EDGE_VALUES, EDGE_VALUES):
                out.append(self.stim(a, b, imm=16, pc=pc0, regs=regs))
            for a, b in ((5, 5), (5, 6), (6, 5), (isa.MASK32, 1), (1, isa.MASK32)):
                for imm in (-4096, 4094, 2, 8, -8):
                    out.append(self.stim(a, b, imm=imm, pc=0x2000, regs=regs))
        elif fmt == "U":
            for imm, pc in itertools.product((0, 0x1000, 0x7FFFF000, -0x80000000, -0x1000),
                                             (0, 0x100, 0xFFFFFFFC, 0x80000000)):
                out.append(self.stim(imm=imm, pc=pc, regs=regs))
        else:  # jal
            for imm, pc in itertools.product((0, 2, 4, -4, 6, 0xFFFFE, -0x100000), (0, 0x100, 0xFFFFFFFC)):
                out.append(self.stim(imm=imm, pc=pc, regs=regs))
        return out

    def random_one(self, i):
        s = self.stim()
        mn = self.mn
        if (mn in isa.LOADS or mn in isa.STORES) and self.rng.random() < 0.6:
            # make most random accesses aligned so data paths get exercised
            insn = isa.decode(s["insn"])
            size = {"b": 1, "h": 2, "w": 4}[mn[1]]
            ea = (s["rs1_value"] + insn.imm) & isa.MASK32
            s["rs1_value"] = (s["rs1_value"] - (ea % size)) & isa.MASK32
            if self.rng.random() < 0.3:
                s["rs1_value"] = (s["rs1_value"] + self.rng.randrange(0, 4, size)) & isa.MASK32
        if self.spec.format == "B" and self.rng.random() < 0.3:
            s["rs2_value"] = s["rs1_value"]
        if i % ILLEGAL_EVERY == ILLEGAL_EVERY - 1:
            s = self.make_illegal(s)
        return s


def gen_vectors(block: HardwareBlock, n: int, seed: int | None = None) -> list[TestVector]:
    """``n`` vectors for ``block``: edge values first, then seeded random ones."""
    if n < 1:
        raise ValueError("n must be positive")
    seed = block.vector_seed if seed is None else seed
    rng = random.Random(seed)
    g = _Gen(block, rng)
    stims = g.edges()[:n]
    i = 0
    while len(stims) < n:
        stims.append(g.random_one(i))
        i += 1
    return [vector(s) for s in stims]
