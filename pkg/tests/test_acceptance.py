"""Acceptance criteria 1-9 at their stated tolerances.

Each test carries ``criterion(n)``; the terminal summary prints one
PASS/FAIL line per criterion with its runtime.
"""

import random
import re
import struct
import time
from importlib import resources

import pytest
from blockcheck import execute_view
from conftest import GOLDEN, VERILATOR, corpus_ranked_subset

from risp import blocklib, gen, isa, metrics, programs, retarget, sim
from risp.profile import InstructionSubset, profile
from risp.sim import SimConfig

ALL = sorted(isa.REGISTRY)
criterion = pytest.mark.criterion


def _random_insn(rng, mnemonic):
    spec = isa.REGISTRY[mnemonic]
    kw = {f: rng.randrange(16) for f in ("rd", "rs1", "rs2") if f in spec.fields}
    if "imm" in spec.fields:
        lo, hi, step = isa.imm_range(mnemonic)
        kw["imm"] = rng.randrange(lo, hi + 1, step)
    return isa.make(mnemonic, **kw)


# -- 1 ---------------------------------------------------------------------

@criterion(1)
@pytest.mark.parametrize("fmt", ["R", "I", "S", "B", "U", "J"])
def test_c1_round_trip_per_format(fmt, record_property):
    t0 = time.perf_counter()
    rng = random.Random(hash(fmt) & 0xFFFF)
    names = [m for m in ALL if isa.REGISTRY[m].format == fmt]
    assert names
    bad = 0
    for _ in range(10_000):
        d = _random_insn(rng, rng.choice(names))
        again = isa.decode(d.raw)
        bad += again != d or isa.encode(again) != d.raw
    dt = time.perf_counter() - t0
    assert bad == 0 and dt < 10 / 6
    record_property("note", f"{fmt}: 10000 words, {bad} mismatches, {dt:.2f} s")


_ALIASES = {"addi": ("mv", "li", "nop"), "jal": ("j",), "jalr": ("jr", "ret"), "xori": ("not",), "sub": ("neg",),
            "sltiu": ("seqz",), "sltu": ("snez",), "slt": ("sltz", "sgtz"), "beq": ("beqz",), "bne": ("bnez",),
            "blt": ("bltz", "bgtz"), "bge": ("bgez", "blez"), "bltu": ("bgtu",), "bgeu": ("bleu",)}
_ABI = ["zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4", "a5"]


@criterion(1)
def test_c1_reference_disassembler(record_property):
    capstone = pytest.importorskip("capstone")
    md = capstone.Cs(capstone.CS_ARCH_RISCV, capstone.CS_MODE_RISCV32)
    rng = random.Random(100)
    mism = []
    for i in range(100):
        d = _random_insn(rng, ALL[i % len(ALL)])
        got = list(md.disasm(d.raw.to_bytes(4, "little"), 0))
        ok = len(got) == 1 and got[0].mnemonic.split(".")[0] in (d.mnemonic, *_ALIASES.get(d.mnemonic, ()))
        if ok and d.rd and got[0].mnemonic == d.mnemonic:
            ok = got[0].op_str.split(",")[0].strip() in (_ABI[d.rd], f"x{d.rd}")
        if not ok:
            mism.append((str(d), got and got[0].mnemonic))
    assert mism == []
    record_property("note", "capstone: 100 samples agree")


# -- 2 ---------------------------------------------------------------------

@criterion(2)
def test_c2_blocks_pre_verified(record_property):
    t0 = time.perf_counter()
    fails, survivors, mutants = {}, {}, 0
    for mn in ALL:
        b = blocklib.get_block(mn)
        vecs = blocklib.gen_vectors(b, 10_000)
        bad = blocklib.model_agrees(b, vecs)
        wrong = sum(execute_view(v) is False for v in vecs)
        if bad or wrong:
            fails[mn] = (len(bad), wrong)
        rep = blocklib.mutation_smoke(b, vecs, strict=False)
        mutants += len(rep.killed)
        if rep.survivors:
            survivors[mn] = rep.survivors
    dt = time.perf_counter() - t0
    record_property("note", f"37 blocks x 10000 vectors, {len(fails)} failing; "
                            f"{mutants - sum(map(len, survivors.values()))}/{mutants} mutants killed; {dt:.0f} s")
    assert fails == {} and survivors == {}
    assert dt < 120


# -- 3 ---------------------------------------------------------------------

_CASE = re.compile(r"^\s*17'b[01?_]{17,}\s*:", re.M)


@criterion(3)
@pytest.mark.parametrize("size", [1, 6, 18, 37])
def test_c3_n_cases(size, record_property):
    rng = random.Random(size)
    for _ in range(10):
        sub = InstructionSubset.of(rng.sample(ALL, size))
        text = gen.emit_modularex(gen.build_design(sub))
        assert len(_CASE.findall(text)) == size
        assert len(re.findall(r"^\s*default\s*:", text, re.M)) == 1
    record_property("note", f"size {size}: 10 designs, case count == size")


# -- 4 ---------------------------------------------------------------------

@criterion(4)
@pytest.mark.parametrize("name", programs.names())
def test_c4_signature_golden(name, tmp_path):
    bp = programs.get(name)
    runs = [sim.run(bp.image(), SimConfig(signature_region=bp.signature_region)) for _ in range(2)]
    sigs = [sim.signature(r) for r in runs]
    assert sigs[0] == sigs[1] == (GOLDEN / f"{name}.sig").read_text()
    design = gen.build_design(profile(bp.image()).distinct, f"{name}_risp")
    out = []
    for d in ("a", "b"):
        man = gen.emit_rtl(design, tmp_path / d)
        tb = gen.emit_integration_testbench(design, bp.image(), bp.signature_region, expected=runs[0])
        (tmp_path / d / "tb.v").write_text(tb)
        out.append({f: (tmp_path / d / f).read_bytes() for f in [*man["files"], "tb.v"]})
    assert out[0] == out[1]


def test_c4_program_count():
    assert len(programs.names()) >= 5


@criterion(4)
@pytest.mark.rtl
@pytest.mark.slow
@pytest.mark.skipif(VERILATOR is None, reason="no external RTL simulator")
@pytest.mark.parametrize("name", programs.names())
def test_c4_rtl_differential(name, record_property):
    bp = programs.get(name)
    design = gen.build_design(profile(bp.image()).distinct, f"{name}_risp")
    v = sim.differential_check(bp.image(), design, bp.signature_region, sim.VERILATOR_CMD)
    assert v.kind == "match", v.first_diff
    record_property("note", f"{name}: RTL match ({v.tb_result})")


# -- 5 ---------------------------------------------------------------------

MINIMAL = InstructionSubset.of(retarget.MINIMAL_SUBSET, label="minimal")


@criterion(5)
@pytest.mark.parametrize("name", programs.names())
def test_c5_retarget_minimal(name, record_property):
    assert len(MINIMAL) == 12
    bp = programs.get(name)
    img = bp.image()
    new, plan = retarget.retarget(img, MINIMAL)  # NoRuleFor would fail here
    assert set(profile(new).distinct) <= set(MINIMAL)
    out = sim.run(new, SimConfig(subset=MINIMAL, signature_region=bp.signature_region))
    assert sim.signature(out) == (GOLDEN / f"{name}.sig").read_text()
    ov = plan.overhead_fraction
    assert ov >= 0
    band = "inside" if 0.05 <= ov <= 0.40 else "outside"
    record_property("note", f"{name}: {plan.size_before} -> {plan.size_after} words, overhead {ov:.1%} "
                            f"({band} the informational 5-40% band)")


# -- 6 ---------------------------------------------------------------------

@criterion(6)
def test_c6_epi_ratio(record_property):
    risp = metrics.epi(1.2, 1625, 1)
    serv = metrics.epi(1.3, 1950, 32)
    ratio = serv / risp
    assert ratio == pytest.approx(28.9, rel=0.01)
    assert ratio >= 29 * 0.99
    record_property("note", f"EPI {risp:.4f} nJ vs {serv:.3f} nJ, ratio {ratio:.2f}x")


# -- 7 ---------------------------------------------------------------------

LO, HI = 1865 * 0.9, 3652 * 1.1


@criterion(7)
def test_c7_area_calibration(record_property):
    assert metrics.estimate_area(ALL) == 3870
    w = sorted(ALL, key=lambda m: metrics.default_table().weights[m])
    extremes = [(metrics.estimate_area(w[:k]), metrics.estimate_area(w[-k:])) for k in range(6, 33)]
    assert all(LO <= a <= HI and LO <= b <= HI for a, b in extremes)
    rng = random.Random(77)
    for _ in range(1000):
        k = rng.randint(6, 32)
        assert LO <= metrics.estimate_area(rng.sample(ALL, k)) <= HI
    record_property("note", f"6..32 instructions span {extremes[0][0]}..{extremes[-1][1]} NAND2 "
                            f"(bound {LO:.1f}..{HI:.1f}); full design 3870")


@criterion(7)
def test_c7_monotone_pairs():
    rng = random.Random(78)
    for _ in range(1000):
        big = rng.sample(ALL, rng.randint(1, 37))
        small = rng.sample(big, rng.randint(0, len(big) - 1))
        assert metrics.estimate_area(small) < metrics.estimate_area(big)


# -- 8 ---------------------------------------------------------------------

@criterion(8)
def test_c8_subset_savings(record_property):
    sub = corpus_ranked_subset(18)
    r = metrics.report(sub)
    full = metrics.load_baselines()[0]
    area = 1 - r.nand2 / full.nand2
    power = 1 - r.power_mW / full.power_mW
    record_property("note", f"corpus top-18 {sorted(sub)}: {r.nand2} NAND2 ({-area:+.1%}), "
                            f"{r.power_mW:.3f} mW ({-power:+.1%})")
    assert 0.25 <= area <= 0.35 and 0.25 <= power <= 0.35


# -- 9 ---------------------------------------------------------------------

def _exec_sections(blob):
    """Executable section bytes, read with struct straight from the ELF32 header."""
    shoff, = struct.unpack_from("<I", blob, 32)
    shentsize, shnum = struct.unpack_from("<HH", blob, 46)
    for i in range(shnum):
        _, typ, flags, _, off, size = struct.unpack_from("<6I", blob, shoff + i * shentsize)
        if typ == 1 and flags & 4:
            yield blob[off:off + size]


def _recount(blob):
    by_key = {}
    for m, s in isa.REGISTRY.items():
        by_key[(s.opcode, s.funct3, s.funct7)] = m
    seen = set()
    for data in _exec_sections(blob):
        for (w,) in struct.iter_unpack("<I", data[:len(data) & ~3]):
            op, f3, f7 = w & 0x7F, w >> 12 & 7, w >> 25
            if op in (0x37, 0x17, 0x6F):
                m = by_key.get((op, None, None))
            elif op in (0x33,) or (op == 0x13 and f3 in (1, 5)):
                m = by_key.get((op, f3, f7))
            else:
                m = by_key.get((op, f3, None))
            if m is None:
                continue
            fields = isa.REGISTRY[m].fields
            if any(f in fields and w >> bit & 1 for f, bit in (("rd", 11), ("rs1", 19), ("rs2", 24))):
                continue
            seen.add(m)
    return seen


@criterion(9)
@pytest.mark.parametrize("name", programs.names())
def test_c9_profile_recount(name, record_property):
    bp = programs.get(name)
    blob = (resources.files("risp.programs") / bp.elf).read_bytes()
    got = set(profile(bp.image()).distinct)
    assert got == _recount(blob)
    record_property("note", f"{name}: {len(got)} distinct instructions")
