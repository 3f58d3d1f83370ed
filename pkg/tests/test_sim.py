import random

import pytest
from conftest import GOLDEN, image_from_asm

import oracles
from risp import isa, programs, sim
from risp.errors import NoRegionConfigured, NotHalted
from risp.profile import InstructionSubset
from risp.sim import SimConfig, Simulator


def test_halt_program():
    r = sim.run(image_from_asm("addi x1, x0, 5\njal x0, 0"))
    assert (r.status, r.retired, r.cycles, r.regs[1]) == (sim.HALTED, 2, 2, 5)
    assert r.cpi == 1


def test_subset_violation():
    img = image_from_asm("addi x1, x0, 5\nsub x2, x1, x1\njal x0, 0")
    r = sim.run(img, SimConfig(subset=InstructionSubset.of(["addi", "jal"])))
    assert r.status == sim.SUBSET_VIOLATION
    assert r.violation == ("sub", 4)
    assert r.dynamic_counts == {"addi": 1}


def test_max_cycles():
    r = sim.run(image_from_asm("loop: addi x1, x1, 1\njal x0, loop"), SimConfig(max_cycles=1000))
    assert (r.status, r.cycles) == (sim.MAX_CYCLES_EXCEEDED, 1000)


def test_trap_and_unmapped_reads():
    r = sim.run(image_from_asm("addi x1, x0, 2\nlw x2, 0(x1)\njal x0, 0"))
    assert r.status == sim.TRAPPED and "Misaligned" in r.trap_reason
    r = sim.run(image_from_asm("lui x1, 0x9\nlw x2, 0(x1)\njal x0, 0"))
    assert r.status == sim.HALTED and r.unmapped_reads == 1 and r.regs[2] == 0
    r = sim.run(image_from_asm("jal x0, 8\n.word 0xffffffff\n"))
    assert r.status == sim.TRAPPED


def test_signature_format():
    src = """
        lui x1, 0x2
        lui x2, 0xdeadc
        addi x2, x2, -0x111
        sw x2, 0(x1)
        lui x3, 0x1000
        sw x3, 4(x1)
        jal x0, 0
    """
    r = sim.run(image_from_asm(src), SimConfig(signature_region=(0x2000, 0x2008)))
    assert sim.signature(r) == "deadbeef\n01000000\n"
    mem = {0x2000: int.from_bytes(bytes.fromhex("DEADBEEF"), "little"),
           0x2004: int.from_bytes(bytes.fromhex("00000001"), "little")}
    s = Simulator(0, mem=mem)
    assert sim.format_signature(s.words(0x2000, 0x2008)) == "efbeadde\n01000000\n"
    r0 = sim.run(image_from_asm("jal x0, 0"), SimConfig(signature_region=(0x2000, 0x2000)))
    assert sim.signature(r0) == ""
    with pytest.raises(NoRegionConfigured):
        sim.signature(sim.run(image_from_asm("jal x0, 0")))
    with pytest.raises(NotHalted):
        sim.signature(sim.run(image_from_asm("l: addi x1, x1, 1\njal x0, l"), SimConfig(max_cycles=3, signature_region=(0, 4))))


def test_config_checks():
    with pytest.raises(ValueError):
        SimConfig(max_cycles=0)
    with pytest.raises(ValueError):
        SimConfig(signature_region=(2, 8))
    assert sim.parse_region("0x2000:0x2040") == (0x2000, 0x2040)


def test_trace(tmp_path):
    r = sim.run(image_from_asm("addi x1, x0, 5\nsw x1, 64(x0)\njal x0, 0"), SimConfig(trace=True))
    assert r.trace[0].split("\t") == ["1", "00000000", "00500093", "addi", "x1=00000005"]
    assert r.trace[1].endswith("mem[00000040]/4=00000005")
    r.write_trace(tmp_path / "t.tsv")
    assert (tmp_path / "t.tsv").read_text().count("\n") == 3


def test_step_matches_execute():
    rng = random.Random(11)
    names = sorted(isa.REGISTRY)
    checked = 0
    for i in range(10_000):
        m = names[i % len(names)]
        spec = isa.REGISTRY[m]
        kw = {f: rng.randrange(16) for f in ("rd", "rs1", "rs2") if f in spec.fields}
        if "imm" in spec.fields:
            lo, hi, step = isa.imm_range(m)
            kw["imm"] = rng.randrange(lo, hi + 1, step)
        insn = isa.make(m, **kw)
        regs = (0,) + tuple(rng.choice([rng.getrandbits(32), rng.getrandbits(12) * 4]) for _ in range(15))
        pc = 0x10000 + 4 * rng.randrange(1024)
        mem = {a: rng.getrandbits(32) for a in range(0, 0x40, 4)}
        state = isa.MachineState(pc, regs, isa.Memory({**mem, pc: insn.raw}))
        s = Simulator.from_state(state)
        try:
            want = isa.execute(insn, state)
        except isa.MisalignedAccess:
            with pytest.raises(isa.MisalignedAccess):
                s.step()
            continue
        except isa.MisalignedTarget:
            with pytest.raises(isa.MisalignedTarget):
                s.step()
            continue
        s.step()
        got = s.to_state()
        assert (got.pc, got.regs) == (want.pc, want.regs), insn
        assert {a: v for a, v in got.mem.items() if v} == {a: v for a, v in want.mem.items() if v}
        checked += 1
    assert checked > 5000


@pytest.mark.parametrize("name", programs.names())
def test_bundled_signature(name):
    bp = programs.get(name)
    r = sim.run(bp.image(), SimConfig(signature_region=bp.signature_region))
    assert r.status == sim.HALTED and r.cycles == r.retired
    assert sum(r.dynamic_counts.values()) == r.retired
    assert list(r.signature) == oracles.ORACLES[name]()
    assert sim.signature(r) == (GOLDEN / f"{name}.sig").read_text()
    again = sim.run(bp.image(), SimConfig(signature_region=bp.signature_region))
    assert again == r


def test_subset_soundness():
    bp = programs.get("crc32")
    from risp.profile import profile

    sub = profile(bp.image()).distinct
    r = sim.run(bp.image(), SimConfig(subset=sub, signature_region=bp.signature_region))
    assert r.status == sim.HALTED and set(r.dynamic_counts) <= set(sub)
    less = InstructionSubset.of([m for m in sub if m != "lbu"])
    r = sim.run(bp.image(), SimConfig(subset=less))
    assert r.status == sim.SUBSET_VIOLATION and r.violation[0] == "lbu"
    assert "lbu" not in r.dynamic_counts


def test_differential_iss_only():
    from risp import gen
    from risp.profile import profile

    bp = programs.get("fib")
    design = gen.build_design(profile(bp.image()).distinct)
    v = sim.differential_check(bp.image(), design, bp.signature_region)
    assert v.kind == "iss_only" and v.reference == (GOLDEN / "fib.sig").read_text()
    assert sim.first_difference("a\nb\n", "a\nc\n") == (1, "b", "c")
    assert sim.first_difference("a\n", "a\n") is None
