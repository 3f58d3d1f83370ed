import json
import struct

import pytest
from hypothesis import given
from hypothesis import strategies as st

from risp import isa, programs
from risp.errors import AllWordsUndecodable, EmptyImage, MalformedListing, UnsupportedFormat
from risp.profile import (FULL_ISA_SIZE, InstructionSubset, ProgramImage, load_image, load_subset, merge_profiles,
                          profile, write_elf, write_listing)


def words_of(*texts):
    from risp import asm

    return [asm.parse_insn(t).raw for t in texts]


def test_flat_binary(tmp_path):
    p = tmp_path / "nop.bin"
    p.write_bytes(bytes.fromhex("1300000013000000"))
    img = load_image(p)
    assert img.words == ((0, 0x13), (4, 0x13))
    img = load_image(p, "bin", base=0x80000000)
    assert img.words[0][0] == 0x80000000


def test_empty_and_bad_elf(tmp_path):
    p = tmp_path / "empty.bin"
    p.write_bytes(b"")
    with pytest.raises(EmptyImage):
        load_image(p)
    elf = bytearray(52)
    elf[:6] = b"\x7fELF\x01\x01"
    struct.pack_into("<H", elf, 18, 62)  # x86-64
    q = tmp_path / "x86.elf"
    q.write_bytes(bytes(elf))
    with pytest.raises(UnsupportedFormat):
        load_image(q)


def test_listing(tmp_path):
    p = tmp_path / "a.lst"
    p.write_text("prog:\n80000000: 00a28293 addi t0,t0,10\n\n80000004:\t0000006f   j 80000004\n")
    img = load_image(p)
    assert img.words == ((0x80000000, 0x00A28293), (0x80000004, 0x6F))
    assert load_image(tmp_path.joinpath("a.lst").write_text(write_listing(img)) and p).words == img.words


def test_malformed_listing(tmp_path):
    p = tmp_path / "b.lst"
    p.write_text("not a listing at all\n")
    with pytest.raises((MalformedListing, EmptyImage)):
        load_image(p)


def test_profile_counts():
    img = ProgramImage.from_words(words_of("addi x1, x0, 1", "addi x2, x0, 2", "add x3, x1, x2", "lw x4, 0(x3)"))
    prof = profile(img)
    assert prof.total_static == 4
    assert set(prof.distinct) == {"addi", "add", "lw"}
    assert prof.coverage_fraction == pytest.approx(3 / 37)
    obj = prof.to_json()
    assert obj["counts"] == {"add": 1, "addi": 2, "lw": 1}
    assert set(obj) >= {"name", "total_static", "distinct", "counts", "coverage_fraction"}


def test_data_words_and_undecodable():
    img = ProgramImage.from_words([0x13, 0xFFFFFFFF, 0x6F])
    prof = profile(img)
    assert prof.data_words == 1 and prof.total_static == 2
    with pytest.raises(AllWordsUndecodable):
        profile(ProgramImage.from_words([0xFFFFFFFF] * 3))


def test_eighteen_coverage():
    sub = InstructionSubset.of(sorted(isa.REGISTRY)[:18])
    assert len(sub) / FULL_ISA_SIZE == pytest.approx(0.486, abs=1e-3)


def test_merge():
    a = profile(ProgramImage.from_words(words_of("add x1, x2, x3")))
    b = profile(ProgramImage.from_words(words_of("addi x1, x2, 3")))
    assert set(merge_profiles([a, b]).distinct) == {"add", "addi"}
    aa = merge_profiles([a, a])
    assert aa.distinct.mnemonics == a.distinct.mnemonics and aa.total_static == 2 * a.total_static
    groups = [sorted(isa.REGISTRY)[i:i + 6] for i in (0, 6, 12)]
    profs = [profile(ProgramImage.from_words([isa.make(m, **_fields(m)).raw for m in g])) for g in groups]
    assert len(merge_profiles(profs).distinct) == 18
    with pytest.raises(ValueError):
        merge_profiles([])


def _fields(m):
    return {f: 2 if f != "imm" else 0 for f in isa.REGISTRY[m].fields}


@given(st.permutations(words_of("add x1, x2, x3", "addi x1, x1, 1", "sw x1, 0(x2)", "beq x1, x2, 8",
                                "lui x5, 0x10", "jal x0, 0")))
def test_permutation_invariance(ws):
    base = profile(ProgramImage.from_words(words_of("add x1, x2, x3", "addi x1, x1, 1", "sw x1, 0(x2)",
                                                    "beq x1, x2, 8", "lui x5, 0x10", "jal x0, 0")))
    p = profile(ProgramImage.from_words(ws))
    assert p.static_counts == base.static_counts


@given(st.lists(st.sampled_from(sorted(isa.REGISTRY)), min_size=1, max_size=10),
       st.lists(st.sampled_from(sorted(isa.REGISTRY)), min_size=1, max_size=10))
def test_merge_monotone(xs, ys):
    pa = profile(ProgramImage.from_words([isa.make(m, **_fields(m)).raw for m in xs]))
    pb = profile(ProgramImage.from_words([isa.make(m, **_fields(m)).raw for m in ys]))
    m = merge_profiles([pa, pb])
    assert set(pa.distinct) <= set(m.distinct) and set(pb.distinct) <= set(m.distinct)
    assert sum(m.static_counts.values()) == m.total_static
    assert merge_profiles([pa, pa]).distinct.mnemonics == pa.distinct.mnemonics


def test_subset_json_forms(tmp_path):
    prof = profile(programs.get("fib").image())
    p = tmp_path / "p.json"
    p.write_text(json.dumps(prof.to_json()))
    assert load_subset(p) == prof.distinct
    q = tmp_path / "l.json"
    q.write_text(json.dumps(["add", "addi"]))
    assert list(load_subset(q)) == ["add", "addi"]
    with pytest.raises(Exception):
        InstructionSubset.of(["mul"])


def _brute_distinct(blob: bytes) -> set:
    """Recount straight from the ELF bytes with a separate field decoder."""
    from risp import elf

    seen = set()
    _, secs = elf.read_sections(blob)
    keys = {(s.opcode, s.funct3, s.funct7): m for m, s in isa.REGISTRY.items()}
    for sec in secs:
        if not sec.executable:
            continue
        for i in range(0, len(sec.data) - 3, 4):
            w = int.from_bytes(sec.data[i:i + 4], "little")
            op, f3, f7 = w & 0x7F, (w >> 12) & 7, w >> 25
            for key in ((op, f3, f7), (op, f3, None), (op, None, None)):
                if key in keys:
                    m = keys[key]
                    fields = isa.REGISTRY[m].fields
                    regs_ok = all(not (w >> bit) & 1 for f, bit in (("rd", 11), ("rs1", 19), ("rs2", 24))
                                  if f in fields)
                    if regs_ok:
                        seen.add(m)
                    break
    return seen


@pytest.mark.parametrize("name", programs.names())
def test_bundled_profile_matches_recount(name):
    bp = programs.get(name)
    from importlib import resources

    blob = (resources.files("risp.programs") / bp.elf).read_bytes()
    assert set(profile(bp.image()).distinct) == _brute_distinct(blob)


def test_elf_round_trip(tmp_path):
    img = programs.get("memcpy").image()
    p = tmp_path / "m.elf"
    p.write_bytes(write_elf(img))
    back = load_image(p)
    assert (back.words, back.data, back.entry) == (img.words, img.data, img.entry)


def test_image_invariants():
    with pytest.raises(EmptyImage):
        ProgramImage("e", ())
    with pytest.raises(ValueError):
        ProgramImage("bad", ((4, 0x13), (0, 0x13)))
    img = ProgramImage("gap", ((0, 0x13), (4, 0x13), (0x100, 0x6F)))
    assert [s for s, _ in img.segments()] == [0, 0x100]
