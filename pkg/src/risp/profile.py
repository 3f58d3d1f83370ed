"""Program images and static instruction profiling.

A profile counts every decodable word of an image under its mnemonic.
Words that do not decode are treated as inline data (baremetal ``.text``
often carries literal pools) and reported separately.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import elf, isa
from .errors import (
    AllWordsUndecodable,
    EmptyImage,
    IllegalEncoding,
    MalformedListing,
    RegisterOutOfRange,
    UnknownInstruction,
)

FULL_ISA_SIZE = len(isa.REGISTRY)
SOURCE_FORMATS = ("elf32", "flat_binary", "disasm_listing")
_FORMAT_ALIASES = {"elf32": "elf32", "elf": "elf32", "bin": "flat_binary", "flat_binary": "flat_binary",
                   "listing": "disasm_listing", "disasm_listing": "disasm_listing"}
LISTING_LINE = re.compile(r"^\s*([0-9a-fA-F]+):\s+([0-9a-fA-F]{8})\b.*$")


@dataclass(frozen=True)
class ProgramImage:
    """Executable words of a program plus any initialised data segments."""

    name: str
    words: tuple[tuple[int, int], ...]
    source_format: str = "flat_binary"
    entry: int = 0
    data: tuple[tuple[int, bytes], ...] = ()

    def __post_init__(self):
        if not self.words:
            raise EmptyImage(f"{self.name}: no executable words")
        prev = None
        for addr, word in self.words:
            if addr & 3 or not 0 <= word <= isa.MASK32:
                raise ValueError(f"{self.name}: bad word 0x{word:x} at 0x{addr:x}")
            if prev is not None and addr <= prev:
                raise ValueError(f"{self.name}: addresses must strictly increase")
            prev = addr

    @classmethod
    def from_words(cls, words: Iterable[int], base: int = 0, name: str = "program", **kw) -> ProgramImage:
        return cls(name, tuple((base + 4 * i, w & isa.MASK32) for i, w in enumerate(words)),
                   entry=kw.pop("entry", base), **kw)

    def segments(self) -> list[tuple[int, list[int]]]:
        """Contiguous runs of words as (start address, words)."""
        segs: list[tuple[int, list[int]]] = []
        for addr, word in self.words:
            if segs and segs[-1][0] + 4 * len(segs[-1][1]) == addr:
                segs[-1][1].append(word)
            else:
                segs.append((addr, [word]))
        return segs

    def text_range(self) -> tuple[int, int]:
        return self.words[0][0], self.words[-1][0] + 4

    def memory_words(self) -> dict[int, int]:
        """Initial memory (aligned address -> word) covering text and data."""
        mem: dict[int, int] = {}
        for base, blob in self.data:
            for i, byte in enumerate(blob):
                a = base + i
                w = a & ~3
                mem[w] = mem.get(w, 0) & ~(0xFF << 8 * (a & 3)) | byte << 8 * (a & 3)
        for addr, word in self.words:
            mem[addr] = word
        return mem


def load_image(path, format: str | None = None, base: int | None = None) -> ProgramImage:
    path = Path(path)
    blob = path.read_bytes()
    fmt = _FORMAT_ALIASES.get(format, format) if format else _sniff(path, blob)
    if fmt not in SOURCE_FORMATS:
        raise ValueError(f"unknown image format {format!r}")
    name = path.stem
    if fmt == "elf32":
        return _from_elf(name, blob)
    if fmt == "disasm_listing":
        return _from_listing(name, blob.decode("utf-8", "replace"))
    return _from_flat(name, blob, 0 if base is None else base)


def _sniff(path: Path, blob: bytes) -> str:
    if elf.is_elf(blob):
        return "elf32"
    if path.suffix.lower() in (".lst", ".dis", ".txt", ".listing"):
        return "disasm_listing"
    return "flat_binary"


def _from_flat(name, blob, base):
    if not blob:
        raise EmptyImage(f"{name}: empty file")
    blob = blob + b"\0" * (-len(blob) % 4)
    words = [int.from_bytes(blob[i:i + 4], "little") for i in range(0, len(blob), 4)]
    return ProgramImage(name, tuple((base + 4 * i, w) for i, w in enumerate(words)), "flat_binary", base)


def _from_elf(name, blob):
    entry, sections = elf.read_sections(blob)
    words, data = [], []
    for sec in sorted(sections, key=lambda s: s.addr):
        if sec.executable and sec.data:
            payload = sec.data + b"\0" * (-len(sec.data) % 4)
            words += [(sec.addr + i, int.from_bytes(payload[i:i + 4], "little"))
                      for i in range(0, len(payload), 4)]
        elif sec.loadable_data and sec.data:
            data.append((sec.addr, bytes(sec.data)))
    if not words:
        raise EmptyImage(f"{name}: no executable PROGBITS sections")
    return ProgramImage(name, tuple(words), "elf32", entry, tuple(data))


def _from_listing(name, text):
    words = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        m = LISTING_LINE.match(line)
        if not m:
            continue
        addr = int(m.group(1), 16)
        if addr & 3 or addr in words:
            raise MalformedListing(lineno, line)
        words[addr] = int(m.group(2), 16)
    if not words:
        raise EmptyImage(f"{name}: no listing lines matched")
    ordered = tuple(sorted(words.items()))
    return ProgramImage(name, ordered, "disasm_listing", ordered[0][0])


def write_listing(image: ProgramImage) -> str:
    """Render an image in the listing grammar accepted by ``load_image``."""
    out = []
    for addr, word in image.words:
        try:
            text = str(isa.decode(word))
        except (IllegalEncoding, RegisterOutOfRange):
            text = f".word 0x{word:08x}"
        out.append(f"{addr:8x}: {word:08x} {text}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# subsets and profiles


@dataclass(frozen=True)
class InstructionSubset:
    mnemonics: tuple[str, ...]
    label: str = ""

    def __post_init__(self):
        unknown = sorted(set(self.mnemonics) - set(isa.REGISTRY))
        if unknown:
            raise UnknownInstruction(", ".join(unknown))
        object.__setattr__(self, "mnemonics", tuple(sorted(set(self.mnemonics))))

    @classmethod
    def of(cls, mnemonics: Iterable[str], label: str = "") -> InstructionSubset:
        return cls(tuple(mnemonics), label)

    @classmethod
    def full(cls) -> InstructionSubset:
        return cls(isa.MNEMONICS, "RV32E")

    def __contains__(self, mnemonic):
        return mnemonic in self.mnemonics

    def __len__(self):
        return len(self.mnemonics)

    def __iter__(self):
        return iter(self.mnemonics)

    def __or__(self, other):
        return InstructionSubset(self.mnemonics + tuple(other), self.label)


def load_subset(path) -> InstructionSubset:
    """Read a subset from profile JSON (``distinct``), a manifest (``subset``) or a bare list."""
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, list):
        return InstructionSubset.of(obj, Path(path).stem)
    for key in ("distinct", "subset", "mnemonics"):
        if key in obj:
            return InstructionSubset.of(obj[key], obj.get("name") or obj.get("design_name") or Path(path).stem)
    raise ValueError(f"{path}: no subset found")


def parse_subset_arg(text: str, label: str = "cli") -> InstructionSubset:
    return InstructionSubset.of([m.strip().lower() for m in text.split(",") if m.strip()], label)


@dataclass(frozen=True)
class InstructionProfile:
    name: str
    static_counts: dict[str, int]
    distinct: InstructionSubset
    total_static: int
    coverage_fraction: float
    data_words: int = 0
    sources: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "total_static": self.total_static,
            "distinct": list(self.distinct.mnemonics),
            "counts": dict(sorted(self.static_counts.items())),
            "coverage_fraction": self.coverage_fraction,
            "n_distinct": len(self.distinct),
            "full_isa_size": FULL_ISA_SIZE,
            "data_words": self.data_words,
        }

    def table(self) -> str:
        lines = [f"profile: {self.name}",
                 f"{'mnemonic':<10}{'count':>8}{'share':>9}"]
        for m, c in sorted(self.static_counts.items(), key=lambda kv: (-kv[1], kv[0])):
            lines.append(f"{m:<10}{c:>8}{c / self.total_static:>9.1%}")
        lines.append(f"{'total':<10}{self.total_static:>8}")
        lines.append(f"distinct {len(self.distinct)}/{FULL_ISA_SIZE} "
                     f"({self.coverage_fraction:.1%}); data words {self.data_words}")
        return "\n".join(lines)


def _make_profile(name, counts: Counter, data_words, sources=()):
    total = sum(counts.values())
    return InstructionProfile(
        name=name,
        static_counts=dict(counts),
        distinct=InstructionSubset.of(counts, name),
        total_static=total,
        coverage_fraction=len(counts) / FULL_ISA_SIZE,
        data_words=data_words,
        sources=tuple(sources) or (name,),
    )


def profile(image: ProgramImage) -> InstructionProfile:
    counts: Counter = Counter()
    data_words = 0
    for _, word in image.words:
        try:
            counts[isa.decode(word).mnemonic] += 1
        except (IllegalEncoding, RegisterOutOfRange):
            data_words += 1
    if not counts:
        raise AllWordsUndecodable(f"{image.name}: none of {data_words} words decode")
    return _make_profile(image.name, counts, data_words)


def merge_profiles(profiles: list[InstructionProfile], name: str | None = None) -> InstructionProfile:
    if not profiles:
        raise ValueError("merge_profiles needs at least one profile")
    counts: Counter = Counter()
    for p in profiles:
        counts.update(p.static_counts)
    sources = tuple(s for p in profiles for s in p.sources)
    return _make_profile(name or "+".join(p.name for p in profiles), counts,
                         sum(p.data_words for p in profiles), sources)


def write_elf(image: ProgramImage) -> bytes:
    """ELF32 bytes for ``image``: one text section per contiguous run plus its data segments."""
    secs = []
    for k, (start, words) in enumerate(image.segments()):
        blob = b"".join(w.to_bytes(4, "little") for w in words)
        secs.append(elf.Section(".text" if k == 0 else f".text.{k}", elf.SHT_PROGBITS,
                                elf.SHF_ALLOC | elf.SHF_EXECINSTR, start, blob))
    for k, (base, blob) in enumerate(image.data):
        secs.append(elf.Section(f".data.{k}", elf.SHT_PROGBITS, elf.SHF_ALLOC | elf.SHF_WRITE, base, bytes(blob)))
    return elf.write_elf(image.entry, secs)
