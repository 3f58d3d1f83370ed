"""Minimal little-endian ELF32 section reader (RISC-V only).

Only section headers are consulted; symbols and relocations are ignored.
"""

import struct
from dataclasses import dataclass

from .errors import UnsupportedFormat

EM_RISCV = 243
SHT_PROGBITS = 1
SHT_NOBITS = 8
SHF_WRITE = 0x1
SHF_ALLOC = 0x2
SHF_EXECINSTR = 0x4


@dataclass(frozen=True)
class Section:
    name: str
    type: int
    flags: int
    addr: int
    data: bytes

    @property
    def executable(self) -> bool:
        return self.type == SHT_PROGBITS and bool(self.flags & SHF_EXECINSTR)

    @property
    def loadable_data(self) -> bool:
        return self.type == SHT_PROGBITS and bool(self.flags & SHF_ALLOC) and not self.executable


def is_elf(blob: bytes) -> bool:
    return blob[:4] == b"\x7fELF"


def read_sections(blob: bytes) -> tuple[int, list[Section]]:
    """Return (entry, sections) of an ELF32 LE RISC-V file."""
    if not is_elf(blob):
        raise UnsupportedFormat("not an ELF file")
    if len(blob) < 52 or blob[4] != 1 or blob[5] != 1:
        raise UnsupportedFormat("only little-endian ELF32 is supported")
    (e_machine,) = struct.unpack_from("<H", blob, 18)
    if e_machine != EM_RISCV:
        raise UnsupportedFormat(f"ELF machine {e_machine} is not RISC-V ({EM_RISCV})")
    (entry,) = struct.unpack_from("<I", blob, 24)
    (shoff,) = struct.unpack_from("<I", blob, 32)
    shentsize, shnum, shstrndx = struct.unpack_from("<HHH", blob, 46)
    if shoff == 0 or shnum == 0:
        return entry, []
    if shentsize < 40 or shoff + shnum * shentsize > len(blob):
        raise UnsupportedFormat("truncated section header table")
    raw = [struct.unpack_from("<10I", blob, shoff + i * shentsize) for i in range(shnum)]
    strtab_off = raw[shstrndx][4] if shstrndx < shnum else 0
    sections = []
    for name_off, sh_type, flags, addr, offset, size, *_ in raw:
        end = blob.find(b"\0", strtab_off + name_off)
        name = blob[strtab_off + name_off:end].decode("ascii", "replace") if strtab_off else ""
        data = b"" if sh_type == SHT_NOBITS else blob[offset:offset + size]
        sections.append(Section(name, sh_type, flags, addr, data))
    return entry, sections


def write_elf(entry: int, sections: list[Section]) -> bytes:
    """Serialise ``sections`` as an ELF32 LE RISC-V executable (PT_LOAD per section)."""
    names = b"\0.shstrtab\0"
    name_off = []
    for s in sections:
        name_off.append(len(names))
        names += s.name.encode("ascii") + b"\0"
    phnum = len(sections)
    body_off = 52 + 32 * phnum
    offsets, body = [], b""
    for s in sections:
        body += b"\0" * (-(body_off + len(body)) % 4)
        offsets.append(body_off + len(body))
        body += s.data
    strtab_off = body_off + len(body)
    body += names
    body += b"\0" * (-(body_off + len(body)) % 4)
    shoff = body_off + len(body)
    header = b"\x7fELF" + bytes([1, 1, 1, 0]) + b"\0" * 8
    header += struct.pack("<HHIIIIIHHHHHH", 2, EM_RISCV, 1, entry, 52, shoff, 0x4, 52, 32, phnum, 40,
                          len(sections) + 2, len(sections) + 1)
    phdrs = b""
    for s, off in zip(sections, offsets):
        flags = 4 | (2 if s.flags & SHF_WRITE else 0) | (1 if s.flags & SHF_EXECINSTR else 0)
        phdrs += struct.pack("<8I", 1, off, s.addr, s.addr, len(s.data), len(s.data), flags, 4)
    shdrs = b"\0" * 40
    for s, off, n in zip(sections, offsets, name_off):
        shdrs += struct.pack("<10I", n, s.type, s.flags, s.addr, off, len(s.data), 0, 0, 4, 0)
    shdrs += struct.pack("<10I", 1, 3, 0, 0, strtab_off, len(names), 0, 0, 1, 0)
    return header + phdrs + body + shdrs
