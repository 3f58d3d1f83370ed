"""Bundled RV32E benchmark programs (ELF images built from ``src/``)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..profile import ProgramImage, load_image


@dataclass(frozen=True)
class BundledProgram:
    name: str
    elf: str
    source: str
    signature_region: tuple[int, int]

    def image(self) -> ProgramImage:
        with resources.as_file(resources.files(__name__) / self.elf) as path:
            return load_image(path)


@lru_cache(maxsize=None)
def catalog() -> tuple[BundledProgram, ...]:
    rows = json.loads((resources.files(__name__) / "programs.json").read_text())
    return tuple(BundledProgram(r["name"], r["elf"], r["source"], tuple(r["signature"])) for r in rows)


def names() -> list[str]:
    return [p.name for p in catalog()]


def get(name: str) -> BundledProgram:
    for p in catalog():
        if p.name == name:
            return p
    raise KeyError(f"no bundled program {name!r}; have {', '.join(names())}")
