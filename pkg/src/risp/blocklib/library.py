"""The pre-verified instruction hardware block library.

Blocks are data: each entry of ``manifest.json`` names a Verilog template
under ``templates/`` and the vector seed it was qualified with.  Templates
carry ``{{MNEMONIC}}``, ``{{OPCODE}}``, ``{{FUNCT3}}`` and ``{{FUNCT7}}``
slots which are filled from the ISA registry at render time.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .. import isa
from ..errors import UnknownInstruction

INPUT_PORTS = (("insn", 32), ("pc", 32), ("rs1_value", 32), ("rs2_value", 32), ("mem_rdata", 32))
OUTPUT_PORTS = (
    ("rd_value", 32),
    ("rd_write_enable", 1),
    ("mem_addr", 32),
    ("mem_wdata", 32),
    ("mem_write_enable", 1),
    ("byte_enables", 4),
    ("next_pc", 32),
    ("pc_select", 1),
    ("trap", 1),
)
OUTPUT_NAMES = tuple(name for name, _ in OUTPUT_PORTS)
INPUT_NAMES = tuple(name for name, _ in INPUT_PORTS)
PORT_WIDTH = dict(INPUT_PORTS + OUTPUT_PORTS)


@dataclass(frozen=True)
class BlockInterface:
    inputs: tuple[tuple[str, int], ...] = INPUT_PORTS
    outputs: tuple[tuple[str, int], ...] = OUTPUT_PORTS

    def port_list(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.inputs) + tuple(n for n, _ in self.outputs)


STANDARD_INTERFACE = BlockInterface()


@dataclass(frozen=True)
class HardwareBlock:
    mnemonic: str
    format: str
    interface: BlockInterface
    rtl_template: str
    template_file: str
    semantic_id: str
    vector_seed: int

    @property
    def spec(self) -> isa.InstructionSpec:
        return isa.REGISTRY[self.semantic_id]

    @property
    def module_name(self) -> str:
        return f"risp_blk_{self.mnemonic}"

    def render(self) -> str:
        return render_template(self.rtl_template, self.spec)

    def evaluate(self, stimulus, mutation=None) -> dict:
        from .models import evaluate

        return evaluate(self.mnemonic, stimulus, mutation)


_SLOT = re.compile(r"\{\{(\w+)\}\}")


def render_template(template: str, spec: isa.InstructionSpec) -> str:
    values = {
        "MNEMONIC": spec.mnemonic,
        "OPCODE": f"{spec.opcode:07b}",
        "FUNCT3": f"{spec.funct3:03b}" if spec.funct3 is not None else None,
        "FUNCT7": f"{spec.funct7:07b}" if spec.funct7 is not None else None,
    }

    def sub(m):
        v = values.get(m.group(1))
        if v is None:
            raise ValueError(f"template for {spec.mnemonic} uses slot {m.group(0)} with no value")
        return v

    return _SLOT.sub(sub, template)


def _assets():
    return resources.files(__package__)


@lru_cache(maxsize=None)
def manifest() -> tuple[dict, ...]:
    return tuple(json.loads((_assets() / "manifest.json").read_text()))


@lru_cache(maxsize=None)
def library() -> dict[str, HardwareBlock]:
    blocks = {}
    for entry in manifest():
        m = entry["mnemonic"]
        spec = isa.REGISTRY[m]
        if spec.format != entry["format"]:
            raise ValueError(f"manifest format for {m} disagrees with the ISA registry")
        text = (_assets() / "templates" / entry["template_file"]).read_text()
        blocks[m] = HardwareBlock(m, spec.format, STANDARD_INTERFACE, text, entry["template_file"],
                                  spec.semantic_id, int(entry["vector_seed"]))
    return blocks


def get_block(mnemonic: str) -> HardwareBlock:
    try:
        return library()[mnemonic]
    except KeyError:
        raise UnknownInstruction(f"no hardware block for {mnemonic!r}") from None
