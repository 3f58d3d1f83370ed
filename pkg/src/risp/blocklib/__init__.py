"""Pre-verified instruction hardware blocks."""

from .library import (
    INPUT_NAMES,
    INPUT_PORTS,
    OUTPUT_NAMES,
    OUTPUT_PORTS,
    STANDARD_INTERFACE,
    BlockInterface,
    HardwareBlock,
    get_block,
    library,
    manifest,
    render_template,
)
from .models import MutationReport, catalog, evaluate, model_agrees, mutation_smoke
from .testbench import emit_block_testbench, emit_suite_top
from .vectors import MIN_VECTORS, TestVector, gen_vectors, golden, trap_outputs, vector

__all__ = [
    "INPUT_NAMES", "INPUT_PORTS", "OUTPUT_NAMES", "OUTPUT_PORTS", "STANDARD_INTERFACE", "BlockInterface",
    "HardwareBlock", "get_block", "library", "manifest", "render_template", "MutationReport", "catalog",
    "evaluate", "model_agrees", "mutation_smoke", "emit_block_testbench", "emit_suite_top",
    "MIN_VECTORS", "TestVector", "gen_vectors", "golden", "trap_outputs", "vector",
]
