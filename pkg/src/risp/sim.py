"""Single-cycle golden-model instruction set simulator.

Every retired instruction costs exactly one cycle.  A run stops on the
halt convention (``jal x0, 0``, which retires), on a trap, on an
instruction outside the configured subset, or after ``max_cycles``.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from . import isa
from .errors import (
    ExternalToolFailure,
    IllegalEncoding,
    NoRegionConfigured,
    NotHalted,
    RegisterOutOfRange,
    Trap,
)
from .profile import InstructionSubset, ProgramImage

HALTED = "halted"
TRAPPED = "trapped"
MAX_CYCLES_EXCEEDED = "max_cycles_exceeded"
SUBSET_VIOLATION = "subset_violation"
DEFAULT_MAX_CYCLES = 10_000_000


@dataclass(frozen=True)
class SimConfig:
    subset: InstructionSubset | None = None
    max_cycles: int = DEFAULT_MAX_CYCLES
    signature_region: tuple[int, int] | None = None
    trace: bool = False

    def __post_init__(self):
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be >= 1")
        if self.signature_region is not None:
            start, end = self.signature_region
            if start & 3 or end & 3 or end < start:
                raise ValueError(f"signature region must be 4-aligned with start <= end: {self.signature_region}")


@dataclass(frozen=True)
class RunResult:
    status: str
    cycles: int
    retired: int
    dynamic_counts: dict[str, int]
    pc: int
    regs: tuple[int, ...]
    signature: tuple[int, ...] | None = None
    trap_reason: str | None = None
    violation: tuple[str, int] | None = None
    unmapped_reads: int = 0
    trace: tuple[str, ...] = field(default=(), repr=False)

    @property
    def cpi(self) -> float:
        return self.cycles / self.retired if self.retired else float("nan")

    def write_trace(self, path) -> None:
        Path(path).write_text("".join(line + "\n" for line in self.trace))


class Simulator:
    """Mutable ISS core; ``run`` drives it, tests may single-step it."""

    def __init__(self, pc: int, regs=None, mem: dict | None = None, subset=None):
        self.pc = pc
        self.regs = list(regs) if regs is not None else [0] * isa.NUM_REGS
        self.mem = dict(mem or {})
        self.allowed = frozenset(subset) if subset is not None else None
        self.unmapped_reads = 0
        self.counts: Counter = Counter()
        self.retired = 0
        self.last_writeback = "-"
        self._decoded: dict[int, isa.DecodedInstruction] = {}

    @classmethod
    def from_state(cls, state: isa.MachineState, subset=None) -> Simulator:
        return cls(state.pc, state.regs, state.mem.as_dict(), subset)

    def to_state(self, status=isa.RUNNING, reason=None) -> isa.MachineState:
        return isa.MachineState(self.pc, tuple(self.regs), isa.Memory(self.mem), status, reason)

    def _read(self, addr: int, size: int) -> int:
        w = addr & ~3
        if w not in self.mem:
            self.unmapped_reads += 1
            return 0
        return (self.mem[w] >> 8 * (addr & 3)) & ((1 << 8 * size) - 1)

    def fetch(self) -> isa.DecodedInstruction:
        """Decode the word at pc; raises IllegalEncoding/RegisterOutOfRange."""
        if self.pc & 3:
            raise isa.MisalignedTarget(f"pc 0x{self.pc:08x}")
        word = self.mem.get(self.pc, 0)
        insn = self._decoded.get(word)
        if insn is None:
            insn = self._decoded[word] = isa.decode(word)
        return insn

    def step(self) -> isa.DecodedInstruction:
        """Execute one instruction; raises Trap subclasses without changing state."""
        insn = self.fetch()
        regs = self.regs
        eff = isa.effect(
            insn, self.pc,
            regs[insn.rs1] if insn.rs1 is not None else 0,
            regs[insn.rs2] if insn.rs2 is not None else 0,
            self._read,
        )
        wb = "-"
        if eff.rd:
            regs[eff.rd] = eff.rd_value
            wb = f"x{eff.rd}={eff.rd_value:08x}"
        if eff.store is not None:
            addr, size, value = eff.store
            isa.store_into(self.mem, addr, size, value)
            wb = f"mem[{addr:08x}]/{size}={value:0{2 * size}x}"
        self.last_writeback = wb
        self.pc = eff.next_pc
        self.retired += 1
        self.counts[insn.mnemonic] += 1
        return insn

    def words(self, start: int, end: int) -> tuple[int, ...]:
        return tuple(self.mem.get(a, 0) for a in range(start, end, 4))


def run(image: ProgramImage, cfg: SimConfig | None = None) -> RunResult:
    cfg = cfg or SimConfig()
    sim = Simulator(image.entry, mem=image.memory_words(), subset=cfg.subset)
    trace: list[str] = []
    status = MAX_CYCLES_EXCEEDED
    reason = violation = None
    cycles = 0
    while cycles < cfg.max_cycles:
        pc = sim.pc
        try:
            insn = sim.fetch()
        except (IllegalEncoding, RegisterOutOfRange, Trap) as exc:
            status, reason = TRAPPED, f"{type(exc).__name__}: {exc}"
            cycles += 1
            break
        if sim.allowed is not None and insn.mnemonic not in sim.allowed:
            status, violation = SUBSET_VIOLATION, (insn.mnemonic, pc)
            cycles += 1
            break
        try:
            sim.step()
        except Trap as exc:
            status, reason = TRAPPED, f"{type(exc).__name__}: {exc}"
            cycles += 1
            break
        cycles += 1
        if cfg.trace:
            trace.append(f"{cycles}\t{pc:08x}\t{insn.raw:08x}\t{insn.mnemonic}\t{sim.last_writeback}")
        if insn.raw == isa.HALT_WORD:
            status = HALTED
            break
    sig = sim.words(*cfg.signature_region) if cfg.signature_region is not None else None
    return RunResult(
        status=status,
        cycles=cycles,
        retired=sim.retired,
        dynamic_counts=dict(sim.counts),
        pc=sim.pc,
        regs=tuple(sim.regs),
        signature=sig,
        trap_reason=reason,
        violation=violation,
        unmapped_reads=sim.unmapped_reads,
        trace=tuple(trace),
    )


def format_signature(words) -> str:
    return "".join(f"{w & isa.MASK32:08x}\n" for w in words)


def signature(result: RunResult) -> str:
    if result.signature is None:
        raise NoRegionConfigured("run was not configured with a signature region")
    if result.status != HALTED:
        raise NotHalted(f"run ended with status {result.status}")
    return format_signature(result.signature)


def parse_region(text: str) -> tuple[int, int]:
    """``"0x2000:0x2040"`` -> (0x2000, 0x2040)."""
    start, _, end = text.partition(":")
    return int(start, 0), int(end, 0)


# ---------------------------------------------------------------------------
# differential check against an external RTL simulator

VERILATOR_CMD = (
    "verilator-cli --binary -Wno-fatal -Wno-lint -Wno-style --top-module tb "
    "-MAKEFLAGS PYTHON3=python3 -MAKEFLAGS CFG_CXXFLAGS_PCH_I=-include "
    "-MAKEFLAGS OPT_FAST=-O1 -MAKEFLAGS OPT_SLOW=-O0 "
    "-o simv {testbench} {rtl_files} > build.log 2>&1 "
    "&& ./obj_dir/simv"
)


@dataclass(frozen=True)
class Verdict:
    kind: str  # "match" | "mismatch" | "iss_only"
    reference: str
    observed: str | None = None
    first_diff: tuple[int, str, str] | None = None
    tb_result: str | None = None
    stdout: str = field(default="", repr=False)


def first_difference(expected: str, observed: str) -> tuple[int, str, str] | None:
    a, b = expected.splitlines(), observed.splitlines()
    for i in range(max(len(a), len(b))):
        ea = a[i] if i < len(a) else "<missing>"
        ob = b[i] if i < len(b) else "<missing>"
        if ea != ob:
            return i, ea, ob
    return None


def differential_check(image: ProgramImage, design, signature_region: tuple[int, int],
                       external_sim_cmd: str | None = None, workdir=None,
                       timeout: float = 900, max_cycles: int = 2_000_000) -> Verdict:
    """Compare the ISS signature with an RTL run of ``design`` on ``image``.

    ``external_sim_cmd`` is a shell command template with ``{testbench}``,
    ``{rtl_files}`` and ``{workdir}`` placeholders, run inside the work
    directory; the testbench writes ``signature.txt`` there.
    """
    from . import gen

    gen.check_program_subset(image, design)
    result = run(image, SimConfig(subset=design.subset, max_cycles=max_cycles,
                                  signature_region=signature_region))
    reference = signature(result)
    if external_sim_cmd is None:
        return Verdict("iss_only", reference)

    tmp = None
    if workdir is None:
        tmp = tempfile.TemporaryDirectory(prefix="risp-diff-")
        workdir = tmp.name
    try:
        work = Path(workdir)
        work.mkdir(parents=True, exist_ok=True)
        manifest = gen.emit_rtl(design, work / "rtl")
        tb = work / "tb.v"
        tb.write_text(gen.emit_integration_testbench(design, image, signature_region,
                                                     max_cycles=max_cycles, expected=result))
        rtl_files = " ".join(shlex.quote(str(work / "rtl" / f)) for f in manifest["files"])
        cmd = external_sim_cmd.format(testbench=shlex.quote(str(tb)), rtl_files=rtl_files,
                                      workdir=shlex.quote(str(work)))
        sig_path = work / "signature.txt"
        sig_path.unlink(missing_ok=True)
        proc = subprocess.run(cmd, shell=True, cwd=work, capture_output=True, text=True, timeout=timeout)
        if proc.returncode != 0 or not sig_path.exists():
            log = (work / "build.log").read_text(errors="replace") if (work / "build.log").exists() else ""
            raise ExternalToolFailure(proc.returncode, proc.stderr + proc.stdout + log)
        observed = sig_path.read_text()
    finally:
        if tmp is not None:
            tmp.cleanup()
    tb_result = None
    for line in proc.stdout.splitlines():
        if line.startswith("TB_RESULT:"):
            tb_result = line.split(":", 1)[1].strip()
    diff = first_difference(reference, observed)
    return Verdict("match" if diff is None else "mismatch", reference, observed, diff, tb_result, proc.stdout)
