"""Compose a RISP from library blocks and emit Verilog.

The emitted design is single-cycle.  ``risp_modularex`` instantiates one
block per subset instruction and routes the selected block's outputs with
a ``casez`` on {funct7, funct3, opcode}; anything that matches no case
traps.  ``risp_top`` holds the PC and (optionally) the 15-entry register
file in one clocked process and freezes on a trap.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from . import isa
from .blocklib import HardwareBlock, get_block
from .blocklib.library import INPUT_PORTS, OUTPUT_PORTS
from .errors import EmptySubset, IoFailure, StructureMismatch, SubsetViolation
from .profile import InstructionSubset, ProgramImage, profile

GENERATOR_VERSION = "1"
MEM_BYTES = 0x40000
TOP_MODULE = "risp_top"
EX_MODULE = "risp_modularex"


@dataclass(frozen=True)
class RispDesign:
    name: str
    subset: InstructionSubset
    blocks: tuple[HardwareBlock, ...]
    with_regfile: bool = True
    reset_pc: int = 0

    @property
    def mnemonics(self) -> tuple[str, ...]:
        return self.subset.mnemonics


def build_design(subset, name: str | None = None, with_regfile: bool = True, reset_pc: int = 0) -> RispDesign:
    if not isinstance(subset, InstructionSubset):
        subset = InstructionSubset.of(subset)
    if not len(subset):
        raise EmptySubset("a RISP needs at least one instruction")
    blocks = tuple(get_block(m) for m in subset.mnemonics)
    name = name or subset.label or f"risp_{len(subset)}"
    return RispDesign(_ident(name), subset, blocks, with_regfile, reset_pc)


def _ident(name: str) -> str:
    s = re.sub(r"\W", "_", name)
    return s if s and not s[0].isdigit() else f"d_{s}"


def case_pattern(spec: isa.InstructionSpec) -> str:
    f7 = f"{spec.funct7:07b}" if spec.funct7 is not None else "???????"
    f3 = f"{spec.funct3:03b}" if spec.funct3 is not None else "???"
    return f"17'b{f7}_{f3}_{spec.opcode:07b}"


def _width(w: int) -> str:
    return f"[{w - 1}:0] " if w > 1 else ""


def emit_modularex(design: RispDesign) -> str:
    L = [f"// Instruction dispatch for {design.name}: {len(design.blocks)} blocks",
         f"module {EX_MODULE} ("]
    ports = [f"    input  wire {_width(w)}{n}" for n, w in INPUT_PORTS]
    ports += [f"    output reg  {_width(w)}{n}" for n, w in OUTPUT_PORTS]
    L.append(",\n".join(ports))
    L.append(");")
    for b in design.blocks:
        mn = b.mnemonic
        for n, w in OUTPUT_PORTS:
            L.append(f"    wire {_width(w)}w_{mn}__{n};")
        conns = [f".{n}({n})" for n, _ in INPUT_PORTS] + [f".{n}(w_{mn}__{n})" for n, _ in OUTPUT_PORTS]
        L.append(f"    {b.module_name} u_{mn} ({', '.join(conns)});")
    L.append("")
    L.append("    always @* begin")
    L.append("        casez ({insn[31:25], insn[14:12], insn[6:0]})")
    for b in design.blocks:
        mn = b.mnemonic
        L.append(f"            {case_pattern(b.spec)}: begin  // {mn}")
        for n, _ in OUTPUT_PORTS:
            L.append(f"                {n} = w_{mn}__{n};")
        L.append("            end")
    L.append("            default: begin")
    for n, w in OUTPUT_PORTS:
        val = "pc" if n == "next_pc" else "1'b1" if n == "trap" else f"{w}'d0"
        L.append(f"                {n} = {val};")
    L.append("            end")
    L.append("        endcase")
    L.append("    end")
    L.append("endmodule")
    return "\n".join(L) + "\n"


def emit_top(design: RispDesign) -> str:
    rf = design.with_regfile
    ports = [
        "    input  wire        clk",
        "    input  wire        rst_n",
        "    output wire [31:0] imem_addr",
        "    input  wire [31:0] imem_rdata",
        "    output wire [31:0] dmem_addr",
        "    input  wire [31:0] dmem_rdata",
        "    output wire [31:0] dmem_wdata",
        "    output wire        dmem_we",
        "    output wire [3:0]  dmem_be",
        "    output wire        halted",
        "    output wire        trap",
        "    output wire [31:0] pc_out",
    ]
    if not rf:
        ports += [
            "    output wire [3:0]  rf_rs1_addr",
            "    output wire [3:0]  rf_rs2_addr",
            "    input  wire [31:0] rf_rs1_data",
            "    input  wire [31:0] rf_rs2_data",
            "    output wire        rf_we",
            "    output wire [3:0]  rf_waddr",
            "    output wire [31:0] rf_wdata",
        ]
    L = [f"// {design.name}: single-cycle RV32E subset processor ({len(design.blocks)} instructions)",
         f"module {TOP_MODULE} #(parameter RESET_PC = 32'h{design.reset_pc:08x}) ("]
    L.append(",\n".join(ports))
    L.append(");")
    L.append("    reg  [31:0] pc;")
    L.append("    wire [31:0] insn = imem_rdata;")
    L.append("    wire [3:0]  rs1 = insn[18:15];")
    L.append("    wire [3:0]  rs2 = insn[23:20];")
    L.append("    wire [3:0]  rd = insn[10:7];")
    if rf:
        L.append("    reg  [31:0] rf [1:15];")
        L.append("    wire [31:0] rs1_value = (rs1 == 4'd0) ? 32'd0 : rf[rs1];")
        L.append("    wire [31:0] rs2_value = (rs2 == 4'd0) ? 32'd0 : rf[rs2];")
    else:
        L.append("    wire [31:0] rs1_value = (rs1 == 4'd0) ? 32'd0 : rf_rs1_data;")
        L.append("    wire [31:0] rs2_value = (rs2 == 4'd0) ? 32'd0 : rf_rs2_data;")
    for n, w in OUTPUT_PORTS:
        L.append(f"    wire {_width(w)}ex_{n};")
    conns = [f".{n}({n})" for n in ("insn", "pc", "rs1_value", "rs2_value")] + [".mem_rdata(dmem_rdata)"]
    conns += [f".{n}(ex_{n})" for n, _ in OUTPUT_PORTS]
    L.append(f"    {EX_MODULE} u_modularex ({', '.join(conns)});")
    L.append("")
    L.append("    assign imem_addr = pc;")
    L.append("    assign pc_out = pc;")
    L.append("    assign dmem_addr = ex_mem_addr;")
    L.append("    assign dmem_wdata = ex_mem_wdata;")
    L.append("    assign dmem_we = ex_mem_write_enable & rst_n;")
    L.append("    assign dmem_be = ex_byte_enables;")
    L.append("    assign trap = ex_trap;")
    L.append(f"    assign halted = (insn == 32'h{isa.HALT_WORD:08x});")
    if not rf:
        L.append("    assign rf_rs1_addr = rs1;")
        L.append("    assign rf_rs2_addr = rs2;")
        L.append("    assign rf_we = ex_rd_write_enable & (rd != 4'd0) & rst_n;")
        L.append("    assign rf_waddr = rd;")
        L.append("    assign rf_wdata = ex_rd_value;")
    L.append("")
    if rf:
        L.append("    integer i;")
    L.append("    always @(posedge clk) begin")
    L.append("        if (!rst_n) begin")
    L.append("            pc <= RESET_PC;")
    if rf:
        L.append("            for (i = 1; i < 16; i = i + 1)")
        L.append("                rf[i] <= 32'd0;")
    L.append("        end else if (!ex_trap) begin")
    L.append("            pc <= ex_next_pc;")
    if rf:
        L.append("            if (ex_rd_write_enable && rd != 4'd0)")
        L.append("                rf[rd] <= ex_rd_value;")
    L.append("        end")
    L.append("    end")
    L.append("endmodule")
    return "\n".join(L) + "\n"


def design_manifest(design: RispDesign) -> dict:
    blocks = [{"mnemonic": b.mnemonic, "module": b.module_name, "instance": f"u_{b.mnemonic}",
               "file": f"{b.module_name}.v", "template": b.template_file, "vector_seed": b.vector_seed}
              for b in design.blocks]
    return {
        "design_name": design.name,
        "subset": list(design.mnemonics),
        "n_instructions": len(design.blocks),
        "n_cases": len(design.blocks),
        "options": {"with_regfile": design.with_regfile, "reset_pc": design.reset_pc},
        "with_regfile": design.with_regfile,
        "reset_pc": design.reset_pc,
        "top": TOP_MODULE,
        "blocks": blocks,
        "files": [b["file"] for b in blocks] + ["modularex.v", "risp_top.v"],
        "generator_version": GENERATOR_VERSION,
    }


def emit_rtl(design: RispDesign, out_dir) -> dict:
    """Write block, dispatch and top files plus ``manifest.json``; return the manifest."""
    out = Path(out_dir)
    man = design_manifest(design)
    texts = {f"{b.module_name}.v": b.render() for b in design.blocks}
    texts["modularex.v"] = emit_modularex(design)
    texts["risp_top.v"] = emit_top(design)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for fname, text in texts.items():
            (out / fname).write_text(text)
        (out / "manifest.json").write_text(json.dumps(man, indent=2) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write RTL to {out}: {exc}") from exc
    return man


_MODULE_RE = re.compile(r"^\s*module\s+(\w+)", re.M)
_INST_RE = re.compile(r"^\s*(risp_blk_\w+)\s+(u_\w+)\s*\(", re.M)
_CASE_RE = re.compile(r"^\s*17'b[01?_]+\s*:", re.M)


def validate_structure(rtl_dir, subset=None) -> dict:
    """Check an emitted RTL directory against its manifest (and ``subset`` if given).

    Every subset instruction must have exactly one block module, one
    instance in the dispatch and one case; nothing else may be present.
    Returns a summary dict, raises StructureMismatch on any violation.
    """
    d = Path(rtl_dir)
    try:
        man = json.loads((d / "manifest.json").read_text())
    except (OSError, ValueError) as exc:
        raise StructureMismatch(f"unreadable manifest in {d}: {exc}") from exc
    want = sorted(subset if subset is not None else man["subset"])
    problems = []
    if sorted(man["subset"]) != want:
        problems.append(f"manifest subset {man['subset']} != {want}")
    modules: dict[str, int] = {}
    for f in man["files"]:
        p = d / f
        if not p.exists():
            problems.append(f"missing file {f}")
            continue
        for m in _MODULE_RE.findall(p.read_text()):
            modules[m] = modules.get(m, 0) + 1
    block_mods = {m for m in modules if m.startswith("risp_blk_")}
    expected_mods = {f"risp_blk_{m}" for m in want}
    if block_mods != expected_mods:
        problems.append(f"block modules differ: extra {sorted(block_mods - expected_mods)}, "
                        f"missing {sorted(expected_mods - block_mods)}")
    dup = sorted(m for m, c in modules.items() if c > 1)
    if dup:
        problems.append(f"duplicate modules {dup}")
    for m in (EX_MODULE, TOP_MODULE):
        if m not in modules:
            problems.append(f"missing module {m}")
    ex = (d / "modularex.v").read_text() if (d / "modularex.v").exists() else ""
    inst = _INST_RE.findall(ex)
    inst_mn = sorted(i[len("u_"):] for _, i in inst)
    if inst_mn != want:
        problems.append(f"dispatch instances {inst_mn} != {want}")
    n_cases = len(_CASE_RE.findall(ex))
    if n_cases != len(want):
        problems.append(f"dispatch has {n_cases} cases for {len(want)} instructions")
    if ex and ex.count("default:") != 1:
        problems.append("dispatch must have exactly one default (trap) arm")
    if problems:
        raise StructureMismatch("; ".join(problems))
    return {"design_name": man["design_name"], "blocks": len(want), "cases": n_cases, "files": len(man["files"])}


def check_program_subset(image: ProgramImage, design) -> None:
    """Raise SubsetViolation if ``image`` uses instructions ``design`` lacks."""
    subset = design.subset if isinstance(design, RispDesign) else design
    extra = sorted(set(profile(image).distinct) - set(subset))
    if extra:
        raise SubsetViolation(extra)


# ---------------------------------------------------------------------------
# integration testbench


def emit_integration_testbench(design: RispDesign, image: ProgramImage,
                               signature_region: tuple[int, int] | None = None,
                               max_cycles: int = 2_000_000, expected=None) -> str:
    """Whole-processor bench: runs ``image`` until halt, trap or ``max_cycles``.

    The signature region is dumped to ``signature.txt``; when ``expected``
    (a RunResult or a list of words) is given the bench also compares and
    prints ``TB_RESULT: PASS|FAIL``.
    """
    check_program_subset(image, design)
    mem = image.memory_words()
    if any(a >= MEM_BYTES for a in mem):
        raise ValueError(f"image does not fit the {MEM_BYTES:#x}-byte bench memory")
    exp_words = None
    if expected is not None:
        exp_words = list(getattr(expected, "signature", expected) or [])
    addr_bits = (MEM_BYTES - 1).bit_length()
    words = MEM_BYTES // 4
    rf = design.with_regfile
    L = ["`timescale 1ns/1ps",
         f"// integration bench: {image.name} on {design.name}",
         "module tb;",
         "    reg clk = 1'b0;",
         "    reg rst_n = 1'b0;",
         f"    reg [31:0] mem [0:{words - 1}];",
         "    wire [31:0] imem_addr, dmem_addr, dmem_wdata, pc_out;",
         "    wire dmem_we, halted, trap;",
         "    wire [3:0] dmem_be;",
         f"    wire [31:0] imem_rdata = mem[imem_addr[{addr_bits - 1}:2]];",
         f"    wire [31:0] dmem_rdata = mem[dmem_addr[{addr_bits - 1}:2]];",
         "    integer cycles, errors, fd, i;"]
    extra = ""
    if not rf:
        L += ["    reg [31:0] regs [0:15];",
              "    wire [3:0] rf_rs1_addr, rf_rs2_addr, rf_waddr;",
              "    wire [31:0] rf_wdata;",
              "    wire rf_we;",
              "    wire [31:0] rf_rs1_data = regs[rf_rs1_addr];",
              "    wire [31:0] rf_rs2_data = regs[rf_rs2_addr];"]
        extra = (", .rf_rs1_addr(rf_rs1_addr), .rf_rs2_addr(rf_rs2_addr), .rf_rs1_data(rf_rs1_data), "
                 ".rf_rs2_data(rf_rs2_data), .rf_we(rf_we), .rf_waddr(rf_waddr), .rf_wdata(rf_wdata)")
    L.append(f"    {TOP_MODULE} #(.RESET_PC(32'h{image.entry:08x})) dut (.clk(clk), .rst_n(rst_n), "
             ".imem_addr(imem_addr), .imem_rdata(imem_rdata), .dmem_addr(dmem_addr), "
             ".dmem_rdata(dmem_rdata), .dmem_wdata(dmem_wdata), .dmem_we(dmem_we), .dmem_be(dmem_be), "
             f".halted(halted), .trap(trap), .pc_out(pc_out){extra});")
    L.append("")
    L.append("    always #5 clk = ~clk;")
    L.append("")
    L.append("    task dump_signature;")
    L.append("        begin")
    if signature_region is not None:
        start, end = signature_region
        L.append('            fd = $fopen("signature.txt", "w");')
        L.append(f"            for (i = {start // 4}; i < {end // 4}; i = i + 1)")
        L.append('                $fwrite(fd, "%h\\n", mem[i]);')
        L.append("            $fclose(fd);")
    else:
        L.append('            $display("no signature region");')
    L.append("        end")
    L.append("    endtask")
    L.append("")
    L.append("    task compare_signature;")
    L.append("        begin")
    L.append("            errors = 0;")
    if exp_words is not None and signature_region is not None:
        base = signature_region[0] // 4
        for k, w in enumerate(exp_words):
            L.append(f"            if (mem[{base + k}] !== 32'h{w:08x}) errors = errors + 1;")
    L.append("        end")
    L.append("    endtask")
    L.append("")
    L.append("    task finish_run;")
    L.append("        input [8*16-1:0] why;")
    L.append("        begin")
    L.append("            dump_signature;")
    L.append("            compare_signature;")
    L.append('            $display("TB_STATUS: %0s cycles=%0d pc=%h", why, cycles, pc_out);')
    if exp_words is not None:
        L.append('            if (why == "halted" && errors == 0) $display("TB_RESULT: PASS");')
        L.append('            else $display("TB_RESULT: FAIL (%0d signature mismatches)", errors);')
    L.append("            $finish;")
    L.append("        end")
    L.append("    endtask")
    L.append("")
    L.append("    initial begin")
    L.append(f"        for (i = 0; i < {words}; i = i + 1) mem[i] = 32'd0;")
    if not rf:
        L.append("        for (i = 0; i < 16; i = i + 1) regs[i] = 32'd0;")
    for a in sorted(mem):
        if mem[a]:
            L.append(f"        mem[{a // 4}] = 32'h{mem[a]:08x};")
    L.append("        cycles = 0;")
    L.append("        @(posedge clk);")
    L.append("        #1 rst_n = 1'b1;")
    L.append("    end")
    L.append("")
    L.append("    always @(posedge clk) begin")
    L.append("        if (rst_n) begin")
    L.append("            if (dmem_we) begin")
    for lane in range(4):
        lo, hi = 8 * lane, 8 * lane + 7
        L.append(f"                if (dmem_be[{lane}]) mem[dmem_addr[{addr_bits - 1}:2]][{hi}:{lo}] <= dmem_wdata[{hi}:{lo}];")
    L.append("            end")
    if not rf:
        L.append("            if (rf_we) regs[rf_waddr] <= rf_wdata;")
    L.append("            cycles = cycles + 1;")
    L.append('            if (halted) finish_run("halted");')
    L.append('            else if (trap) finish_run("trapped");')
    L.append(f'            else if (cycles >= {max_cycles}) finish_run("max_cycles");')
    L.append("        end")
    L.append("    end")
    L.append("endmodule")
    return "\n".join(L) + "\n"
