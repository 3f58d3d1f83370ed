"""Self-checking Verilog testbenches for single blocks."""

from __future__ import annotations

from .library import INPUT_PORTS, OUTPUT_PORTS, HardwareBlock
from .vectors import TestVector


def _lit(width: int, value: int) -> str:
    return f"{width}'h{value:0{(width + 3) // 4}x}"


def emit_block_testbench(block: HardwareBlock, vectors: list[TestVector], module_name: str = "tb",
                         finish: bool = True) -> str:
    """Testbench driving ``vectors`` into ``block`` with one check per vector.

    Prints ``PASS vector i`` / ``FAIL vector i ...`` lines and a final
    ``TB_RESULT: PASS|FAIL``.  With ``finish=False`` the module raises
    ``done`` instead of calling ``$finish`` so several benches can share one
    simulation.
    """
    if not vectors:
        raise ValueError("at least one vector is required")
    L = []
    L.append("`timescale 1ns/1ps")
    L.append(f"// {len(vectors)} vectors for {block.mnemonic}, seed {block.vector_seed}")
    L.append(f"module {module_name}(output reg done, output integer errors);")
    for name, w in INPUT_PORTS:
        L.append(f"    reg  [{w - 1}:0] {name};")
    for name, w in OUTPUT_PORTS:
        L.append(f"    wire [{w - 1}:0] {name};")
    conns = ", ".join(f".{n}({n})" for n, _ in INPUT_PORTS + OUTPUT_PORTS)
    L.append(f"    {block.module_name} dut ({conns});")
    L.append("")
    L.append("    task check_vector;")
    L.append("        input integer idx;")
    for name, w in OUTPUT_PORTS:
        L.append(f"        input [{w - 1}:0] e_{name};")
    L.append("        begin")
    cmp = " || ".join(f"{n} !== e_{n}" for n, _ in OUTPUT_PORTS)
    L.append(f"            if ({cmp}) begin")
    L.append("                errors = errors + 1;")
    fmt = " ".join(f"{n}=%h/%h" for n, _ in OUTPUT_PORTS)
    args = ", ".join(f"{n}, e_{n}" for n, _ in OUTPUT_PORTS)
    L.append(f'                $display("FAIL vector %0d {block.mnemonic}: {fmt}", idx, {args});')
    L.append("            end else begin")
    L.append(f'                $display("PASS vector %0d {block.mnemonic}", idx);')
    L.append("            end")
    L.append("        end")
    L.append("    endtask")
    L.append("")
    L.append("    initial begin")
    L.append("        done = 1'b0;")
    L.append("        errors = 0;")
    for i, v in enumerate(vectors):
        drive = " ".join(f"{n} = {_lit(w, v.stimulus[n])};" for n, w in INPUT_PORTS)
        L.append(f"        {drive}")
        L.append("        #1;")
        exp = ", ".join(_lit(w, v.expected[n]) for n, w in OUTPUT_PORTS)
        L.append(f"        check_vector({i}, {exp});")
    L.append("        if (errors == 0)")
    L.append(f'            $display("TB_RESULT: PASS {block.mnemonic}");')
    L.append("        else")
    L.append(f'            $display("TB_RESULT: FAIL {block.mnemonic} (%0d errors)", errors);')
    L.append("        done = 1'b1;")
    if finish:
        L.append("        $finish;")
    L.append("    end")
    L.append("endmodule")
    return "\n".join(L) + "\n"


def emit_suite_top(bench_modules: list[str], module_name: str = "tb") -> str:
    """Top module instantiating several ``finish=False`` benches."""
    L = ["`timescale 1ns/1ps", f"module {module_name};"]
    for i, m in enumerate(bench_modules):
        L.append(f"    wire d{i}; integer e{i};")
        L.append(f"    {m} b{i} (.done(d{i}), .errors(e{i}));")
    alldone = " & ".join(f"d{i}" for i in range(len(bench_modules)))
    L.append("    initial begin")
    L.append(f"        wait ({alldone});")
    L.append("        #1 $finish;")
    L.append("    end")
    L.append("endmodule")
    return "\n".join(L) + "\n"
