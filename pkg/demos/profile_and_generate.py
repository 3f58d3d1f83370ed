"""Profile a bundled program, build a RISP for exactly its instructions and
check it against the golden model.

    python demos/profile_and_generate.py [program] [outdir]
"""

import sys
import tempfile
from pathlib import Path

from risp import gen, metrics, programs, sim
from risp.profile import profile
from risp.sim import SimConfig


def main(name="crc32", out=None):
    bp = programs.get(name)
    image = bp.image()

    prof = profile(image)
    print(prof.table())
    print(f"\n{name} uses {len(prof.distinct)} of 37 RV32E instructions")

    design = gen.build_design(prof.distinct, f"{name}_risp")
    out = Path(out or tempfile.mkdtemp(prefix="risp-demo-"))
    man = gen.emit_rtl(design, out)
    summary = gen.validate_structure(out, design.subset)
    print(f"wrote {len(man['files'])} Verilog files to {out}, ModularEX has {summary['cases']} cases")

    res = sim.run(image, SimConfig(subset=design.subset, signature_region=bp.signature_region))
    print(f"ISS restricted to the subset: {res.status}, {res.cycles} cycles, CPI {res.cpi:.0f}")
    print("signature:", " ".join(f"{w:08x}" for w in res.signature))
    (out / "tb.v").write_text(gen.emit_integration_testbench(design, image, bp.signature_region, expected=res))
    print("integration testbench: tb.v (run it with any Verilog simulator, or `risp sim --rtl-cmd verilator`)")

    r = metrics.report(design)
    print(f"\nestimated {r.nand2} NAND2, {r.power_mW:.3f} mW, {r.epi_nJ:.3f} nJ/instruction at {r.fmax_kHz:.0f} kHz")


if __name__ == "__main__":
    main(*sys.argv[1:])
