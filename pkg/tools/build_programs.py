"""Rebuild the bundled sample programs with the clang/lld shipped in ``ziglang``.

    pip install ziglang && python3 tools/build_programs.py

Writes ``src/risp/programs/<name>.elf`` and ``programs.json``.  Code is
compiled for RV32E (ilp32e) with x5/x6 reserved as retargeting scratch.
"""

import argparse
import json
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
PROG = ROOT / "src" / "risp" / "programs"
SRC = PROG / "src"
sys.path.insert(0, str(ROOT / "src"))

from risp import elf  # noqa: E402

ZIG = [sys.executable, "-m", "ziglang"]
CFLAGS = ["-target", "riscv32-freestanding-none", "-mcpu=generic_rv32+e", "-O2", "-g0", "-ffreestanding",
          "-fno-builtin", "-fno-jump-tables", "-fno-unroll-loops", "-fomit-frame-pointer", "-mno-relax",
          "-fno-pic"]
# the zig driver drops -ffixed-xN, so reserve the scratch registers at the target-feature level
for _r in ("x5", "x6"):
    CFLAGS += ["-Xclang", "-target-feature", "-Xclang", f"+reserve-{_r}"]


def signature_region(blob: bytes) -> tuple[int, int]:
    _, sections = elf.read_sections(blob)
    for s in sections:
        if s.name == ".signature":
            return s.addr, s.addr + ((len(s.data) + 3) & ~3)
    raise SystemExit("no .signature section")


def build(name: str, work: Path) -> dict:
    objs = []
    for src in ("crt0.S", f"{name}.c"):
        obj = work / f"{name}-{Path(src).stem}.o"
        subprocess.run([*ZIG, "cc", *CFLAGS, "-c", str(SRC / src), "-o", str(obj)], check=True)
        objs.append(str(obj))
    out = PROG / f"{name}.elf"
    subprocess.run([*ZIG, "ld.lld", "-m", "elf32lriscv", "--no-relax", "-T", str(SRC / "link.ld"), "-o", str(out), *objs],
                   check=True)
    start, end = signature_region(out.read_bytes())
    return {"name": name, "elf": out.name, "source": f"src/{name}.c", "signature": [start, end]}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="programs to build (default: every src/*.c)")
    args = ap.parse_args(argv)
    names = args.names or sorted(p.stem for p in SRC.glob("*.c"))
    with tempfile.TemporaryDirectory() as tmp:
        entries = [build(n, Path(tmp)) for n in names]
    (PROG / "programs.json").write_text(json.dumps(entries, indent=1) + "\n")
    for e in entries:
        print(f"{e['name']:<12} {e['elf']:<18} sig {e['signature'][0]:#x}:{e['signature'][1]:#x}")


if __name__ == "__main__":
    main()
