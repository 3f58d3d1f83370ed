"""``risp`` command line: profile, gen, sim, retarget, verify-blocks, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import blocklib, elf, gen, metrics, retarget, sim
from .errors import RispError
from .profile import InstructionSubset, load_image, load_subset, merge_profiles, parse_subset_arg, profile, \
    write_elf, write_listing


def _emit_json(dest, obj) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text)


def _say(args, text: str) -> None:
    # keep stdout clean when JSON goes there
    print(text, file=sys.stderr if getattr(args, "json", None) == "-" else sys.stdout)


def _subset(text: str | None, label="cli") -> InstructionSubset | None:
    """A subset from a JSON file path or a comma-separated mnemonic list."""
    if text is None:
        return None
    if Path(text).is_file():
        return load_subset(text)
    return parse_subset_arg(text, label)


def _image(path, fmt=None, base=None):
    p = Path(path)
    if not p.exists():
        from . import programs

        if path in programs.names():  # bundled program by name
            return programs.get(path).image(), programs.get(path).signature_region
        raise FileNotFoundError(f"no such image: {path}")
    blob = p.read_bytes()
    region = None
    if elf.is_elf(blob):
        for s in elf.read_sections(blob)[1]:
            if s.name == ".signature":
                region = (s.addr, s.addr + ((len(s.data) + 3) & ~3))
    return load_image(p, fmt, base), region


def cmd_profile(args) -> int:
    profs = [profile(_image(p, args.format, args.base)[0]) for p in args.images]
    prof = profs[0] if len(profs) == 1 else merge_profiles(profs)
    _say(args, prof.table())
    if args.json:
        obj = prof.to_json()
        if len(profs) > 1:
            obj["programs"] = [p.to_json() for p in profs]
        _emit_json(args.json, obj)
    return 0


def cmd_gen(args) -> int:
    subset = load_subset(args.subset_from) if args.subset_from else parse_subset_arg(args.subset)
    design = gen.build_design(subset, args.name, with_regfile=not args.no_regfile)
    man = gen.emit_rtl(design, args.out)
    summary = gen.validate_structure(args.out, subset)
    lines = [f"{design.name}: {man['n_instructions']} blocks, {summary['cases']} ModularEX cases -> {args.out}"]
    if args.with_tb:
        image, region = _image(args.with_tb)
        region = sim.parse_region(args.sig) if args.sig else region
        gen.check_program_subset(image, design)
        res = sim.run(image, sim.SimConfig(subset=design.subset, signature_region=region))
        tb = gen.emit_integration_testbench(design, image, region, expected=res if region else None)
        (Path(args.out) / "tb.v").write_text(tb)
        if region:
            (Path(args.out) / "expected_signature.txt").write_text(sim.signature(res))
        man["testbench"] = {"file": "tb.v", "program": image.name,
                            "signature_region": list(region) if region else None, "iss_cycles": res.cycles}
        lines.append(f"testbench tb.v for {image.name} (ISS: {res.status}, {res.cycles} cycles)")
    _say(args, "\n".join(lines))
    if args.json:
        _emit_json(args.json, {**man, "structure": summary})
    return 0


def cmd_sim(args) -> int:
    image, region = _image(args.image, args.format, args.base)
    region = sim.parse_region(args.sig) if args.sig else region
    subset = _subset(args.subset)
    cfg = sim.SimConfig(subset=subset, max_cycles=args.max_cycles, signature_region=region,
                        trace=bool(args.trace))
    res = sim.run(image, cfg)
    if args.trace:
        res.write_trace(args.trace)
    out = {"program": image.name, "status": res.status, "cycles": res.cycles, "retired": res.retired,
           "pc": res.pc, "trap_reason": res.trap_reason,
           "violation": {"mnemonic": res.violation[0], "pc": res.violation[1]} if res.violation else None,
           "signature": [f"{w:08x}" for w in res.signature] if res.signature is not None else None}
    lines = [f"{image.name}: {res.status} after {res.cycles} cycles"]
    if res.violation:
        lines.append(f"subset violation: {res.violation[0]} at pc 0x{res.violation[1]:08x}")
    if res.trap_reason:
        lines.append(f"trap: {res.trap_reason}")
    if res.signature is not None and res.status == sim.HALTED:
        lines.append(sim.signature(res).rstrip("\n"))
    rc = 0 if res.status == sim.HALTED else 1
    if args.rtl_cmd and rc == 0:
        if region is None:
            raise RispError("--rtl-cmd needs a signature region (--sig)")
        design = gen.build_design(subset or profile(image).distinct, f"{image.name}_risp")
        cmd = sim.VERILATOR_CMD if args.rtl_cmd == "verilator" else args.rtl_cmd
        verdict = sim.differential_check(image, design, region, cmd)
        out["rtl"] = {"verdict": verdict.kind, "tb_result": verdict.tb_result, "first_diff": verdict.first_diff}
        lines.append(f"RTL differential check: {verdict.kind}")
        rc = 0 if verdict.kind == "match" else 1
    _say(args, "\n".join(lines))
    if args.json:
        _emit_json(args.json, out)
    return rc


def cmd_retarget(args) -> int:
    image, _ = _image(args.image, args.format, args.base)
    subset = _subset(args.subset)
    catalog = retarget.load_catalog(args.catalog)
    new, plan = retarget.retarget(image, subset, catalog)
    out = Path(args.out)
    if out.suffix.lower() in (".lst", ".listing", ".txt"):
        out.write_text(write_listing(new))
    else:
        out.write_bytes(write_elf(new))
    if args.emit_macros:
        Path(args.emit_macros).write_text(retarget.emit_macro_file(catalog, subset))
    rep = plan.report()
    _say(args, f"{image.name}: {len(plan.rewrites)} sites rewritten, {rep['size_before']} -> "
               f"{rep['size_after']} words ({rep['overhead_fraction']:+.1%}) -> {out}")
    if args.json:
        _emit_json(args.json, rep)
    return 0


def cmd_verify_blocks(args) -> int:
    names = [m.strip() for m in args.only.split(",")] if args.only else list(blocklib.library())
    rows, failed = [], 0
    for mn in names:
        block = blocklib.get_block(mn)
        vecs = blocklib.gen_vectors(block, args.vectors, args.seed)
        bad = blocklib.model_agrees(block, vecs)
        row = {"mnemonic": mn, "vectors": len(vecs), "failures": len(bad)}
        ok = not bad
        if args.mutations:
            rep = blocklib.mutation_smoke(block, vecs, strict=False)
            row["mutants"], row["survivors"] = len(rep.killed), rep.survivors
            ok = ok and not rep.survivors
        row["ok"] = ok
        failed += not ok
        rows.append(row)
        extra = f", {row['mutants'] - len(row['survivors'])}/{row['mutants']} mutants killed" if args.mutations else ""
        _say(args, f"{'PASS' if ok else 'FAIL'} {mn:<6} {len(vecs)} vectors, {len(bad)} failures{extra}")
    if args.rtl_cmd:
        verdict = _rtl_blocks(names, args)
        _say(args, f"RTL block suite: {verdict}")
        failed += verdict != "PASS"
    _say(args, f"{len(names) - failed}/{len(names)} blocks verified")
    if args.json:
        _emit_json(args.json, {"blocks": rows, "failed": failed})
    return 1 if failed else 0


def _rtl_blocks(names, args) -> str:
    import subprocess
    import tempfile

    with tempfile.TemporaryDirectory(prefix="risp-blocks-") as tmp:
        work = Path(tmp)
        files, benches = [], []
        for mn in names:
            block = blocklib.get_block(mn)
            (work / f"{block.module_name}.v").write_text(block.render())
            tb = blocklib.emit_block_testbench(block, blocklib.gen_vectors(block, args.rtl_vectors, args.seed),
                                               module_name=f"tb_{mn}", finish=False)
            (work / f"tb_{mn}.v").write_text(tb)
            files += [f"{block.module_name}.v", f"tb_{mn}.v"]
            benches.append(f"tb_{mn}")
        (work / "tb.v").write_text(blocklib.emit_suite_top(benches))
        cmd = (sim.VERILATOR_CMD if args.rtl_cmd == "verilator" else args.rtl_cmd).format(
            testbench="tb.v", rtl_files=" ".join(files), workdir=str(work))
        proc = subprocess.run(cmd, shell=True, cwd=work, capture_output=True, text=True)
    results = [ln for ln in proc.stdout.splitlines() if ln.startswith("TB_RESULT:")]
    if proc.returncode != 0 or len(results) != len(names):
        return f"ERROR (exit {proc.returncode}, {len(results)}/{len(names)} results)"
    return "PASS" if all("PASS" in ln for ln in results) else "FAIL"


def _design_reports(path, table, fmax, cpi) -> list[metrics.CostReport]:
    obj = json.loads(Path(path).read_text())
    items = obj if isinstance(obj, list) and obj and isinstance(obj[0], dict) else [obj]
    out = []
    for it in items:
        if isinstance(it, dict) and "nand2" in it:
            out.append(metrics.CostReport.from_json(it))
            continue
        subset = load_subset(path) if it is obj else InstructionSubset.of(
            it.get("distinct") or it.get("subset"), it.get("name", ""))
        name = (it.get("name") or it.get("design_name")) if isinstance(it, dict) else None
        out.append(metrics.report(subset, table, fmax, cpi, name=name or Path(path).stem))
    return out


def cmd_report(args) -> int:
    table = metrics.CostTable.load(args.cost_table)
    designs = [r for p in args.designs for r in _design_reports(p, table, args.fmax, args.cpi)]
    baselines = [b for p in args.baselines for b in metrics.load_baselines(p)] if args.baselines \
        else metrics.load_baselines()
    text, data = metrics.compare_report(designs, baselines)
    _say(args, text)
    if args.json:
        _emit_json(args.json, data)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="risp", description="RISC-V instruction-subset processor toolchain")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    def image_opts(p):
        p.add_argument("--format", choices=["elf32", "elf", "bin", "flat_binary", "listing", "disasm_listing"])
        p.add_argument("--base", type=lambda s: int(s, 16), help="load address of a flat binary (hex)")

    def json_opt(p):
        p.add_argument("--json", metavar="F", help="write machine-readable output to F ('-' for stdout)")

    p = sub.add_parser("profile", help="static instruction profile of one or more images")
    p.add_argument("images", nargs="+")
    image_opts(p)
    json_opt(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("gen", help="emit RTL for a subset")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--subset-from", metavar="F", help="profile JSON, manifest or mnemonic list file")
    g.add_argument("--subset", metavar="M1,M2,...")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--name")
    p.add_argument("--no-regfile", action="store_true", help="leave the register file outside the top module")
    p.add_argument("--with-tb", metavar="PROGRAM", help="also emit an integration testbench for PROGRAM")
    p.add_argument("--sig", metavar="START:END", help="signature region for the testbench")
    json_opt(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sim", help="run an image on the instruction-set simulator")
    p.add_argument("image")
    image_opts(p)
    p.add_argument("--subset", metavar="F", help="subset JSON file or comma list; other instructions stop the run")
    p.add_argument("--sig", metavar="START:END")
    p.add_argument("--trace", metavar="F")
    p.add_argument("--max-cycles", type=int, default=sim.DEFAULT_MAX_CYCLES)
    p.add_argument("--rtl-cmd", metavar="CMD",
                   help="external RTL simulator command template ('verilator' for the built-in one)")
    json_opt(p)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("retarget", help="rewrite out-of-subset instructions with macro rules")
    p.add_argument("image")
    image_opts(p)
    p.add_argument("--subset", required=True, metavar="F")
    p.add_argument("--catalog", metavar="F")
    p.add_argument("--emit-macros", metavar="F", help="also write a GNU-assembler macro file")
    p.add_argument("--out", required=True, metavar="IMAGE", help="output ELF (or .lst listing)")
    json_opt(p)
    p.set_defaults(func=cmd_retarget)

    p = sub.add_parser("verify-blocks", help="check library blocks against the golden model")
    p.add_argument("--only", metavar="M1,...")
    p.add_argument("--vectors", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None, help="vector seed (default: each block's manifest seed)")
    p.add_argument("--mutations", action="store_true", help="also run the mutation smoke test")
    p.add_argument("--rtl-cmd", metavar="CMD", help="run the Verilog blocks under an external simulator")
    p.add_argument("--rtl-vectors", type=int, default=200)
    json_opt(p)
    p.set_defaults(func=cmd_verify_blocks)

    p = sub.add_parser("report", help="area/power/EPI comparison")
    p.add_argument("--designs", nargs="+", required=True, metavar="F")
    p.add_argument("--baselines", nargs="+", metavar="F")
    p.add_argument("--cost-table", metavar="F")
    p.add_argument("--fmax", type=float, default=None, help="fmax in kHz for the designs")
    p.add_argument("--cpi", type=float, default=1.0)
    json_opt(p)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RispError, OSError, ValueError, KeyError) as exc:
        print(f"risp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
