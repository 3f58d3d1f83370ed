"""Rewrite out-of-subset instructions into verified macro sequences.

A rule's template is a list of assembly lines over the target subset with
slots: ``$rd $rs1 $rs2 $imm`` (operands of the replaced instruction),
``$t0 $t1`` (scratch registers), ``$L0 $L1`` (local labels, defined by a
``$L0:`` line), ``$target`` (absolute target of a replaced branch) and
``${expr}`` (an integer expression over ``imm``, ``pc`` and ``value``, the
result of a replaced lui/auipc).

Planning lays the expanded program out in two passes: lengths first, then
every pc-relative reference (branches, jal, auipc pairs) is re-linked.
"""

from __future__ import annotations

import ast
import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import asm, isa
from .errors import (
    FieldOverflow,
    IllegalEncoding,
    LayoutOverflow,
    NoRuleFor,
    OffsetOverflow,
    PcRelativeReference,
    RegisterOutOfRange,
    ScratchUnavailable,
    Trap,
)
from .profile import InstructionSubset, ProgramImage
from .sim import Simulator

DEFAULT_SCRATCH = (5, 6)
MINIMAL_SUBSET = ("add", "addi", "and", "blt", "bltu", "jal", "jalr", "lw", "sll", "sra", "sw", "xori")
_SLOT = re.compile(r"\$\{([^}]*)\}|\$(rd|rs1|rs2|imm|t\d|L\d|target)\b")
_LABEL_LINE = re.compile(r"^\s*\$(L\d)\s*:\s*$")
_EXPR_NAMES = {"imm", "pc", "value", "s32"}
_EXPR_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Name, ast.Constant, ast.Call, ast.Load,
               ast.Add, ast.Sub, ast.Mult, ast.FloorDiv, ast.Mod, ast.LShift, ast.RShift, ast.BitAnd,
               ast.BitOr, ast.BitXor, ast.Invert, ast.USub, ast.UAdd)


def _check_expr(expr: str) -> ast.Expression:
    tree = ast.parse(expr.strip(), mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _EXPR_NODES):
            raise ValueError(f"disallowed syntax in rule expression {expr!r}")
        if isinstance(node, ast.Name) and node.id not in _EXPR_NAMES:
            raise ValueError(f"unknown name {node.id!r} in rule expression {expr!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, int):
            raise ValueError(f"non-integer constant in {expr!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id == "s32"):
            raise ValueError(f"only s32() may be called in {expr!r}")
    return tree


def eval_expr(expr: str, imm=0, pc=0, value=0) -> int:
    tree = _check_expr(expr)
    env = {"imm": imm, "pc": pc, "value": value, "s32": isa.s32}
    return int(eval(compile(tree, "<rule>", "eval"), {"__builtins__": {}}, env))


@dataclass(frozen=True)
class MacroRule:
    source_mnemonic: str
    required_subset: tuple[str, ...]
    template: tuple[str, ...]
    note: str = ""

    def __post_init__(self):
        spec = isa.REGISTRY.get(self.source_mnemonic)
        if spec is None:
            raise ValueError(f"rule for unknown instruction {self.source_mnemonic!r}")
        object.__setattr__(self, "required_subset", tuple(sorted(set(self.required_subset))))
        object.__setattr__(self, "template", tuple(self.template))
        allowed_ops = {"rd", "rs1", "rs2", "imm"} & (set(spec.fields) | ({"imm"} if spec.format == "U" else set()))
        defined = {m.group(1) for line in self.template if (m := _LABEL_LINE.match(line))}
        for line in self.template:
            if _LABEL_LINE.match(line):
                continue
            mn = line.split()[0].lower()
            if mn not in self.required_subset:
                raise ValueError(f"{self.source_mnemonic}: template uses {mn} outside required_subset")
            for m in _SLOT.finditer(line):
                if m.group(1) is not None:
                    _check_expr(m.group(1))
                    continue
                slot = m.group(2)
                if slot in ("rd", "rs1", "rs2", "imm") and slot not in allowed_ops:
                    raise ValueError(f"{self.source_mnemonic}: ${slot} is not an operand of the source")
                if slot.startswith("L") and slot not in defined:
                    raise ValueError(f"{self.source_mnemonic}: label ${slot} is never defined")
                if slot == "target" and spec.format != "B":
                    raise ValueError(f"{self.source_mnemonic}: $target only applies to branches")

    @property
    def length(self) -> int:
        return sum(1 for line in self.template if not _LABEL_LINE.match(line))

    @property
    def scratch_slots(self) -> tuple[str, ...]:
        return tuple(sorted({m.group(2) for line in self.template for m in _SLOT.finditer(line)
                             if m.group(2) and m.group(2).startswith("t")}))

    def to_json(self) -> dict:
        d = {"source": self.source_mnemonic, "required": list(self.required_subset), "template": list(self.template)}
        if self.note:
            d["note"] = self.note
        return d

    @classmethod
    def from_json(cls, obj: dict) -> MacroRule:
        return cls(obj["source"], tuple(obj["required"]), tuple(obj["template"]), obj.get("note", ""))

    def expand(self, insn: isa.DecodedInstruction, pc: int, scratch=DEFAULT_SCRATCH,
               target: int | None = None, value: int | None = None) -> list[isa.DecodedInstruction]:
        """Concrete expansion of ``insn`` placed at ``pc``.

        ``target`` is the absolute branch target, ``value`` the lui/auipc
        result; both default to the values implied by ``pc``.
        """
        slots = self.scratch_slots
        if len(slots) > len(scratch):
            raise ScratchUnavailable(f"{self.source_mnemonic} needs {len(slots)} scratch registers, "
                                     f"policy has {len(scratch)}")
        regs = {f"t{i}": f"x{r}" for i, r in enumerate(scratch)}
        for name in ("rd", "rs1", "rs2"):
            if getattr(insn, name) is not None:
                regs[name] = f"x{getattr(insn, name)}"
        if target is None and insn.format == "B":
            target = isa.u32(pc + insn.imm)
        if value is None and insn.format == "U":
            value = isa.s32(insn.imm + (pc if insn.mnemonic == "auipc" else 0))
        labels, here = {}, pc
        for line in self.template:
            m = _LABEL_LINE.match(line)
            if m:
                labels[m.group(1)] = here
            else:
                here += 4
        out, here = [], pc
        for line in self.template:
            if _LABEL_LINE.match(line):
                continue

            def sub(m, here=here):
                if m.group(1) is not None:
                    return str(eval_expr(m.group(1), imm=insn.imm or 0, pc=pc, value=value or 0))
                s = m.group(2)
                if s == "imm":
                    return str(insn.imm)
                if s.startswith("L"):
                    return str(labels[s] - here)
                if s == "target":
                    return str(isa.s32(target - here))
                return regs[s]

            text = _SLOT.sub(sub, line)
            try:
                out.append(asm.parse_insn(text))
            except FieldOverflow as exc:
                if "$target" in line:
                    raise OffsetOverflow(f"{self.source_mnemonic} at 0x{pc:08x}: {exc}") from exc
                raise
            here += 4
        return out


def load_catalog(path=None) -> tuple[MacroRule, ...]:
    """Rules from a JSON list (or an object with ``rules``); default is the shipped minimal-subset catalog."""
    if path is None:
        text = (resources.files("risp") / "data" / "catalog_minimal.json").read_text()
    else:
        text = Path(path).read_text()
    obj = json.loads(text)
    rules = obj["rules"] if isinstance(obj, dict) else obj
    return tuple(MacroRule.from_json(r) for r in rules)


def _usable(catalog, subset) -> dict[str, MacroRule]:
    allowed = set(subset)
    rules = {}
    for r in catalog:
        if set(r.required_subset) <= allowed and r.source_mnemonic not in rules:
            rules[r.source_mnemonic] = r
    return rules


# ---------------------------------------------------------------------------
# planning


@dataclass(frozen=True)
class RetargetPlan:
    program: tuple[isa.DecodedInstruction | None, ...]
    subset: InstructionSubset
    rewrites: dict[int, MacroRule]
    scratch_policy: tuple[int, ...]
    size_before: int
    size_after: int
    image: ProgramImage = field(repr=False)
    address_map: dict[int, int] = field(repr=False)
    new_words: tuple[tuple[int, int], ...] = field(repr=False)

    @property
    def overhead_fraction(self) -> float:
        return self.size_after / self.size_before - 1

    def report(self) -> dict:
        used: dict[str, int] = {}
        for r in self.rewrites.values():
            used[r.source_mnemonic] = used.get(r.source_mnemonic, 0) + 1
        return {"program": self.image.name, "subset": list(self.subset),
                "sites": [{"addr": a, "mnemonic": r.source_mnemonic, "length": r.length}
                          for a, r in sorted(self.rewrites.items())],
                "rules_used": dict(sorted(used.items())),
                "size_before": self.size_before, "size_after": self.size_after,
                "overhead_fraction": self.overhead_fraction}


def _decode_all(image: ProgramImage):
    out = []
    for _, w in image.words:
        try:
            out.append(isa.decode(w))
        except (IllegalEncoding, RegisterOutOfRange):
            out.append(None)
    return out


def _global_reads(decoded) -> set[int]:
    regs = set()
    for d in decoded:
        if d is not None:
            regs.update(d.reads())
    return regs


def _scratch_live(decoded, i: int, regs, global_reads) -> list[int]:
    """Scratch registers that may hold a live value at site ``i``."""
    site = decoded[i]
    busy = []
    operands = {site.rd, site.rs1, site.rs2} - {None}
    for s in regs:
        if s in operands:
            busy.append(s)
            continue
        verdict = None
        for d in decoded[i + 1:]:
            if d is None:
                break
            if s in d.reads():
                verdict = True
                break
            if d.writes() == s:
                verdict = False
                break
            if d.spec.is_control:
                break
        if verdict is None:  # left the block undecided
            verdict = s in global_reads
        if verdict:
            busy.append(s)
    return busy


def _auipc_users(decoded, i: int) -> list[int]:
    """Indices of instructions using the auipc at ``i`` as an address base."""
    r = decoded[i].rd
    users = []
    if not r:
        return users
    for j in range(i + 1, len(decoded)):
        d = decoded[j]
        if d is None:
            break
        base_use = d.rs1 == r and (d.mnemonic in ("addi", "jalr") or d.mnemonic in isa.LOADS
                                   or d.mnemonic in isa.STORES)
        if base_use:
            users.append(j)
        elif r in d.reads():
            users = []  # value escapes as plain data; treat the auipc as standalone
            break
        if d.writes() == r or d.spec.is_control:
            break
    return users


def plan(program: ProgramImage, subset: InstructionSubset, catalog=None,
         scratch_policy=DEFAULT_SCRATCH) -> RetargetPlan:
    if not isinstance(subset, InstructionSubset):
        subset = InstructionSubset.of(subset)
    catalog = load_catalog() if catalog is None else catalog
    rules = _usable(catalog, subset)
    scratch = tuple(scratch_policy)
    addrs = [a for a, _ in program.words]
    decoded = _decode_all(program)
    global_reads = _global_reads(decoded)

    # pass 1: choose rules and measure
    rewrites: dict[int, MacroRule] = {}
    for i, d in enumerate(decoded):
        if d is None or d.mnemonic in subset:
            continue
        rule = rules.get(d.mnemonic)
        if rule is None:
            raise NoRuleFor(d.mnemonic)
        need = scratch[:len(rule.scratch_slots)]
        if len(need) < len(rule.scratch_slots):
            raise ScratchUnavailable(f"{d.mnemonic} at 0x{addrs[i]:08x} needs {len(rule.scratch_slots)} "
                                     f"scratch registers, policy has {len(scratch)}")
        busy = _scratch_live(decoded, i, need, global_reads)
        if busy:
            raise ScratchUnavailable(f"{d.mnemonic} at 0x{addrs[i]:08x}: scratch "
                                     f"{', '.join(f'x{r}' for r in busy)} live")
        rewrites[addrs[i]] = rule

    lengths = [rewrites[a].length if a in rewrites else 1 for a in addrs]
    amap: dict[int, int] = {}
    data_starts = sorted(a for a, _ in program.data)
    segs = program.segments()
    k = 0
    seg_ends = {}
    for n, (start, words) in enumerate(segs):
        here = start
        for _ in words:
            amap[addrs[k]] = here
            here += 4 * lengths[k]
            k += 1
        seg_ends[start + 4 * len(words)] = here
        limits = [s for s, _ in segs[n + 1:n + 2]] + [a for a in data_starts if a >= start]
        if limits and here > min(limits):
            raise LayoutOverflow(f"expanded text 0x{start:08x}-0x{here:08x} overlaps 0x{min(limits):08x}")
    amap.update(seg_ends)
    lo_text, hi_text = program.text_range()

    def remap(a: int) -> int:
        a = isa.u32(a)
        if lo_text <= a <= hi_text:
            if a not in amap:
                raise PcRelativeReference(f"reference 0x{a:08x} points inside an instruction")
            return amap[a]
        return a

    # auipc relocation: new partner immediates and constant values
    patched_imm: dict[int, int] = {}
    auipc_value: dict[int, int] = {}
    auipc_hi: dict[int, int] = {}
    for i, d in enumerate(decoded):
        if d is None or d.mnemonic != "auipc":
            continue
        a, na = addrs[i], amap[addrs[i]]
        v = isa.u32(a + d.imm)
        users = _auipc_users(decoded, i)
        in_subset = "auipc" in subset
        if not users:
            nv = remap(v) if lo_text <= v <= hi_text else v
            if in_subset:
                if (nv - na) % 4096:
                    raise PcRelativeReference(f"auipc at 0x{a:08x} cannot be re-linked to 0x{nv:08x}")
                auipc_hi[i] = isa.s32(nv - na)
            else:
                auipc_value[i] = isa.s32(nv)
            continue
        refs = [(j, isa.u32(v + decoded[j].imm)) for j in users]
        code = [lo_text <= t < hi_text for _, t in refs]
        if any(code) and not all(code):
            raise PcRelativeReference(f"auipc at 0x{a:08x} mixes code and data references")
        new_refs = [(j, remap(t) if c else t) for (j, t), c in zip(refs, code)]
        if in_subset:
            delta = isa.s32(new_refs[0][1] - na)
            hi = (delta + 0x800) & ~0xFFF
            auipc_hi[i] = isa.s32(hi)
            for j, t in new_refs:
                patched_imm[j] = isa.s32(t - na - hi)
        else:
            nv = isa.s32(new_refs[0][1] - decoded[new_refs[0][0]].imm)
            for j, t in new_refs:
                if isa.s32(t - decoded[j].imm) != nv:
                    raise PcRelativeReference(f"auipc at 0x{a:08x}: references cannot share one base")
            auipc_value[i] = nv

    # pass 2: emit
    out: list[tuple[int, int]] = []
    for i, (a, w) in enumerate(program.words):
        na = amap[a]
        d = decoded[i]
        if d is None:
            out.append((na, w))
            continue
        if i in patched_imm:
            d = _with_imm(d, patched_imm[i], a)
        target = remap(a + d.imm) if d.format in ("B", "J") else None
        if a in rewrites:
            try:
                seq = rewrites[a].expand(d, na, scratch, target=target, value=auipc_value.get(i))
            except FieldOverflow as exc:
                raise OffsetOverflow(str(exc)) from exc
            out.extend((na + 4 * k, x.raw) for k, x in enumerate(seq))
            continue
        if d.format in ("B", "J"):
            d = _with_imm(d, isa.s32(target - na), a)
        elif i in auipc_hi:
            d = _with_imm(d, auipc_hi[i], a)
        out.append((na, d.raw))

    size_after = len(out)
    return RetargetPlan(tuple(decoded), subset, rewrites, scratch, len(program.words), size_after,
                        program, amap, tuple(out))


def _with_imm(d: isa.DecodedInstruction, imm: int, addr: int) -> isa.DecodedInstruction:
    try:
        return isa.make(d.mnemonic, rd=d.rd, rs1=d.rs1, rs2=d.rs2, imm=imm)
    except FieldOverflow as exc:
        raise OffsetOverflow(f"{d.mnemonic} at 0x{addr:08x}: re-linked offset {imm} does not fit") from exc


def apply(p: RetargetPlan) -> ProgramImage:
    img = p.image
    if not p.rewrites and p.new_words == img.words:
        return img
    entry = p.address_map.get(img.entry, img.entry)
    return ProgramImage(f"{img.name}", p.new_words, img.source_format, entry, img.data)


def retarget(program: ProgramImage, subset, catalog=None, scratch_policy=DEFAULT_SCRATCH):
    """plan + apply; returns (new image, plan)."""
    p = plan(program, subset, catalog, scratch_policy)
    return apply(p), p


# ---------------------------------------------------------------------------
# rule verification

EDGE = (0, 1, isa.MASK32, 0x7FFFFFFF, 0x80000000)
_WINDOW = 0x8000
_WINDOW_BYTES = 64
_PC = 0x1000


@dataclass(frozen=True)
class RuleVerdict:
    source_mnemonic: str
    verified: bool
    trials: int
    counterexample: dict | None = None

    @property
    def kind(self) -> str:
        return "verified" if self.verified else "counterexample"


def _rand_value(rng):
    r = rng.random()
    if r < 0.2:
        return rng.choice(EDGE)
    if r < 0.3:
        return rng.randrange(0, 64)
    return rng.getrandbits(32)


def _rand_imm(rng, mn):
    lo, hi, step = isa.imm_range(mn)
    if rng.random() < 0.15:
        return rng.choice([lo, hi, 0, step, -step if lo < 0 else 0])
    return rng.randrange(lo, hi + 1, step)


def verify_rule(rule: MacroRule, trials: int = 10_000, seed: int = 0, scratch=DEFAULT_SCRATCH) -> RuleVerdict:
    """Differential check of ``rule`` against the ISS over random cloned states."""
    if trials < 10_000:
        raise ValueError("verify_rule needs at least 10,000 trials")
    rng = random.Random(seed)
    mn = rule.source_mnemonic
    spec = isa.REGISTRY[mn]
    pool = [r for r in range(isa.NUM_REGS) if r not in scratch]
    n = rule.length
    edge_pairs = [(a, b) for a in EDGE for b in EDGE]
    size = {"b": 1, "h": 2, "w": 4}.get(mn[1:2], 4) if (mn in isa.LOADS or mn in isa.STORES) else 0
    for t in range(trials):
        regs = [0] + [_rand_value(rng) for _ in range(isa.NUM_REGS - 1)]
        rd = rng.choice(pool) if rng.random() > 0.05 else 0
        rs1, rs2 = rng.choice(pool[1:]), rng.choice(pool[1:])
        r = rng.random()
        if r < 0.15:
            rs2 = rs1
        elif r < 0.3:
            rd = rs1
        elif r < 0.4:
            rd = rs2
        kw = {}
        for f in ("rd", "rs1", "rs2"):
            if f in spec.fields:
                kw[f] = {"rd": rd, "rs1": rs1, "rs2": rs2}[f]
        imm = _rand_imm(rng, mn) if "imm" in spec.fields else None
        if spec.format == "B":
            while 0 <= imm <= 4 * n:
                imm = _rand_imm(rng, mn)
        if t < len(edge_pairs):
            regs[rs1], regs[rs2] = edge_pairs[t]
        window = {(_WINDOW + k): rng.getrandbits(32) for k in range(0, _WINDOW_BYTES, 4)}
        if size:
            ea = _WINDOW + rng.randrange(0, _WINDOW_BYTES, size)
            regs[rs1] = isa.u32(ea - imm)
            if mn in isa.STORES and rs2 == rs1:
                rs2 = rng.choice([x for x in pool[1:] if x != rs1])
                kw["rs2"] = rs2
        regs[0] = 0
        if imm is not None:
            kw["imm"] = imm
        src = isa.make(mn, **kw)

        ref = Simulator(_PC, regs, {**window, _PC: src.raw})
        try:
            ref.step()
        except Trap:
            continue
        try:
            seq = rule.expand(src, _PC, scratch)
        except (FieldOverflow, OffsetOverflow) as exc:
            return RuleVerdict(mn, False, t + 1, {"trial": t, "source": str(src), "error": str(exc)})
        mem = dict(window)
        for k, x in enumerate(seq):
            mem[_PC + 4 * k] = x.raw
        dut = Simulator(_PC, regs, mem)
        err = None
        for _ in range(4 * n + 8):
            if not _PC <= dut.pc < _PC + 4 * n:
                break
            try:
                dut.step()
            except Trap as exc:
                err = f"{type(exc).__name__}: {exc}"
                break
        else:
            err = "expansion did not leave its own address range"
        exp_pc = ref.pc if ref.pc != _PC + 4 else _PC + 4 * n
        keep = [i for i in range(isa.NUM_REGS) if i not in scratch]
        same_regs = all(ref.regs[i] == dut.regs[i] for i in keep)
        same_mem = all(ref.mem.get(a, 0) == dut.mem.get(a, 0) for a in window)
        if err or not same_regs or not same_mem or dut.pc != exp_pc:
            return RuleVerdict(mn, False, t + 1, {
                "trial": t, "source": str(src), "initial_regs": regs, "error": err,
                "expected_regs": [ref.regs[i] for i in keep], "observed_regs": [dut.regs[i] for i in keep],
                "expected_pc": exp_pc, "observed_pc": dut.pc, "memory_match": same_mem,
            })
    return RuleVerdict(mn, True, trials)


# ---------------------------------------------------------------------------
# assembler macro file

_MACRO_PARAMS = {"R": ("rd", "rs1", "rs2"), "I": ("rd", "rs1", "imm"), "S": ("rs2", "imm", "rs1"),
                 "B": ("rs1", "rs2", "target"), "U": ("rd", "imm"), "J": ("rd", "imm")}


def _gas_expr(expr: str, mnemonic: str) -> str:
    if mnemonic == "lui":
        value = "(((\\imm) << 12) & 0xFFFFFFFF)"
    else:
        value = "((((\\imm) << 12) + .Lpc_\\@) & 0xFFFFFFFF)"
    text = re.sub(r"\bimm\b", lambda m: "(\\imm)", expr)
    text = re.sub(r"\bvalue\b", lambda m: value, text)
    text = re.sub(r"\bs32\(", "(", text)
    return f"({text})"


def emit_macro_file(catalog, subset) -> str:
    """GNU-assembler ``.macro`` definitions for every out-of-subset instruction with a usable rule."""
    subset = subset if isinstance(subset, InstructionSubset) else InstructionSubset.of(subset)
    rules = {m: r for m, r in _usable(catalog, subset).items() if m not in subset}
    scratch = {"t0": "x5", "t1": "x6"}
    lines = ["# Retargeting macros generated by risp",
             f"# target subset: {', '.join(subset)}",
             "# scratch registers: x5, x6 (keep them free in the calling code)"]
    for mn in sorted(rules):
        rule = rules[mn]
        spec = isa.REGISTRY[mn]
        params = ("rd", "rs1", "imm") if mn in isa.LOADS else _MACRO_PARAMS[spec.format]
        lines.append("")
        if mn in isa.LOADS or mn in isa.STORES:
            lines.append(f"# invoke as: {mn} {', '.join(params)}")
        if mn == "auipc":
            lines.append("# needs the absolute address of .Lpc, so it only assembles into absolute (linked) sections")
        lines.append(f".macro {mn} {', '.join(params)}")
        if mn == "auipc":
            lines.append(".Lpc_\\@:")
        for t in rule.template:
            m = _LABEL_LINE.match(t)
            if m:
                lines.append(f".L{m.group(1)}_\\@:")
                continue

            def sub(mt):
                if mt.group(1) is not None:
                    return _gas_expr(mt.group(1), mn)
                s = mt.group(2)
                if s in scratch:
                    return scratch[s]
                if s.startswith("L"):
                    return f".L{s}_\\@"
                return f"\\{s}"

            lines.append("    " + _SLOT.sub(sub, t))
        lines.append(".endm")
    return "\n".join(lines) + "\n"
