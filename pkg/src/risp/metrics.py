"""Area, power and energy-per-instruction estimates.

Area is a calibrated linear NAND2-equivalent model: per-block weights plus
a per-case dispatch cost plus fixed units (fetch, PC register, dispatch
base; register file only when asked for).  Power is affine in gate count
with a flip-flop surcharge.  fmax is an input, never predicted.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import MissingWeight, NonPositiveInput


@dataclass(frozen=True)
class CostTable:
    weights: dict[str, int]
    fixed: dict[str, int]
    alpha: float  # mW per NAND2
    beta_ff: float  # mW per flip-flop
    flip_flops: dict[str, int] = field(default_factory=dict)
    defaults: dict = field(default_factory=dict)
    calibration: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = [k for k, v in {**self.weights, **self.fixed}.items() if not v > 0]
        if bad:
            raise ValueError(f"cost table weights must be positive: {bad}")

    @classmethod
    def from_json(cls, obj: dict) -> CostTable:
        return cls(weights=dict(obj["weights"]), fixed=dict(obj["fixed"]),
                   alpha=float(obj["power"]["alpha"]), beta_ff=float(obj["power"]["beta_ff"]),
                   flip_flops=dict(obj.get("flip_flops", {})), defaults=dict(obj.get("defaults", {})),
                   calibration=dict(obj.get("calibration", {})))

    @classmethod
    def load(cls, path=None) -> CostTable:
        if path is None:
            text = (resources.files("risp") / "data" / "cost_table.json").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_json(json.loads(text))

    def to_json(self) -> dict:
        return {"weights": self.weights, "fixed": self.fixed,
                "power": {"alpha": self.alpha, "beta_ff": self.beta_ff},
                "flip_flops": self.flip_flops, "defaults": self.defaults, "calibration": self.calibration}


_DEFAULT: CostTable | None = None


def default_table() -> CostTable:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = CostTable.load()
    return _DEFAULT


def _mnemonics(design) -> tuple[str, ...]:
    if hasattr(design, "mnemonics"):
        return tuple(design.mnemonics)
    return tuple(design)


def estimate_area(design, table: CostTable | None = None, with_regfile: bool = False) -> int:
    """NAND2-equivalent gate count of ``design`` (a RispDesign, subset or mnemonic list)."""
    t = table or default_table()
    mns = _mnemonics(design)
    missing = [m for m in mns if m not in t.weights]
    if missing:
        raise MissingWeight(", ".join(missing))
    fx = t.fixed
    total = fx["fetch"] + fx["pc_register"] + fx["modularex_base"]
    total += sum(t.weights[m] for m in mns) + fx["switch_per_case"] * len(mns)
    if with_regfile:
        total += fx["regfile"]
    return total


def flip_flops(table: CostTable | None = None, with_regfile: bool = False) -> int:
    t = table or default_table()
    ff = t.flip_flops.get("pc_register", 32)
    if with_regfile:
        ff += t.flip_flops.get("regfile", 480)
    return ff


def power_mw(nand2: float, ff: float, table: CostTable | None = None) -> float:
    t = table or default_table()
    return t.alpha * nand2 + t.beta_ff * ff


def fit_power(anchors: list[dict]) -> tuple[float, float]:
    """Least-squares (alpha, beta_ff) from anchors with nand2, flip_flops and power_mW."""
    a = np.array([[x["nand2"], x["flip_flops"]] for x in anchors], dtype=float)
    p = np.array([x["power_mW"] for x in anchors], dtype=float)
    (alpha, beta), *_ = np.linalg.lstsq(a, p, rcond=None)
    return float(alpha), float(beta)


def epi(power_mW: float, fmax_kHz: float, cpi: float) -> float:
    """Energy per instruction in nJ: P * CPI / f."""
    for name, v in (("power_mW", power_mW), ("fmax_kHz", fmax_kHz), ("cpi", cpi)):
        if not v > 0:
            raise NonPositiveInput(f"{name} must be positive, got {v}")
    return power_mW * 1e-3 * cpi / (fmax_kHz * 1e3) * 1e9


@dataclass(frozen=True)
class CostReport:
    design: str
    nand2: float
    power_mW: float
    fmax_kHz: float
    cpi: float
    epi_nJ: float
    flip_flops: int = 0
    n_instructions: int | None = None

    def __post_init__(self):
        for name in ("nand2", "power_mW", "fmax_kHz", "cpi", "epi_nJ"):
            if not getattr(self, name) > 0:
                raise NonPositiveInput(f"{self.design}: {name} must be positive")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> CostReport:
        p, f, c = obj["power_mW"], obj["fmax_kHz"], obj.get("cpi", 1)
        return cls(design=obj.get("design") or obj["name"], nand2=obj["nand2"], power_mW=p, fmax_kHz=f, cpi=c,
                   epi_nJ=obj.get("epi_nJ") or epi(p, f, c), flip_flops=obj.get("flip_flops", 0),
                   n_instructions=obj.get("n_instructions"))


def report(design, table: CostTable | None = None, fmax_kHz: float | None = None, cpi: float = 1.0,
           name: str | None = None, with_regfile: bool = False) -> CostReport:
    t = table or default_table()
    nand2 = estimate_area(design, t, with_regfile)
    ff = flip_flops(t, with_regfile)
    p = power_mw(nand2, ff, t)
    f = fmax_kHz or t.defaults.get("fmax_kHz", 1625)
    label = name or getattr(design, "name", None) or getattr(design, "label", None) or "design"
    return CostReport(label, nand2, p, f, cpi, epi(p, f, cpi), ff, len(_mnemonics(design)))


def load_baselines(path=None) -> list[CostReport]:
    if path is None:
        text = (resources.files("risp") / "data" / "baselines.json").read_text()
    else:
        text = Path(path).read_text()
    obj = json.loads(text)
    return [CostReport.from_json(x) for x in (obj if isinstance(obj, list) else [obj])]


def _geomean(xs):
    return math.exp(sum(math.log(x) for x in xs) / len(xs))


def compare_report(designs: list[CostReport], baselines: list[CostReport]) -> tuple[str, dict]:
    """Per-design deltas against each baseline plus a geometric-mean row.

    ``area_pct``/``power_pct`` are signed percentage changes; ``epi_x`` is
    how many times less energy per instruction the design needs.
    """
    if not baselines:
        raise ValueError("compare_report needs at least one baseline")
    rows, summary = [], []
    for b in baselines:
        for d in designs:
            rows.append({"design": d.design, "baseline": b.design,
                         "area_pct": (d.nand2 / b.nand2 - 1) * 100,
                         "power_pct": (d.power_mW / b.power_mW - 1) * 100,
                         "epi_x": b.epi_nJ / d.epi_nJ})
        if designs:
            summary.append({"design": "geomean", "baseline": b.design,
                            "area_pct": (_geomean([d.nand2 / b.nand2 for d in designs]) - 1) * 100,
                            "power_pct": (_geomean([d.power_mW / b.power_mW for d in designs]) - 1) * 100,
                            "epi_x": _geomean([b.epi_nJ / d.epi_nJ for d in designs])})
    lines = [f"{'design':<20}{'nand2':>8}{'ff':>6}{'mW':>8}{'kHz':>8}{'CPI':>5}{'EPI nJ':>9}"]
    for r in list(designs) + list(baselines):
        lines.append(f"{r.design:<20}{r.nand2:>8.0f}{r.flip_flops:>6}{r.power_mW:>8.3f}"
                     f"{r.fmax_kHz:>8.0f}{r.cpi:>5g}{r.epi_nJ:>9.3f}")
    lines.append("")
    lines.append(f"{'design':<20}{'vs':<14}{'area':>9}{'power':>9}{'EPI x':>8}")
    for r in rows + summary:
        lines.append(f"{r['design']:<20}{r['baseline']:<14}{r['area_pct']:>+8.1f}%"
                     f"{r['power_pct']:>+8.1f}%{r['epi_x']:>8.2f}")
    data = {"designs": [d.to_json() for d in designs], "baselines": [b.to_json() for b in baselines],
            "comparisons": rows, "summary": summary}
    return "\n".join(lines), data
