"""Rewrite every bundled program for the 12-instruction minimal subset and
show that its signature survives.

    python demos/retarget_minimal.py
"""

from risp import programs, retarget, sim
from risp.profile import InstructionSubset, profile
from risp.sim import SimConfig

MINIMAL = InstructionSubset.of(retarget.MINIMAL_SUBSET, label="minimal")


def main():
    print("minimal subset:", ", ".join(MINIMAL))
    print(f"\n{'program':<12}{'sites':>6}{'before':>8}{'after':>7}{'overhead':>10}  signature")
    for name in programs.names():
        bp = programs.get(name)
        img = bp.image()
        ref = sim.run(img, SimConfig(signature_region=bp.signature_region))
        new, plan = retarget.retarget(img, MINIMAL)
        got = sim.run(new, SimConfig(subset=MINIMAL, signature_region=bp.signature_region))
        same = sim.signature(got) == sim.signature(ref)
        assert set(profile(new).distinct) <= set(MINIMAL)
        print(f"{name:<12}{len(plan.rewrites):>6}{plan.size_before:>8}{plan.size_after:>7}"
              f"{plan.overhead_fraction:>9.0%}  {'same' if same else 'DIFFERENT'}"
              f"  ({ref.cycles} -> {got.cycles} cycles)")

    # a single rule up close
    rule = {r.source_mnemonic: r for r in retarget.load_catalog()}["bne"]
    print(f"\nbne expands to {rule.length} instructions:")
    for line in rule.template:
        print("   ", line)
    v = retarget.verify_rule(rule, 10_000)
    print(f"verify_rule: {v.kind} over {v.trials} randomized states")


if __name__ == "__main__":
    main()
