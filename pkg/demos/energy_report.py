"""Compare one RISP per bundled program, plus the corpus-wide design, with
the full RV32E core and the bit-serial Serv baseline.

    python demos/energy_report.py
"""

from risp import metrics, programs
from risp.profile import merge_profiles, profile


def main():
    profs = [profile(programs.get(n).image()) for n in programs.names()]
    designs = [metrics.report(p.distinct, name=p.name) for p in profs]
    merged = merge_profiles(profs, "corpus")
    designs.append(metrics.report(merged.distinct, name=f"corpus ({len(merged.distinct)})"))
    text, _ = metrics.compare_report(designs, metrics.load_baselines())
    print(text)
    print("\nArea and power are calibrated estimates, not synthesis results; fmax defaults to 1625 kHz.")


if __name__ == "__main__":
    main()
