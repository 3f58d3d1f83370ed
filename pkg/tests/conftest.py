import shutil
import sys
from pathlib import Path

import pytest

from risp import asm
from risp.profile import ProgramImage

TESTS = Path(__file__).parent
GOLDEN = TESTS / "golden"
sys.path.insert(0, str(TESTS))

VERILATOR = shutil.which("verilator-cli")
needs_verilator = pytest.mark.skipif(VERILATOR is None, reason="verilator-cli not installed")


def image_from_asm(source: str, base: int = 0, name: str = "t", data=()) -> ProgramImage:
    return ProgramImage(name, tuple(asm.assemble(source, base)), "flat_binary", base, tuple(data))


@pytest.fixture
def asm_image():
    return image_from_asm


def corpus_ranked_subset(n: int = 18):
    """The n most-used mnemonics across the bundled programs (program count, then static count)."""
    from collections import Counter

    from risp import programs
    from risp.profile import InstructionSubset, profile

    progs, static = Counter(), Counter()
    for name in programs.names():
        p = profile(programs.get(name).image())
        progs.update(p.distinct)
        static.update(p.static_counts)
    ranked = sorted(progs, key=lambda m: (-progs[m], -static[m], m))
    return InstructionSubset.of(ranked[:n], label=f"corpus-top{n}")


# acceptance table: every test marked criterion(n) contributes to criterion n
_CRITERIA: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    n = getattr(report, "criterion", None)
    if n is None:
        return
    row = _CRITERIA.setdefault(n, {"passed": 0, "failed": 0, "skipped": 0, "seconds": 0.0, "notes": []})
    if report.when == "call" or report.outcome != "passed":
        row[report.outcome] += 1
    row["seconds"] += report.duration
    row["notes"] += [v for k, v in report.user_properties if k == "note"] if report.when == "call" else []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result().criterion = m.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        r = _CRITERIA[n]
        verdict = "FAIL" if r["failed"] else "PASS" if r["passed"] else "SKIP"
        tr.write_line(f"criterion {n}: {verdict}  ({r['passed']} passed, {r['failed']} failed, "
                      f"{r['skipped']} skipped, {r['seconds']:.1f} s)")
        for note in r["notes"]:
            tr.write_line(f"    {note}")
