import json
import warnings
from pathlib import Path

import pytest

from eulerlab.cli import main

warnings.filterwarnings("ignore", message=".*TBB.*")

# filled by test_acceptance, printed after the run
ACCEPTANCE_LINES = []

COMMAND_ORDER = ("verify-regions", "verify-kernel", "extremal-sweep", "simulate", "bounds")


def run_all(base: Path) -> dict:
    """Run every subcommand in deterministic mode; returns name -> (exit code, report)."""
    out = {}
    for cmd in COMMAND_ORDER:
        args = [cmd, "--out", str(base / cmd), "--deterministic"]
        if cmd == "bounds":
            cfg = base / "bounds.ini"
            cfg.write_text(f"[bounds]\nhistory = {base / 'simulate' / 'timeseries.csv'}\n")
            args += ["--config", str(cfg)]
        code = main(args)
        report = json.loads((base / cmd / "report.json").read_text())
        out[cmd] = (code, report)
    return out


def snapshot_bytes(base: Path) -> dict:
    return {str(p.relative_to(base)): p.read_bytes() for p in sorted(base.rglob("*")) if p.is_file()}


@pytest.fixture(scope="session")
def cli_runs(tmp_path_factory):
    """Two full deterministic passes into the same directory."""
    base = tmp_path_factory.mktemp("lab")
    first = run_all(base)
    first_bytes = snapshot_bytes(base)
    second = run_all(base)
    second_bytes = snapshot_bytes(base)
    return {"base": base, "reports": first, "rerun": second,
            "bytes": first_bytes, "rerun_bytes": second_bytes}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
