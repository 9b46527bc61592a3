import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from eulerlab import cli
from eulerlab.config import SCHEMA, ConfigError, ExperimentConfig, parse

pos = st.floats(1e-12, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), rel=pos, eps=st.lists(st.floats(1e-9, 1e-2), min_size=1, max_size=5),
       det=st.booleans(), out=st.text("abcxyz_/", min_size=1, max_size=12))
def test_config_round_trip(seed, rel, eps, det, out):
    cfg = ExperimentConfig({"run": {"seed": seed, "deterministic": det, "output_dir": out},
                            "quadrature": {"rel_tol": rel},
                            "extremal": {"eps": tuple(eps)}})
    text = cfg.serialize()
    again = parse(text)
    assert again.values == cfg.values
    assert again.serialize() == text
    assert again.digest() == cfg.digest()


def test_defaults_cover_schema():
    cfg = ExperimentConfig()
    for sec, keys in SCHEMA.items():
        assert set(cfg[sec]) == set(keys)


@pytest.mark.parametrize("text", [
    "[nope]\nx = 1\n",
    "[run]\ncolour = red\n",
    "[run]\nseed = abc\n",
    "[run]\ndeterministic = maybe\n",
    "[regions]\nh_grid = \n",
    "[regions]\nh_grid = 0.5\n",
    "[constants]\nC = 0.5\n",
    "[quadrature]\nrel_tol = -1\n",
    "not an ini file",
])
def test_config_rejects(text):
    with pytest.raises(ConfigError):
        parse(text)


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[regions]\nh_grid = \n")
    assert cli.main(["verify-regions", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "h_grid" in capsys.readouterr().err
    assert cli.main(["verify-regions", "--config", str(tmp_path / "missing.ini")]) == 2


def test_bounds_missing_history(tmp_path):
    cfg = tmp_path / "b.ini"
    cfg.write_text(f"[bounds]\nhistory = {tmp_path / 'none.csv'}\n")
    assert cli.main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_bounds_empty_history(tmp_path, capsys):
    hist = tmp_path / "h.csv"
    hist.write_text("# schema=1\nt,log_proxy\n")
    cfg = tmp_path / "b.ini"
    cfg.write_text(f"[bounds]\nhistory = {hist}\n")
    assert cli.main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert "warning" in capsys.readouterr().err
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["checks"] == []


def test_bounds_flags_fast_growth(tmp_path):
    # proxy jumping by e^20 in 0.01 time units violates the growth inequality
    hist = tmp_path / "h.csv"
    hist.write_text("# schema=1\nt,log_proxy\n0.0,4.0\n0.01,4.1\n0.02,24.0\n")
    cfg = tmp_path / "b.ini"
    cfg.write_text(f"[bounds]\nhistory = {hist}\n")
    assert cli.main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_simulate_zero_end_time(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text("[simulate]\nt_end = 0\nsnapshot_times = 0\n")
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert {c["status"] for c in report["checks"]} == {"not_applicable"}
    rows = (tmp_path / "o" / "timeseries.csv").read_text().splitlines()
    assert rows[0] == "# schema=1" and len(rows) == 4
    assert (tmp_path / "o" / "snapshot_00.svg").read_text().startswith("<?xml")


def test_kernel_battery_without_axis_symmetry(tmp_path):
    d = tmp_path / "battery"
    d.mkdir()
    (d / "free.txt").write_text("1.0 1 0\n0.1 0.1\n0.4 0.1\n0.4 0.3\n0.1 0.3\n")
    cfg = tmp_path / "k.ini"
    cfg.write_text(f"[kernel]\nbattery_dir = {d}\ngrid_n = 3\ncross_points = 3\n"
                   "domain_points = 3\ndeterminism_points = 10\n")
    cli.main(["verify-kernel", "--config", str(cfg), "--out", str(tmp_path / "o")])
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    cross = [c for c in report["checks"] if c["name"] == "kernel_cross_validation"][0]
    assert cross["details"]["axis_conditions"] == "not applicable"


def test_extremal_large_eps_probe(cli_runs):
    _, report = cli_runs["reports"]["extremal-sweep"]
    probes = {p["eps"]: p for p in report["notes"][0]["probes"]}
    assert probes[20.0]["status"] == "threshold exceeded"


def test_report_structure(cli_runs):
    for cmd, (code, report) in cli_runs["reports"].items():
        assert report["command"] == cmd
        assert "wall_time_s" not in report
        assert code == (1 if report["status"] == "fail" else 0)
        base = cli_runs["base"] / cmd
        # config hash matches the config written next to the report
        assert parse((base / "config.ini").read_text()).digest() == report["config_hash"]
        for art in report["artifacts"]:
            assert (base / art["path"]).is_file()


def test_manifest_matches_reports(cli_runs):
    seen = {}
    for cmd, (_, report) in cli_runs["reports"].items():
        for c in report["checks"]:
            assert c["name"] not in seen, f"{c['name']} reported twice"
            seen[c["name"]] = cmd
    assert seen == cli.ACCEPTANCE_MANIFEST


def test_csv_headers(cli_runs):
    for path in cli_runs["base"].rglob("*.csv"):
        assert path.read_text().startswith("# schema=1\n"), path


def test_snapshots_written(cli_runs):
    svgs = sorted((cli_runs["base"] / "simulate").glob("snapshot_*.svg"))
    assert len(svgs) >= 2
    text = svgs[-1].read_text()
    assert 'version="1.1"' in text and text.count("<path") >= 3


def test_reports_are_strict_json(cli_runs):
    for cmd in cli.COMMANDS:
        text = (cli_runs["base"] / cmd / "report.json").read_text()
        json.loads(text, parse_constant=lambda c: pytest.fail(f"non-finite {c} in {cmd}"))
