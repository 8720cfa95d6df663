import json

import numpy as np
import pandas as pd
import pytest

from qconnect.cli import main
from qconnect.config import RunConfig, parse_angle
from qconnect.connectedness import measures
from qconnect.panel import load_returns_csv


@pytest.fixture
def prices(tmp_path):
    assert main(["simulate", "--seed", "7", "--n-series", "3", "--n-obs", "90", "--output", str(tmp_path / "sim")]) == 0
    return tmp_path / "sim" / "prices.csv"


def read_bytes(folder):
    return {p.name: p.read_bytes() for p in sorted(folder.iterdir())}


def test_connectedness_rerun_bit_identical(prices, tmp_path):
    args = ["connectedness", "--input", str(prices), "--horizon", "10", "--grid-points", "100"]
    assert main(args + ["--output", str(tmp_path / "a")]) == 0
    a = read_bytes(tmp_path / "a")
    assert main(args + ["--output", str(tmp_path / "a")]) == 0
    assert read_bytes(tmp_path / "a") == a
    assert {"measures.csv", "theta_bands.csv", "metadata.json", "theta_tilde_tau0.5.csv"} <= set(a)
    wide = pd.read_csv(tmp_path / "a" / "theta_tilde_tau0.5.csv", float_precision="round_trip")
    measures(wide.iloc[:, 1:].to_numpy())  # rows sum to one
    meta = json.loads((tmp_path / "a" / "metadata.json").read_text())
    for key in ("tci_denominator", "sigma_estimator", "bic_variant", "band_normalization",
                "frequency_grid_points", "frequency_vma_truncation", "weight_projection"):
        assert key in meta["decisions"]
    assert meta["config"]["horizon"] == 10 and len(meta["input_sha256"]) == 64


def test_rolling_window_plus_nine_gives_ten_dates(prices, tmp_path):
    # 90 simulated returns (91 prices); window 81 -> 10 window ends
    out = tmp_path / "roll"
    assert main(["rolling", "--input", str(prices), "--window", "81", "--horizon", "5", "--grid-points", "50",
                 "--taus", "0.5", "--output", str(out)]) == 0
    frame = pd.read_csv(out / "rolling.csv")
    assert frame["date"].nunique() == 10
    assert json.loads((out / "metadata.json").read_text())["results"]["dates"] == 10


def test_export_network_edges_and_nodes(prices, tmp_path):
    conn = tmp_path / "conn"
    assert main(["connectedness", "--input", str(prices), "--horizon", "10", "--grid-points", "100",
                 "--output", str(conn)]) == 0
    net = tmp_path / "net"
    assert main(["export-network", "--input", str(conn / "measures.csv"), "--output", str(net)]) == 0
    edges = pd.read_csv(net / "edges.csv")
    nodes = pd.read_csv(net / "nodes.csv")
    assert list(edges.columns) == ["source", "target", "weight"]
    assert (edges["weight"] > 0).all()
    assert len(edges) == 3  # one positive direction per unordered pair (ties aside)
    transmitters = set(nodes.loc[nodes["NET"] > 0, "series"])
    assert set(edges["source"]) & transmitters
    wide = tmp_path / "wide"
    assert main(["export-network", "--input", str(conn / "theta_tilde_tau0.5.csv"), "--network-format", "json",
                 "--output", str(wide)]) == 0
    payload = json.loads((wide / "network.json").read_text())
    pairs = {(e["source"], e["target"]) for e in payload["edges"]}
    assert pairs == set(zip(edges["source"], edges["target"]))


def test_ingest_stats_breaks_and_portfolio(prices, tmp_path):
    ing = tmp_path / "ing"
    assert main(["ingest", "--input", str(prices), "--break-date", "2020-03-02", "--output", str(ing)]) == 0
    r = load_returns_csv(ing / "returns.csv")
    pre, post = load_returns_csv(ing / "returns_pre.csv"), load_returns_csv(ing / "returns_post.csv")
    assert pre.T + post.T == r.T
    st = tmp_path / "st"
    assert main(["stats", "--input", str(ing / "returns.csv"), "--input-kind", "returns", "--output", str(st)]) == 0
    assert len(pd.read_csv(st / "summary.csv")) == 3
    roll = tmp_path / "roll"
    assert main(["rolling", "--input", str(prices), "--window", "40", "--horizon", "5", "--grid-points", "50",
                 "--output", str(roll)]) == 0
    brk = tmp_path / "brk"
    assert main(["breaks", "--input", str(roll / "rolling.csv"), "--break-date", "2020-04-01",
                 "--output", str(brk)]) == 0
    table = pd.read_csv(brk / "breaks.csv")
    assert len(table) == 3 * 4 and table["chow_pvalue"].between(0, 1).all()
    port = tmp_path / "port"
    assert main(["portfolio", "--input", str(prices), "--window", "40", "--horizon", "5", "--taus", "0.5",
                 "--output", str(port)]) == 0
    w = pd.read_csv(port / "weights_mcop_tau0.5.csv")
    np.testing.assert_allclose(w.iloc[:, 1:].sum(axis=1), 1.0, atol=1e-10)
    report = pd.read_csv(port / "report.csv")
    assert set(report["portfolio"]) == {"mvp", "mcp", "mcop_tau0.5"}


def test_config_file_and_flag_override(prices, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(f"input: {prices}\nwindow: 70\nhorizon: 5\ngrid_points: 50\ntaus: [0.5]\n"
                   "bands:\n  - {label: fast, a: pi/4, b: pi}\n  - {label: slow, a: 0, b: pi/4}\n")
    out = tmp_path / "cfg"
    assert main(["rolling", "--config", str(cfg), "--window", "81", "--output", str(out)]) == 0
    frame = pd.read_csv(out / "rolling.csv")
    assert frame["date"].nunique() == 10
    assert set(frame["band"]) == {"total", "fast", "slow"}


def test_config_errors_listed_together(tmp_path, capsys):
    code = main(["rolling", "--input", str(tmp_path / "missing.csv"), "--window", "0", "--step", "0",
                 "--tci-denominator", "n+1", "--taus", "0.5,1.2"])
    assert code == 2
    err = capsys.readouterr().err
    for phrase in ("window", "step", "tci_denominator", "taus", "input file not found"):
        assert phrase in err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("windw: 10\n")
    assert main(["rolling", "--config", str(cfg)]) == 2
    assert "windw" in capsys.readouterr().err


def test_module_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "p.csv"
    bad.write_text("date,A\n2021-01-04,1\n2021-01-04,2\n")
    assert main(["ingest", "--input", str(bad), "--output", str(tmp_path / "o")]) == 1
    assert "duplicate date" in capsys.readouterr().err


def test_defaults_match_reference_setup():
    cfg = RunConfig()
    assert (cfg.window, cfg.horizon, cfg.p, cfg.taus) == (200, 20, 1, [0.05, 0.5, 0.95])
    assert [b.label for b in cfg.band_objects()] == ["short", "medium", "long"]
    assert parse_angle("pi/5") == pytest.approx(np.pi / 5) and parse_angle("2*pi/5") == pytest.approx(2 * np.pi / 5)
