"""Command-line entry point: ``qconnect <command> [--config file.yaml] [--key value ...]``."""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .breaks import break_table
from .config import ConfigError, RunConfig, build_config, load_config
from .connectedness import connectedness
from .descriptive import correlation_frame, summary_table
from .frequency import frequency_connectedness
from .io import write_csv_atomic, write_json_atomic
from .network import edge_list, network_json, node_list
from .connectedness import measures_from_shares
from .panel import ReturnPanel, clean, load_csv, load_returns_csv, log_returns, split
from .portfolio import backtest
from .qvar import VmaCoefficients, fit_qvar, select_lag_bic, vma_coefficients
from .rolling import quantile_surface, relative_tail_dependence, rolling_connectedness, surface_frame
from .simulate import prices_from_returns, synthetic_panel

log = logging.getLogger("qconnect")

COMMANDS = ("ingest", "stats", "connectedness", "rolling", "portfolio", "breaks", "export-network", "simulate")

FIXED_DECISIONS = {
    "quantile_solver": "Frisch-Newton primal-dual interior point, Mehrotra corrector, "
                       "relative duality gap 1e-8, max 200 iterations, vertex polish",
    "design_condition_limit": 1e10,
    "moments": "std ddof=1; skewness m3/m2^1.5; excess kurtosis m4/m2^2-3",
    "jarque_bera": "T/6 (S^2 + K^2/4), chi-square(2)",
    "adf": "constant only; AIC lag search up to floor(12 (T/100)^0.25); MacKinnon p-values",
    "kendall": "tau-b, normal-approximation p-value",
    "gfevd_sum": "h = 0..H",
    "npdc_sign": "npdc[i,j] = theta_tilde[i,j] - theta_tilde[j,i]; network edge j -> i when positive",
    "frequency_grid": "midpoint omega_k = (k + 1/2) pi / K on (0, pi]",
    "frequency_vma_truncation": "horizon H (Parseval-exact against the time-domain table)",
    "band_normalization": "band raw aggregates divided by whole-range row sums",
    "band_membership": "(a, b], lower edge closed when a = 0",
    "portfolio_moments": "sample covariance / correlation over the rolling window",
    "weight_projection": "long-only: exact minimum on the simplex by a primal active-set QP",
    "hedging_effectiveness_test": "two-sided F-test of variance equality, (T-1, T-1) df",
    "sharpe_risk_free_rate": 0.0,
    "var_cvar_alpha": 0.05,
    "chow_model": "intercept only (k = 1)",
    "wilcoxon": "rank sum of the pre-break sample, tie-corrected normal approximation, no continuity correction",
    "rolling_failures": "flag and skip; never interpolated",
}


def _list_of_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _list_of_str(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _bands(text: str) -> list[dict]:
    out = []
    for item in text.split(","):
        label, a, b = item.split(":")
        out.append({"label": label.strip(), "a": a.strip(), "b": b.strip()})
    return out


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text}")


_FLAG_TYPES = {
    "window": int, "horizon": int, "p": int, "p_max": int, "grid_points": int, "step": int,
    "seed": int, "n_series": int, "n_obs": int, "n_jobs": int,
    "alpha": float, "network_threshold": float, "network_tau": float,
    "taus": _list_of_floats, "surface_taus": _list_of_floats, "strategies": _list_of_str,
    "bands": _bands, "reselect_each_window": _bool, "pairwise": _bool, "surface": _bool,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qconnect", description="Quantile connectedness toolkit")
    parser.add_argument("--version", action="version", version=f"qconnect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML file with RunConfig keys")
        p.add_argument("-v", "--verbose", action="store_true")
        for key in RunConfig.keys():
            flags = [f"--{key}"]
            if "_" in key:
                flags.append(f"--{key.replace('_', '-')}")
            p.add_argument(*flags, dest=key, type=_FLAG_TYPES.get(key, str), default=None)
    return parser


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_metadata(cfg: RunConfig, command: str, out: Path, extra: dict | None = None) -> None:
    payload = {
        "command": command,
        "version": __version__,
        "config": cfg.as_dict(),
        "decisions": {
            **FIXED_DECISIONS,
            "tci_denominator": cfg.tci_denominator,
            "sigma_estimator": cfg.sigma_estimator,
            "lag_policy": cfg.lag_policy,
            "bic_variant": cfg.bic_variant,
            "frequency_grid_points": cfg.grid_points,
            "network_threshold": cfg.network_threshold,
        },
        "input_sha256": _sha256(cfg.input) if cfg.input and Path(cfg.input).is_file() else None,
    }
    if extra:
        payload.update(extra)
    write_json_atomic(payload, out / "metadata.json")


def _returns(cfg: RunConfig) -> ReturnPanel:
    if cfg.input_kind == "returns":
        return load_returns_csv(cfg.input)
    return log_returns(clean(load_csv(cfg.input, {"date": cfg.date_column})))


def _choose_lag(cfg: RunConfig, panel: ReturnPanel) -> int:
    if cfg.lag_policy == "bic":
        return select_lag_bic(panel, cfg.p_max, cfg.bic_variant)
    return cfg.p


def cmd_ingest(cfg: RunConfig, out: Path) -> dict:
    if cfg.input_kind != "prices":
        raise ValueError("ingest expects a price CSV (input_kind = prices)")
    cleaned = clean(load_csv(cfg.input, {"date": cfg.date_column}))
    returns = log_returns(cleaned)
    cleaned.to_csv(out / "prices_clean.csv")
    returns.to_csv(out / "returns.csv")
    if cfg.break_date:
        pre, post = split(returns, cfg.break_date)
        pre.to_csv(out / "returns_pre.csv")
        post.to_csv(out / "returns_post.csv")
    return {"rows": returns.T, "series": list(returns.labels)}


def cmd_stats(cfg: RunConfig, out: Path) -> dict:
    panel = _returns(cfg)
    write_csv_atomic(summary_table(panel), out / "summary.csv")
    write_csv_atomic(correlation_frame(panel, cfg.alpha), out / "kendall.csv")
    if cfg.break_date:
        for name, part in zip(("pre", "post"), split(panel, cfg.break_date)):
            if part.T >= 10:
                write_csv_atomic(summary_table(part), out / f"summary_{name}.csv")
                write_csv_atomic(correlation_frame(part, cfg.alpha), out / f"kendall_{name}.csv")
    return {}


def _long_rows(table, labels, tau, band, pairwise=True) -> list[tuple]:
    rows = [(tau, band, "ALL", "TCI", table.tci)]
    for i, lab in enumerate(labels):
        rows += [(tau, band, lab, "TO", table.to[i]), (tau, band, lab, "FROM", table.from_[i]),
                 (tau, band, lab, "NET", table.net[i])]
    if pairwise:
        for i, a in enumerate(labels):
            for j, b in enumerate(labels):
                if i != j:
                    rows.append((tau, band, f"{a}|{b}", "NPDC", table.npdc[i, j]))
    return rows


def cmd_connectedness(cfg: RunConfig, out: Path) -> dict:
    panel = _returns(cfg)
    p = _choose_lag(cfg, panel)
    rows, theta_rows, explosive = [], [], []
    for tau in cfg.taus:
        model = fit_qvar(panel, p, tau, cfg.sigma_estimator)
        if model.explosive:
            explosive.append(tau)
        psi = vma_coefficients(model, max(cfg.horizon, 1))
        tables = {"total": connectedness(psi, model.sigma, cfg.horizon, cfg.tci_denominator, tau=tau)}
        tables.update(frequency_connectedness(VmaCoefficients(psi.psi[: cfg.horizon + 1]), model.sigma,
                                              cfg.band_objects(), cfg.grid_points, cfg.tci_denominator,
                                              cfg.horizon, tau))
        wide = pd.DataFrame(tables["total"].theta_tilde, columns=list(panel.labels))
        wide.insert(0, "series", list(panel.labels))
        write_csv_atomic(wide, out / f"theta_tilde_tau{tau:g}.csv")
        for band, table in tables.items():
            rows += _long_rows(table, panel.labels, tau, band)
            for i, a in enumerate(panel.labels):
                for j, b in enumerate(panel.labels):
                    theta_rows.append((tau, band, a, b, table.theta_tilde[i, j]))
    write_csv_atomic(pd.DataFrame(rows, columns=["tau", "band", "series", "measure", "value"]),
                     out / "measures.csv")
    write_csv_atomic(pd.DataFrame(theta_rows, columns=["tau", "band", "row", "col", "value"]),
                     out / "theta_bands.csv")
    return {"p_used": p, "explosive_taus": explosive}


def cmd_rolling(cfg: RunConfig, out: Path) -> dict:
    panel = _returns(cfg)
    rc = cfg.rolling()
    result = rolling_connectedness(panel, rc)
    write_csv_atomic(result.long_frame(pairwise=cfg.pairwise), out / "rolling.csv")
    write_csv_atomic(result.failure_frame(), out / "failures.csv")
    taus = sorted(result.taus)
    if len(taus) >= 2:
        rtd = relative_tail_dependence(result.series(taus[-1]), result.series(taus[0]))
        frame = pd.DataFrame({"date": rtd.index.strftime("%Y-%m-%d"), "upper_tau": taus[-1],
                              "lower_tau": taus[0], "value": rtd.to_numpy()})
        write_csv_atomic(frame, out / "relative_tail.csv")
    if cfg.surface:
        s_tci, s_net = quantile_surface(panel, cfg.rolling(taus=cfg.surface_taus))
        write_csv_atomic(surface_frame(s_tci, "TCI"), out / "tci_surface.csv")
        write_csv_atomic(surface_frame(s_net, "NET"), out / "net_surface.csv")
    lags = sorted(set(result.lags.values()))
    return {"dates": len(result.dates), "failures": len(result.failures), "p_used": lags,
            "explosive_windows": len(result.explosive)}


def cmd_portfolio(cfg: RunConfig, out: Path) -> dict:
    panel = _returns(cfg)
    rc = cfg.rolling()
    p = _choose_lag(cfg, panel)
    rc = type(rc)(**{**rc.__dict__, "p": p, "lag_policy": "fixed", "frequency": False})
    runs = []
    conn = None
    for strategy in cfg.strategies:
        if strategy == "mcop":
            if conn is None:
                conn = rolling_connectedness(panel.rows(0, panel.T - 1), rc)
            runs += [(f"mcop_tau{tau:g}", strategy, tau) for tau in cfg.taus]
        else:
            runs.append((strategy, strategy, 0.5))
    perf_rows, asset_frames, cumulative, failures = [], [], {}, 0
    for name, strategy, tau in runs:
        path, report = backtest(panel, strategy, tau, rc, cfg.break_date, connectedness_result=conn)
        write_csv_atomic(path.frame(), out / f"weights_{name}.csv")
        failures += len(report.failures)
        cumulative[name] = report.cumulative
        for period, rep in [("full", report), *report.sub_reports.items()]:
            perf_rows += [{"portfolio": name, "period": period, "metric": k, "value": v}
                          for k, v in rep.performance_rows().items()]
            af = rep.asset_frame()
            af.insert(0, "period", period)
            af.insert(0, "portfolio", name)
            asset_frames.append(af)
    write_csv_atomic(pd.DataFrame(perf_rows), out / "report.csv")
    write_csv_atomic(pd.concat(asset_frames, ignore_index=True), out / "assets.csv")
    cum = pd.DataFrame(cumulative)
    cum.insert(0, "date", cum.index.strftime("%Y-%m-%d"))
    write_csv_atomic(cum, out / "cumulative.csv")
    return {"p_used": p, "failures": failures}


def cmd_breaks(cfg: RunConfig, out: Path) -> dict:
    if not cfg.break_date:
        raise ValueError("breaks needs a break_date")
    frame = pd.read_csv(cfg.input, float_precision="round_trip")
    if "date" not in frame.columns:
        raise ValueError("breaks expects a dated long-format measure CSV (rolling output)")
    write_csv_atomic(break_table(frame, cfg.break_date, cfg.measure, cfg.series), out / "breaks.csv")
    return {}


def _network_inputs(cfg: RunConfig):
    frame = pd.read_csv(cfg.input, float_precision="round_trip")
    if {"measure", "series", "value"} <= set(frame.columns):
        sel = frame
        if "tau" in sel.columns:
            sel = sel[np.isclose(sel["tau"], cfg.network_tau)]
        if "band" in sel.columns:
            sel = sel[sel["band"] == cfg.network_band]
        if "date" in sel.columns:
            sel = sel[sel["date"] == sel["date"].max()]
        net = sel[sel["measure"] == "NET"]
        labels = list(net["series"])
        if not labels:
            raise ValueError("no NET rows for the requested tau/band")
        npdc = np.zeros((len(labels), len(labels)))
        pairs = sel[sel["measure"] == "NPDC"]
        if pairs.empty:
            raise ValueError("measure table has no NPDC rows; rerun with pairwise output")
        for key, v in zip(pairs["series"], pairs["value"]):
            a, b = key.split("|")
            npdc[labels.index(a), labels.index(b)] = v
        nodes = pd.DataFrame({"series": labels, "NET": net["value"].to_numpy(float)})
        for m in ("TO", "FROM"):
            nodes[m] = sel[sel["measure"] == m]["value"].to_numpy(float)
        nodes["role"] = np.where(nodes["NET"] > 0, "transmitter", np.where(nodes["NET"] < 0, "receiver", "neutral"))
        edges = []
        for i, tgt in enumerate(labels):
            for j, src in enumerate(labels):
                if i != j and npdc[i, j] > 0 and npdc[i, j] > cfg.network_threshold:
                    edges.append({"source": src, "target": tgt, "weight": float(npdc[i, j])})
        return pd.DataFrame(edges, columns=["source", "target", "weight"]), nodes
    labels = list(frame.iloc[:, 0].astype(str))
    table = measures_from_shares(frame.iloc[:, 1:].to_numpy(float), cfg.tci_denominator)
    return edge_list(table, labels, cfg.network_threshold), node_list(table, labels)


def cmd_export_network(cfg: RunConfig, out: Path) -> dict:
    edges, nodes = _network_inputs(cfg)
    if cfg.network_format == "json":
        write_json_atomic(network_json(edges, nodes), out / "network.json")
    else:
        write_csv_atomic(edges, out / "edges.csv")
        write_csv_atomic(nodes, out / "nodes.csv")
    return {"edges": len(edges)}


def cmd_simulate(cfg: RunConfig, out: Path) -> dict:
    returns = synthetic_panel(cfg.n_series, cfg.n_obs, cfg.seed, cfg.dgp)
    prices_from_returns(returns).to_csv(out / "prices.csv")
    return {"seed": cfg.seed}


HANDLERS = {
    "ingest": cmd_ingest, "stats": cmd_stats, "connectedness": cmd_connectedness,
    "rolling": cmd_rolling, "portfolio": cmd_portfolio, "breaks": cmd_breaks,
    "export-network": cmd_export_network, "simulate": cmd_simulate,
}


def run(command: str, cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        cfg.validate(need_input=command != "simulate")
    except ConfigError as exc:
        print(f"qconnect {command}: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    try:
        extra = HANDLERS[command](cfg, out)
    except (ValueError, np.linalg.LinAlgError, OSError) as exc:
        print(f"qconnect {command}: error: {exc}", file=sys.stderr)
        return 1
    _write_metadata(cfg, command, out, {"results": extra})
    log.info("%s finished; outputs in %s", command, out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k) for k in RunConfig.keys()}
    try:
        file_values = load_config(args.config) if args.config else {}
        cfg = build_config(file_values, overrides)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"qconnect {args.command}: {exc}", file=sys.stderr)
        return 2
    return run(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
