"""Directed spillover network from a normalized decomposition."""
from __future__ import annotations

import numpy as np
import pandas as pd

from .connectedness import ConnectednessTable, measures_from_shares


def edge_list(table: ConnectednessTable, labels, threshold: float = 0.0) -> pd.DataFrame:
    """One edge per ordered pair with positive net pairwise flow above ``threshold``.

    ``npdc[i, j] > 0`` means i takes more from j than it gives, so the edge
    runs from j (transmitter) to i (receiver) with that NPDC as weight.
    """
    labels = list(labels)
    rows = []
    n = table.n
    for i in range(n):
        for j in range(n):
            v = table.npdc[i, j]
            if i != j and v > 0 and v > threshold:
                rows.append({"source": labels[j], "target": labels[i], "weight": float(v)})
    return pd.DataFrame(rows, columns=["source", "target", "weight"])


def node_list(table: ConnectednessTable, labels) -> pd.DataFrame:
    net = table.net
    return pd.DataFrame({
        "series": list(labels),
        "NET": net,
        "TO": table.to,
        "FROM": table.from_,
        "role": np.where(net > 0, "transmitter", np.where(net < 0, "receiver", "neutral")),
    })


def network_from_theta(theta_tilde, labels, threshold: float = 0.0, denominator: str = "n"):
    table = measures_from_shares(theta_tilde, denominator)
    return edge_list(table, labels, threshold), node_list(table, labels)


def network_json(edges: pd.DataFrame, nodes: pd.DataFrame) -> dict:
    return {
        "direction": "source transmits net spillover to target",
        "nodes": nodes.to_dict(orient="records"),
        "edges": edges.to_dict(orient="records"),
    }
