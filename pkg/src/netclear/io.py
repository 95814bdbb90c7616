"""File formats: market JSON, payment/compression edge lists, edge-list CSV.

Market files look like

    {"banks": ["a", "b"],
     "endowments": ["1", "0"],
     "alpha": ["1", "1"],
     "beta": ["1", "1"],
     "liabilities": [{"from": "a", "to": "b", "amount": "2"}],
     "priorities": {"a": [["b"]]}}

Amounts are decimal strings parsed exactly; "p/q" fraction strings are also
accepted.  Missing priorities default to a single group per bank; missing
alpha/beta default to 1.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from fractions import Fraction
from typing import Iterable

from .errors import InvalidInputError
from .market import ClearingVector, Compression, FinancialMarket, single_group_priorities
from .rational import format_rational, parse_rational


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def market_to_dict(market: FinancialMarket) -> dict:
    edges = [
        {"from": market.names[i], "to": market.names[j], "amount": format_rational(v)}
        for i, row in enumerate(market.liabilities)
        for j, v in enumerate(row)
        if v > 0
    ]
    prios = {
        market.names[i]: [[market.names[j] for j in grp] for grp in groups]
        for i, groups in enumerate(market.priorities)
        if groups
    }
    return {
        "banks": list(market.names),
        "endowments": [format_rational(v) for v in market.endowments],
        "alpha": [format_rational(v) for v in market.alpha],
        "beta": [format_rational(v) for v in market.beta],
        "liabilities": edges,
        "priorities": prios,
    }


def market_from_dict(data: dict) -> FinancialMarket:
    try:
        names = [str(x) for x in data["banks"]]
    except (KeyError, TypeError) as exc:
        raise InvalidInputError("market file needs a 'banks' list") from exc
    n = len(names)
    index = {name: i for i, name in enumerate(names)}
    if len(index) != n:
        raise InvalidInputError("duplicate bank names")

    def vector(key, default):
        raw = data.get(key)
        if raw is None:
            return [Fraction(default)] * n
        if len(raw) != n:
            raise InvalidInputError(f"'{key}' must have {n} entries")
        return [parse_rational(v) for v in raw]

    endowments = vector("endowments", 0)
    alpha = vector("alpha", 1)
    beta = vector("beta", 1)

    liab = [[Fraction(0)] * n for _ in range(n)]
    for edge in data.get("liabilities", []):
        try:
            i = index[edge["from"]]
            j = index[edge["to"]]
            amount = parse_rational(edge["amount"])
        except KeyError as exc:
            raise InvalidInputError(f"bad liability edge {edge!r}") from exc
        if amount < 0:
            raise InvalidInputError(f"negative liability {edge!r}")
        liab[i][j] += amount

    raw_prios = data.get("priorities") or {}
    if raw_prios:
        prios: list[tuple[tuple[int, ...], ...]] = []
        for i, name in enumerate(names):
            if name in raw_prios:
                groups = tuple(
                    tuple(index[c] for c in grp) for grp in raw_prios[name]
                )
            else:
                groups = single_group_priorities(liab)[i]
            prios.append(groups)
        priorities = tuple(prios)
    else:
        priorities = None
    return FinancialMarket.create(names, liab, endowments, alpha, beta, priorities)


def load_market(path: str) -> FinancialMarket:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f"cannot read market file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"market file {path} is not valid JSON: {exc}") from exc
    return market_from_dict(data)


def save_market(path: str, market: FinancialMarket) -> None:
    atomic_write_text(path, json.dumps(market_to_dict(market), indent=2) + "\n")


def _edge_list(names, matrix, key):
    return [
        {"from": names[i], "to": names[j], "amount": format_rational(v)}
        for i, row in enumerate(matrix)
        for j, v in enumerate(row)
        if v != 0
    ]


def payments_to_dict(market: FinancialMarket, p: ClearingVector, defaulting: Iterable[int]) -> dict:
    return {
        "payments": _edge_list(market.names, p.payments, "payments"),
        "defaulting": sorted(market.names[i] for i in defaulting),
    }


def compression_to_dict(market: FinancialMarket, c: Compression) -> dict:
    return {"compression": _edge_list(market.names, c.reductions, "compression")}


def matrix_from_edges(names: Iterable[str], edges: Iterable[dict]) -> list[list[Fraction]]:
    names = list(names)
    index = {name: i for i, name in enumerate(names)}
    out = [[Fraction(0)] * len(names) for _ in names]
    for edge in edges:
        out[index[edge["from"]]][index[edge["to"]]] += parse_rational(edge["amount"])
    return out


def read_edge_list_csv(path: str) -> list[tuple[str, str, Fraction]]:
    """Read a `from,to,amount` CSV into (from, to, amount) triples."""
    rows = []
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"from", "to", "amount"} <= set(reader.fieldnames):
                raise InvalidInputError(f"{path}: header must contain from,to,amount")
            for rec in reader:
                rows.append((rec["from"], rec["to"], parse_rational(rec["amount"])))
    except OSError as exc:
        raise InvalidInputError(f"cannot read edge list {path}: {exc}") from exc
    return rows
