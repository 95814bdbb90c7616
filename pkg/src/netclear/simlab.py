"""Instance generation and the baseline / greedy / MILP comparison harness.

Randomness runs through numpy's SeedSequence: an experiment derives one child
sequence per (market size, instance index) as SeedSequence([base_seed, size,
index]), so instances are reproducible individually and in parallel.  Money
amounts are snapped to a two-decimal grid; without a grid the MILP's binary
expansion of compression values would be unbounded.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .clearing import clear_proportional
from .compressflow import greedy_compress
from .errors import BudgetExceededError, DisconnectedExhaustionError, InvalidInputError
from .io import atomic_write_text
from .market import FinancialMarket, defaulting_set
from .milp import optimal_compress
from .rational import from_decimal_float

ZERO = Fraction(0)

GRID_PLACES = 2
PARAM_PLACES = 4

MILP_STATUS_OPTIMAL = "optimal"
MILP_STATUS_BUDGET = "budget-exceeded"
MILP_STATUS_SCALE = "desk-scale-exceeded"


@dataclass(frozen=True)
class GenConfig:
    n: int
    p: float
    liability: tuple  # ("uniform", lo, hi) | ("lognormal", mean)
    endowment: tuple  # ("uniform-fraction", frac) | ("lognormal-noise", sigma, frac)
    alpha_range: tuple[float, float] = (1.0, 1.0)
    beta_range: tuple[float, float] = (1.0, 1.0)
    seed: int = 0
    # decimal grid for sampled money; 0 draws whole units, which keeps the
    # MILP's binary expansion short on large-liability sweeps
    grid_places: int = GRID_PLACES

    def validate(self) -> None:
        if self.n < 1:
            raise InvalidInputError("n must be positive")
        if not 0 <= self.p <= 1:
            raise InvalidInputError("edge probability must lie in [0,1]")
        kind = self.liability[0]
        if kind == "uniform":
            lo, hi = self.liability[1], self.liability[2]
            if not 0 < lo <= hi:
                raise InvalidInputError("need 0 < lo <= hi for uniform liabilities")
        elif kind == "lognormal":
            if self.liability[1] <= 0:
                raise InvalidInputError("lognormal mean must be positive")
        else:
            raise InvalidInputError(f"unknown liability distribution {kind!r}")
        ekind = self.endowment[0]
        if ekind == "uniform-fraction":
            if self.endowment[1] < 0:
                raise InvalidInputError("endowment fraction must be nonnegative")
        elif ekind == "lognormal-noise":
            if self.endowment[1] <= 0 or self.endowment[2] < 0:
                raise InvalidInputError("need sigma > 0 and frac >= 0")
        else:
            raise InvalidInputError(f"unknown endowment rule {ekind!r}")
        for name, (lo, hi) in (("alpha", self.alpha_range), ("beta", self.beta_range)):
            if not 0 <= lo <= hi <= 1:
                raise InvalidInputError(f"{name} range must satisfy 0 <= lo <= hi <= 1")

    @staticmethod
    def from_dict(data: dict) -> "GenConfig":
        liab = data.get("liability", {"kind": "uniform", "lo": 100, "hi": 1000})
        if liab["kind"] == "uniform":
            liability = ("uniform", float(liab["lo"]), float(liab["hi"]))
        else:
            liability = ("lognormal", float(liab["mean"]))
        endow = data.get("endowment", {"kind": "uniform-fraction", "frac": 0.8})
        if endow["kind"] == "uniform-fraction":
            endowment = ("uniform-fraction", float(endow["frac"]))
        else:
            endowment = ("lognormal-noise", float(endow["sigma"]), float(endow["frac"]))
        return GenConfig(
            n=int(data["n"]),
            p=float(data.get("p", 0.2)),
            liability=liability,
            endowment=endowment,
            alpha_range=tuple(data.get("alpha", (1.0, 1.0))),
            beta_range=tuple(data.get("beta", (1.0, 1.0))),
            seed=int(data.get("seed", 0)),
            grid_places=int(data.get("grid_places", GRID_PLACES)),
        )


def _draw_liability(rng: np.random.Generator, dist: tuple, places: int) -> Fraction:
    smallest = Fraction(1, 10**places)
    if dist[0] == "uniform":
        lo, hi = dist[1], dist[2]
        value = rng.uniform(lo, hi)
        return max(from_decimal_float(value, places), from_decimal_float(lo, places))
    mean = dist[1]
    # exp(N(mu, 1)) has mean exp(mu + 1/2); pick mu so the mean comes out right
    mu = math.log(mean) - 0.5
    value = float(rng.lognormal(mu, 1.0))
    return max(from_decimal_float(value, places), smallest)


def gen_erdos_renyi(config: GenConfig, seed_seq: Optional[np.random.SeedSequence] = None) -> FinancialMarket:
    """G(n, p) liability digraph: every ordered pair gets an arc independently
    with probability p; one alpha and one beta are shared by all banks of the
    instance."""
    config.validate()
    if seed_seq is None:
        seed_seq = np.random.SeedSequence(config.seed)
    rng = np.random.default_rng(seed_seq)
    n = config.n

    alo, ahi = config.alpha_range
    blo, bhi = config.beta_range
    alpha = from_decimal_float(rng.uniform(alo, ahi), PARAM_PLACES)
    beta = from_decimal_float(rng.uniform(blo, bhi), PARAM_PLACES)

    liab = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < config.p:
                liab[i][j] = _draw_liability(rng, config.liability, config.grid_places)

    endow = [ZERO] * n
    for i in range(n):
        total = sum(liab[i], ZERO)
        if config.endowment[0] == "uniform-fraction":
            frac = config.endowment[1]
            endow[i] = from_decimal_float(rng.uniform(0.0, frac * float(total)), config.grid_places)
        else:
            sigma, frac = config.endowment[1], config.endowment[2]
            noise = float(rng.lognormal(0.0, sigma))
            endow[i] = from_decimal_float(frac * float(total) * noise, config.grid_places)

    names = [f"bank{i}" for i in range(n)]
    return FinancialMarket.create(names, liab, endow, [alpha] * n, [beta] * n)


def snowball_sample(edge_list, target_n: int, seed: int) -> FinancialMarket:
    """Grow a bank set by walking to positive-liability out-neighbors of the
    last picked bank, restarting uniformly when stuck, until target_n distinct
    banks are collected; returns the induced sub-market with endowments from
    the uniform-fraction(0.8) rule."""
    if target_n < 1:
        raise InvalidInputError("target_n must be at least 1")
    banks = sorted({e[0] for e in edge_list} | {e[1] for e in edge_list})
    if len(banks) < target_n:
        raise DisconnectedExhaustionError(
            f"edge list has {len(banks)} banks, cannot sample {target_n}"
        )
    adjacency: dict[str, list[str]] = {b: [] for b in banks}
    weights: dict[tuple[str, str], Fraction] = {}
    for frm, to, amount in edge_list:
        amount = Fraction(amount)
        if amount > 0:
            key = (frm, to)
            if key not in weights:
                adjacency[frm].append(to)
            weights[key] = weights.get(key, ZERO) + amount
    for b in adjacency:
        adjacency[b].sort()

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    picked: list[str] = []
    picked_set: set[str] = set()

    def pick_restart() -> str:
        return banks[int(rng.integers(len(banks)))]

    current = pick_restart()
    steps_cap = 1000 * target_n * max(1, len(banks))
    steps = 0
    while len(picked) < target_n:
        if current not in picked_set:
            picked.append(current)
            picked_set.add(current)
            if len(picked) == target_n:
                break
        steps += 1
        if steps > steps_cap:
            raise DisconnectedExhaustionError(
                f"sampled only {len(picked)} of {target_n} banks after {steps_cap} steps"
            )
        neighbors = adjacency[current]
        if neighbors:
            current = neighbors[int(rng.integers(len(neighbors)))]
        else:
            current = pick_restart()

    n = len(picked)
    index = {b: i for i, b in enumerate(picked)}
    liab = [[ZERO] * n for _ in range(n)]
    for (frm, to), amount in sorted(weights.items()):
        if frm in index and to in index:
            liab[index[frm]][index[to]] = amount
    endow = [ZERO] * n
    for i in range(n):
        total = sum(liab[i], ZERO)
        endow[i] = from_decimal_float(rng.uniform(0.0, 0.8 * float(total)), GRID_PLACES)
    return FinancialMarket.create(picked, liab, endow)


# ---------------------------------------------------------------------------
# Experiment harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InstanceRow:
    size: int
    instance: int
    seed_key: tuple[int, int, int]
    defaults_baseline: int
    defaults_greedy: int
    defaults_milp: Optional[int]
    milp_status: str
    milp_nodes: int
    time_baseline: float
    time_greedy: float
    time_milp: float

    def completed(self) -> bool:
        return self.milp_status == MILP_STATUS_OPTIMAL


@dataclass(frozen=True)
class SizeSummary:
    size: int
    method: str
    count: int
    mean_defaults: Optional[float]
    ci_lo: Optional[float]
    ci_hi: Optional[float]


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[InstanceRow, ...]
    summaries: tuple[SizeSummary, ...]

    def dominance_violations(self) -> list[InstanceRow]:
        """Completed rows breaking defaults_milp <= defaults_greedy <=
        defaults_baseline."""
        out = []
        for row in self.rows:
            if row.defaults_greedy > row.defaults_baseline:
                out.append(row)
            elif row.completed() and row.defaults_milp > row.defaults_greedy:
                out.append(row)
        return out


def _mean_ci(values: list[float]) -> tuple[Optional[float], Optional[float], Optional[float]]:
    if not values:
        return None, None, None
    k = len(values)
    mean = sum(values) / k
    if k == 1:
        return mean, mean, mean
    var = sum((v - mean) ** 2 for v in values) / (k - 1)
    half = 1.96 * math.sqrt(var / k)
    return mean, mean - half, mean + half


def instance_seed(base_seed: int, size: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([base_seed, size, index])


def _binary_count(market: FinancialMarket) -> int:
    """Binary variables the compression MILP would need for this market."""
    from .milp import choose_scale

    s = choose_scale(market)
    total = 2 * market.n  # default indicators plus class selectors (<= n each)
    for i, j in market.arcs():
        total += int(market.liabilities[i][j] * s).bit_length()
    return total


def run_experiment(
    sizes,
    instances_per_size: int,
    template: GenConfig,
    milp_time_budget: Optional[float] = 60.0,
    milp_node_budget=200_000,
    milp_size_cap: Optional[int] = None,
) -> ExperimentReport:
    """Generate instances per size and compare defaults without compression,
    after greedy compression, and at the MILP optimum.  MILP budget overruns
    are recorded as data, never dropped.

    `milp_node_budget` may be an int or a callable size -> int; node budgets
    keep the set of completed instances reproducible, unlike wall-clock ones.
    `milp_size_cap` skips the MILP outright (status desk-scale-exceeded) when
    the encoding would need more than that many binary variables.
    """
    rows: list[InstanceRow] = []
    for size in sizes:
        node_budget = (
            milp_node_budget(size) if callable(milp_node_budget) else milp_node_budget
        )
        for k in range(instances_per_size):
            seq = instance_seed(template.seed, size, k)
            cfg = GenConfig(
                n=size,
                p=template.p,
                liability=template.liability,
                endowment=template.endowment,
                alpha_range=template.alpha_range,
                beta_range=template.beta_range,
                seed=template.seed,
                grid_places=template.grid_places,
            )
            market = gen_erdos_renyi(cfg, seq)

            t0 = time.perf_counter()
            baseline = clear_proportional(market)
            t_base = time.perf_counter() - t0
            n_base = len(defaulting_set(market, baseline))

            t0 = time.perf_counter()
            _, residual = greedy_compress(market)
            after = clear_proportional(residual)
            t_greedy = time.perf_counter() - t0
            n_greedy = len(defaulting_set(residual, after))

            t0 = time.perf_counter()
            n_milp: Optional[int] = None
            nodes = 0
            if milp_size_cap is not None and _binary_count(market) > milp_size_cap:
                status = MILP_STATUS_SCALE
            else:
                try:
                    result = optimal_compress(
                        market,
                        node_budget=node_budget,
                        time_budget=milp_time_budget,
                    )
                    n_milp = result.objective
                    status = MILP_STATUS_OPTIMAL
                    nodes = result.nodes
                except BudgetExceededError:
                    status = MILP_STATUS_BUDGET
                    nodes = node_budget
            t_milp = time.perf_counter() - t0

            rows.append(
                InstanceRow(
                    size=size,
                    instance=k,
                    seed_key=(template.seed, size, k),
                    defaults_baseline=n_base,
                    defaults_greedy=n_greedy,
                    defaults_milp=n_milp,
                    milp_status=status,
                    milp_nodes=nodes,
                    time_baseline=t_base,
                    time_greedy=t_greedy,
                    time_milp=t_milp,
                )
            )

    summaries: list[SizeSummary] = []
    for size in sizes:
        srows = [r for r in rows if r.size == size]
        for method, getter in (
            ("baseline", lambda r: float(r.defaults_baseline)),
            ("greedy", lambda r: float(r.defaults_greedy)),
            ("milp", lambda r: float(r.defaults_milp) if r.completed() else None),
        ):
            values = [v for r in srows if (v := getter(r)) is not None]
            mean, lo, hi = _mean_ci(values)
            summaries.append(SizeSummary(size, method, len(values), mean, lo, hi))
    return ExperimentReport(tuple(rows), tuple(summaries))


def report_csv(report: ExperimentReport) -> str:
    lines = ["size,method,mean_defaults,ci_lo,ci_hi"]
    for s in report.summaries:
        if s.mean_defaults is None:
            lines.append(f"{s.size},{s.method},,,")
        else:
            lines.append(
                f"{s.size},{s.method},{s.mean_defaults:.6f},{s.ci_lo:.6f},{s.ci_hi:.6f}"
            )
    return "\n".join(lines) + "\n"


def report_jsonl(report: ExperimentReport) -> str:
    out = []
    for r in report.rows:
        out.append(
            json.dumps(
                {
                    "size": r.size,
                    "instance": r.instance,
                    "seed_key": list(r.seed_key),
                    "defaults_baseline": r.defaults_baseline,
                    "defaults_greedy": r.defaults_greedy,
                    "defaults_milp": r.defaults_milp,
                    "milp_status": r.milp_status,
                    "milp_nodes": r.milp_nodes,
                    "time_baseline": round(r.time_baseline, 6),
                    "time_greedy": round(r.time_greedy, 6),
                    "time_milp": round(r.time_milp, 6),
                }
            )
        )
    return "\n".join(out) + "\n"


def write_report(report: ExperimentReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    atomic_write_text(os.path.join(out_dir, "report.csv"), report_csv(report))
    atomic_write_text(os.path.join(out_dir, "instances.jsonl"), report_jsonl(report))
