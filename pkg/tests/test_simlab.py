"""Generators and the experiment harness."""

import json
from fractions import Fraction as F

import pytest

from netclear import simlab
from netclear.errors import DisconnectedExhaustionError, InvalidInputError
from netclear.market import validate


def _uniform_cfg(**kw):
    base = dict(
        n=8,
        p=0.2,
        liability=("uniform", 100, 1000),
        endowment=("uniform-fraction", 0.8),
        alpha_range=(0.4, 0.8),
        beta_range=(0.6, 0.9),
        seed=7,
    )
    base.update(kw)
    return simlab.GenConfig(**base)


class TestErdosRenyi:
    def test_deterministic_and_valid(self):
        cfg = _uniform_cfg(n=10)
        m1 = simlab.gen_erdos_renyi(cfg)
        m2 = simlab.gen_erdos_renyi(cfg)
        assert m1 == m2
        assert validate(m1) == []

    def test_empty_graph(self):
        m = simlab.gen_erdos_renyi(_uniform_cfg(n=5, p=0.0))
        assert len(m.arcs()) == 0

    def test_complete_digraph(self):
        m = simlab.gen_erdos_renyi(_uniform_cfg(n=3, p=1.0))
        assert len(m.arcs()) == 6

    def test_liabilities_within_range(self):
        m = simlab.gen_erdos_renyi(_uniform_cfg(n=12, p=0.5, seed=3))
        for i, j in m.arcs():
            assert 100 <= m.liabilities[i][j] <= 1000

    def test_endowments_within_fraction(self):
        m = simlab.gen_erdos_renyi(_uniform_cfg(n=12, p=0.5, seed=4))
        for i in range(m.n):
            assert 0 <= m.endowments[i] <= F(8, 10) * m.total_liability(i) + F(1, 100)

    def test_alpha_beta_shared_per_instance(self):
        m = simlab.gen_erdos_renyi(_uniform_cfg(n=6, seed=9))
        assert len(set(m.alpha)) == 1 and len(set(m.beta)) == 1
        assert F(4, 10) <= m.alpha[0] <= F(8, 10)
        assert F(6, 10) <= m.beta[0] <= F(9, 10)

    def test_lognormal_liability(self):
        cfg = _uniform_cfg(n=10, p=0.5, liability=("lognormal", 200), seed=11)
        m = simlab.gen_erdos_renyi(cfg)
        assert validate(m) == []
        assert all(m.liabilities[i][j] > 0 for i, j in m.arcs())

    def test_integer_grid(self):
        cfg = _uniform_cfg(n=8, p=0.4, grid_places=0, seed=12)
        m = simlab.gen_erdos_renyi(cfg)
        assert all(m.liabilities[i][j].denominator == 1 for i, j in m.arcs())

    def test_bad_config_rejected(self):
        with pytest.raises(InvalidInputError):
            simlab.gen_erdos_renyi(_uniform_cfg(p=1.5))


class TestSnowball:
    EDGES = [("a", "b", F(1)), ("b", "c", F(2)), ("c", "a", F(3))]

    def test_whole_ring(self):
        m = simlab.snowball_sample(self.EDGES, 3, 0)
        assert m.n == 3 and len(m.arcs()) == 3

    def test_single_bank(self):
        m = simlab.snowball_sample(self.EDGES, 1, 0)
        assert m.n == 1 and len(m.arcs()) == 0

    def test_exhaustion(self):
        with pytest.raises(DisconnectedExhaustionError):
            simlab.snowball_sample(self.EDGES, 4, 0)

    def test_star_always_reaches_two(self):
        star = [("hub", f"l{k}", F(1)) for k in range(3)]
        for seed in range(8):
            m = simlab.snowball_sample(star, 2, seed)
            assert m.n == 2

    def test_deterministic(self):
        a = simlab.snowball_sample(self.EDGES, 2, 5)
        b = simlab.snowball_sample(self.EDGES, 2, 5)
        assert a == b


class TestExperiment:
    TEMPLATE = simlab.GenConfig(
        n=0,
        p=0.35,
        liability=("uniform", 1, 8),
        endowment=("uniform-fraction", 0.6),
        alpha_range=(0.5, 0.9),
        beta_range=(0.6, 1.0),
        seed=21,
        grid_places=0,
    )

    def test_rows_and_summaries(self):
        report = simlab.run_experiment([4, 5], 3, self.TEMPLATE, milp_time_budget=60)
        assert len(report.rows) == 6
        assert report.dominance_violations() == []
        methods = {(s.size, s.method) for s in report.summaries}
        assert (4, "baseline") in methods and (5, "milp") in methods

    def test_deterministic_content(self):
        r1 = simlab.run_experiment([4], 3, self.TEMPLATE, milp_time_budget=60)
        r2 = simlab.run_experiment([4], 3, self.TEMPLATE, milp_time_budget=60)
        key = lambda r: (r.size, r.instance, r.defaults_baseline, r.defaults_greedy, r.defaults_milp, r.milp_status)
        assert [key(r) for r in r1.rows] == [key(r) for r in r2.rows]

    def test_size_cap_skips_milp(self):
        report = simlab.run_experiment(
            [6], 2, self.TEMPLATE, milp_size_cap=1
        )
        assert all(r.milp_status == simlab.MILP_STATUS_SCALE for r in report.rows)
        assert all(r.defaults_milp is None for r in report.rows)

    def test_csv_and_jsonl_shapes(self, tmp_path):
        report = simlab.run_experiment([4], 2, self.TEMPLATE, milp_time_budget=60)
        simlab.write_report(report, str(tmp_path))
        csv_text = (tmp_path / "report.csv").read_text()
        assert csv_text.splitlines()[0] == "size,method,mean_defaults,ci_lo,ci_hi"
        assert len(csv_text.splitlines()) == 1 + 3  # three methods, one size
        lines = (tmp_path / "instances.jsonl").read_text().splitlines()
        assert len(lines) == 2
        row = json.loads(lines[0])
        assert {"size", "defaults_baseline", "defaults_greedy", "milp_status"} <= set(row)

    def test_ci_shrinks_with_more_instances(self):
        small = simlab.run_experiment([5], 4, self.TEMPLATE, milp_size_cap=1)
        large = simlab.run_experiment([5], 12, self.TEMPLATE, milp_size_cap=1)

        def half_width(rep):
            s = next(x for x in rep.summaries if x.method == "baseline")
            return s.ci_hi - s.ci_lo

        assert half_width(large) < half_width(small)

    def test_empty_sizes(self):
        report = simlab.run_experiment([], 3, self.TEMPLATE)
        assert report.rows == () and report.summaries == ()
