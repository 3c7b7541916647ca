import json
import re

import numpy as np
import pytest

from gwmd import InvalidLaw, TablePmf, normal_quantile
from gwmd.errors import ValidationError
from gwmd.montecarlo import (
    McConfig,
    McReport,
    coverage_indicators,
    dkw_bound,
    ks_distance_to_normal,
    mc_coverage,
    mc_ks_distance,
    mc_tail_ratio,
    mc_trend,
    read_report,
    replicate_intervals,
    report_to_json,
    write_report,
)


def strip_wall_time(text):
    return re.sub(r'"wall_time": [^,\n]+', '"wall_time": 0', text)


@pytest.mark.parametrize("kwargs", [
    {"reps": 99},
    {"x_grid": (0.0, 1.0, 1.0)},
    {"x_grid": (1.0, 0.5)},
    {"stat": "Q"},
    {"kappa": 1.5},
])
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        McConfig("geom2", **kwargs)


def test_zero_variance_law_rejected():
    with pytest.raises(InvalidLaw):
        McConfig(TablePmf.from_mapping({2: 1.0}))


def test_ks_self_test():
    for reps in (100, 1000, 12345):
        values = [normal_quantile((i + 0.5) / reps) for i in range(reps)]
        assert ks_distance_to_normal(values) <= 1.0 / reps


def test_ks_exact_on_small_sample():
    # brute-force sup over a fine grid never exceeds the exact value and gets close to it
    values = np.array([-1.2, -0.3, 0.0, 0.4, 2.1])
    exact = ks_distance_to_normal(values)
    from gwmd import normal_cdf
    grid = np.sort(np.concatenate([values - 1e-9, values, np.linspace(-5, 5, 2001)]))
    brute = max(abs(np.mean(values <= x) - normal_cdf(x)) for x in grid)
    assert brute <= exact + 1e-12
    assert brute == pytest.approx(exact, abs=1e-8)


def test_tail_report_invariants():
    cfg = McConfig("geom2", stat="M", n=8, reps=2000, master_seed=3, x_grid=(0.0, 0.5, 1.0, 1.5))
    rep = mc_tail_ratio(cfg, workers=1)
    assert rep.used_count + rep.degenerate_count == cfg.reps
    ups = [r["p_hat_upper"] for r in rep.rows]
    assert all(b <= a for a, b in zip(ups, ups[1:]))
    for r in rep.rows:
        assert 0 <= r["p_hat_upper"] <= 1 and 0 <= r["p_hat_lower"] <= 1
        assert r["mc_se"] == pytest.approx(np.sqrt(r["p_hat_upper"] * (1 - r["p_hat_upper"]) / rep.used_count))
    first = rep.rows[0]
    assert first["p_hat_upper"] + first["p_hat_lower"] == pytest.approx(1.0, abs=5e-3)


def test_degenerate_accounting():
    cfg = McConfig("binary1.5", stat="T", n=1, reps=400, master_seed=1, x_grid=(0.0,))
    rep = mc_tail_ratio(cfg, workers=1)
    assert rep.degenerate_count > 0
    assert rep.used_count + rep.degenerate_count == cfg.reps


def test_ks_seed_consistency():
    a = mc_ks_distance(McConfig("geom2", stat="H", n=25, reps=20000, master_seed=1), workers=1)
    b = mc_ks_distance(McConfig("geom2", stat="H", n=25, reps=20000, master_seed=2), workers=1)
    assert abs(a.ks_distance - b.ks_distance) <= 2 * a.dkw_bound
    assert a.dkw_bound == pytest.approx(dkw_bound(20000))
    assert dkw_bound(100) == pytest.approx(np.sqrt(np.log(200) / 200))


def test_coverage_near_zero_for_kappa_near_one():
    # Z_{n+1}/Z_n hits m exactly with probability ~ 1/sqrt(2 pi v^2 Z_n); keep Z_n large
    cfg = McConfig("geom2", n=12, reps=500, master_seed=5, kappa=1 - 1e-9, method="SpaceType")
    assert mc_coverage(cfg, workers=1).coverage < 0.01


def test_largedev_dominates_spacetype_per_replicate():
    base = McConfig("geom2", n=8, reps=1000, master_seed=8, kappa=0.05, method="SpaceType")
    ld = McConfig("geom2", n=8, reps=1000, master_seed=8, kappa=0.05, method="SpaceTypeLargeDev")
    cov_s, _ = coverage_indicators(base, workers=1)
    cov_l, _ = coverage_indicators(ld, workers=1)
    assert not np.any(cov_s & ~cov_l)
    iv_s, iv_l = replicate_intervals(base, workers=1), replicate_intervals(ld, workers=1)
    ok = iv_s[:, 2] == 0
    assert np.all(iv_l[ok, 0] <= iv_s[ok, 0]) and np.all(iv_s[ok, 1] <= iv_l[ok, 1])


def test_infectious_coverage_targets_r():
    a = mc_coverage(McConfig("geom2", n=10, reps=500, master_seed=2, kappa=0.1, method="TimeTypeQuadratic"), workers=1)
    b = mc_coverage(McConfig("geom2", n=10, reps=500, master_seed=2, kappa=0.1, method="Infectious"), workers=1)
    assert a.coverage == b.coverage


def test_parallel_matches_serial():
    cfg = McConfig("geom2", stat="M", n=10, reps=600, master_seed=42)
    serial = mc_tail_ratio(cfg, workers=1)
    parallel = mc_tail_ratio(cfg, workers=8)
    assert strip_wall_time(report_to_json(serial)) == strip_wall_time(report_to_json(parallel))


def test_json_round_trip(tmp_path):
    rep = mc_tail_ratio(McConfig("geom2", stat="M", n=6, reps=300, master_seed=1), workers=1)
    path = tmp_path / "r.json"
    write_report(rep, path)
    assert read_report(path) == rep
    assert json.loads(path.read_text())["config"]["master_seed"] == 1


def test_csv_layout(tmp_path):
    cfg = McConfig("geom2", stat="M", n=6, reps=300, master_seed=1, x_grid=(0.0, 1.0, 2.0))
    path = tmp_path / "r.csv"
    write_report(mc_tail_ratio(cfg, workers=1), path, fmt="csv")
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "x,p_upper,ratio_upper,p_lower,ratio_lower,se"
    assert len(lines) == len(cfg.x_grid) + 1
    assert '"master_seed": 1' in path.read_text()


def test_repeat_runs_identical_files(tmp_path):
    cfg = McConfig("poisson1.2", stat="Ttilde", n=10, reps=300, master_seed=9)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_report(mc_tail_ratio(cfg, workers=1), p1)
    write_report(mc_tail_ratio(cfg, workers=1), p2)
    assert strip_wall_time(p1.read_text()) == strip_wall_time(p2.read_text())


def test_trend_table():
    cfg = McConfig("geom2", stat="H", n=10, reps=300, master_seed=1, x_grid=(1.0,))
    table = mc_trend(cfg, [5, 10])
    assert [row["n"] for row in table] == [5, 10]
    assert all(len(row["rows"]) == 1 for row in table)


def test_report_dataclass_round_trip():
    rep = McReport(kind="ks", config={}, used_count=100, degenerate_count=0, ks_distance=0.1, dkw_bound=0.16)
    assert McReport.from_dict(json.loads(report_to_json(rep))) == rep
