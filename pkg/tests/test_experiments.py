import json

import numpy as np
import pytest

from opcgame.experiments import (
    CSV_COLUMNS,
    ExperimentSpec,
    StepTotals,
    compare_schemes,
    read_run_csv,
    rows_to_csv,
    run_experiment,
)


def totals(power, rate):
    power = np.atleast_2d(np.asarray(power, float))
    return StepTotals(np.arange(power.shape[0]), power, np.atleast_2d(np.asarray(rate, float)))


def test_compare_identical_is_zero():
    a = totals([[1.0, 2.0], [3.0, 4.0]], [[0.5, 0.6], [0.7, 0.8]])
    cmp_ = compare_schemes(a, a)
    np.testing.assert_array_equal(cmp_.power_gap_pct, 0.0)
    np.testing.assert_array_equal(cmp_.rate_gap_pct, 0.0)


def test_compare_doubled_power_is_minus_fifty():
    a = totals([[1.0, 2.0]], [[0.5, 0.6]])
    b = totals([[2.0, 4.0]], [[0.5, 0.6]])
    cmp_ = compare_schemes(a, b)
    assert cmp_.power_gap_pct[0] == pytest.approx(-50.0, abs=1e-12)
    assert cmp_.rate_gap_pct[0] == 0.0


def test_compare_mismatch_rejected():
    with pytest.raises(ValueError):
        compare_schemes(totals([[1.0, 2.0]], [[1.0, 1.0]]), totals([[1.0, 2.0, 3.0]], [[1.0] * 3]))


def test_empty_seed_list_lists_required_fields():
    with pytest.raises(ValueError, match="preset, seeds"):
        ExperimentSpec("fig1_opc_convergence", seeds=[])


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("fig99")
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({"preset": "fig1_opc_convergence", "bogus": 1})
    with pytest.raises(ValueError):
        ExperimentSpec("custom")
    spec = ExperimentSpec("fig3_opc_vs_powermin")
    assert spec.steps == 4 and spec.subchannels == 20 and spec.seeds == list(range(20))


def test_csv_round_trip(tmp_path):
    rows = [(0, 1, 0, 0.1, 1 / 3), (0, 1, 1, np.pi, 2.0 ** -40)]
    path = tmp_path / "run.csv"
    path.write_text(rows_to_csv(rows))
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert read_run_csv(path) == rows


def test_read_csv_rejects_wrong_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_run_csv(path)


def test_step_totals_use_last_iteration():
    rows = [(0, 1, 0, 5.0, 1.0), (0, 7, 0, 2.0, 3.0), (1, 3, 0, 4.0, 4.0)]
    t = StepTotals.from_rows(rows)
    np.testing.assert_array_equal(t.power[:, 0], [2.0, 4.0])
    np.testing.assert_array_equal(t.rate[:, 0], [3.0, 4.0])


@pytest.fixture(scope="module")
def fig3_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig3")
    spec = ExperimentSpec("fig3_opc_vs_powermin", seeds=[0, 1], steps=2, out_dir=str(out))
    return out, run_experiment(spec)


def test_artifacts_and_manifest(fig3_run):
    out, result = fig3_run
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema_version"] == 1
    assert manifest["seeds"] == [0, 1]
    assert manifest["config"]["step_factor"] == 0.8
    for seed in (0, 1):
        for name in ("scenario.json", "opportunistic.csv", "power_min.csv", "comparison.csv"):
            assert (out / f"seed_{seed}" / name).is_file()
    assert set(manifest["ensemble"]) >= {"final_step_power_gap_pct", "final_step_rate_gap_pct"}


def test_percentages_recompute_from_csv(fig3_run):
    out, result = fig3_run
    for o in result.outcomes:
        sub = out / f"seed_{o.seed}"
        a = StepTotals.from_rows(read_run_csv(sub / "opportunistic.csv"))
        b = StepTotals.from_rows(read_run_csv(sub / "power_min.csv"))
        cmp_ = compare_schemes(a, b)
        np.testing.assert_array_equal(cmp_.power_gap_pct, o.comparison.power_gap_pct)
        np.testing.assert_array_equal(cmp_.rate_gap_pct, o.comparison.rate_gap_pct)
        assert (sub / "comparison.csv").read_text() == cmp_.to_csv()


def test_fig3_direction(fig3_run):
    _, result = fig3_run
    for o in result.outcomes:
        # opportunistic play spends less power than rate-constrained play
        assert o.comparison.power_gap_pct[-1] < 0
        assert abs(o.comparison.power_gap_pct[-1]) > abs(o.comparison.rate_gap_pct[-1])


def test_fig1_ordering_across_users():
    res = run_experiment(ExperimentSpec("fig1_opc_convergence", seeds=[3]))
    summary = res.manifest["per_seed"]["3"]
    assert summary["user_1_below_user_M_power"]
    assert all(summary["schemes"]["opportunistic"]["converged"])


def test_pricing_sweep_lowers_power():
    spec = ExperimentSpec("fig4_pricing_sweep", seeds=[0], price_grid=[1.0, 100.0, 1e4])
    res = run_experiment(spec)
    kept = res.manifest["per_seed"]["0"]["power_retained_fraction"]
    assert all(f <= 1.0 + 1e-12 for f in kept)
    assert min(kept) < 1.0


def test_custom_preset():
    spec = ExperimentSpec("custom", seeds=[0], game="waterfill", subchannels=6, steps=1)
    res = run_experiment(spec)
    power = res.manifest["per_seed"]["0"]["schemes"]["waterfill"]["final_power_w"]
    np.testing.assert_allclose(power, 3.0, rtol=1e-10)
    with pytest.raises(ValueError):
        run_experiment(ExperimentSpec("custom", seeds=[0], game="power_min"))


def test_rerun_is_bit_identical(tmp_path):
    spec_a = ExperimentSpec("fig2_opc_degradation", seeds=[5], steps=2, out_dir=str(tmp_path / "a"))
    spec_b = ExperimentSpec("fig2_opc_degradation", seeds=[5], steps=2, out_dir=str(tmp_path / "b"))
    run_experiment(spec_a)
    run_experiment(spec_b)
    for name in ("opportunistic.csv", "scenario.json"):
        assert (tmp_path / "a" / "seed_5" / name).read_bytes() == \
            (tmp_path / "b" / "seed_5" / name).read_bytes()


def test_parallel_matches_serial(tmp_path):
    serial = run_experiment(ExperimentSpec("fig1_opc_convergence", seeds=[0, 1], subchannels=6))
    parallel = run_experiment(ExperimentSpec("fig1_opc_convergence", seeds=[0, 1], subchannels=6,
                                             workers=2))
    for a, b in zip(serial.outcomes, parallel.outcomes):
        assert a.schemes["opportunistic"].rows == b.schemes["opportunistic"].rows
