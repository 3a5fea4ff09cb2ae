"""
Seed aggregation, plots, histograms and acceptance checks.
"""
import numpy as np
import pytest

from src.app.exceptions import MetricError
from src.app.services.reporting import (
    AGGREGATE_COLUMNS,
    HISTOGRAM_COLUMNS,
    aggregate_runs,
    brightness_histograms,
    check_desk_acceptance,
    final_records,
    histogram_rows,
    plot_histograms,
    plot_metric_curves,
    tail_depleted,
    write_rows,
)
from src.models.variant import ModelVariant, Prediction
from src.schemas.metrics import HistogramResult, MetricRecord


def record(seed, step, wd1, variant=ModelVariant.BASE, n=2, sigma_c_sq=0.0, ks=0.1, rho=1.0,
           prediction=Prediction.EPS):
    return MetricRecord(
        run_id=f"{variant.value}-{prediction.value}-{n}-{sigma_c_sq}-{rho}-{seed}", config_hash="h", step=step,
        variant=variant, prediction=prediction, sigma_c_sq=sigma_c_sq, n=n, seed=seed, rho=rho,
        wd1=wd1, mmd=0.01, ks=ks, n_generated=100, wd_subsample=100,
    )


class TestAggregation:

    def test_percentiles_over_seeds(self):
        rows = aggregate_runs([record(s, 10, float(s)) for s in range(11)])
        assert len(rows) == 1
        row = rows[0]
        assert row["seeds"] == 11
        assert row["wd1_median"] == pytest.approx(5.0)
        assert row["wd1_p10"] == pytest.approx(1.0)
        assert row["wd1_p90"] == pytest.approx(9.0)

    def test_groups_and_steps(self):
        records = [record(0, step, 1.0) for step in (0, 10)]
        records += [record(0, step, 1.0, variant=ModelVariant.OFFSET, sigma_c_sq=0.1) for step in (0, 10)]
        rows = aggregate_runs(records)
        assert len(rows) == 4
        assert {(r["variant"], r["step"]) for r in rows} == {("base", 0), ("base", 10), ("offset", 0), ("offset", 10)}

    def test_non_finite_values_ignored(self):
        rows = aggregate_runs([record(0, 5, float("nan")), record(1, 5, 2.0)])
        assert rows[0]["wd1_median"] == 2.0

    def test_final_records(self):
        finals = final_records([record(0, 0, 3.0), record(0, 20, 1.0), record(0, 10, 2.0)])
        assert len(finals) == 1
        assert finals[0].step == 20


class TestOutputs:

    def test_csv_and_svg(self, tmp_path):
        rows = aggregate_runs([record(s, step, 1.0 / (step + 1)) for s in range(3) for step in (0, 10, 20)])
        csv_path = write_rows(tmp_path / "agg.csv", rows, AGGREGATE_COLUMNS)
        assert csv_path.read_text().splitlines()[0].split(",") == list(AGGREGATE_COLUMNS)
        svg = plot_metric_curves(rows, "wd1", tmp_path / "wd1.svg")
        assert "<svg" in svg.read_text()

    def test_unknown_metric(self, tmp_path):
        with pytest.raises(MetricError):
            plot_metric_curves([], "fid", tmp_path / "x.svg")

    def test_histogram_rows_and_plot(self, tmp_path, rng):
        histograms = brightness_histograms(
            {"a": rng.uniform(-2, 2, (500, 3)), "b": rng.uniform(-3, 3, (500, 3))}, k=2.0, bins=5,
        )
        rows = histogram_rows(histograms)
        assert len(rows) == 2 * (5 + 2)
        a_rows = [r for r in rows if r["label"] == "a"]
        assert sum(r["fraction"] for r in a_rows) == pytest.approx(1.0)
        write_rows(tmp_path / "hist.csv", rows, HISTOGRAM_COLUMNS)
        assert "<svg" in plot_histograms(histograms, tmp_path / "hist.svg").read_text()


def hist(counts):
    edges = list(np.linspace(-2.0, 2.0, len(counts) + 1))
    return HistogramResult(edges=edges, counts=counts)


class TestTailDepletion:

    def test_depleted(self):
        assert tail_depleted(hist([5, 20, 20, 20, 20]), hist([20, 20, 20, 20, 20]))

    def test_not_depleted(self):
        assert not tail_depleted(hist([19, 20, 20, 20, 21]), hist([20, 20, 20, 20, 20]))

    def test_bins_must_match(self):
        with pytest.raises(MetricError):
            tail_depleted(hist([1, 1]), hist([1, 1, 1]))


class TestAcceptance:

    def test_empty_records_skip_everything(self):
        results = check_desk_acceptance([])
        assert results
        assert all(r.skipped and not r.passed for r in results)

    def test_n2_checks(self):
        records = []
        for seed in range(3):
            records += [record(seed, 0, 2.0), record(seed, 100, 0.2)]
            records += [record(seed, 0, 2.0, variant=ModelVariant.PROPOSED, sigma_c_sq=1.0),
                        record(seed, 100, 0.22, variant=ModelVariant.PROPOSED, sigma_c_sq=1.0)]
        results = {r.name: r for r in check_desk_acceptance(records)}
        assert results["n2_training_reduces_wd1"].passed
        assert results["n2_base_proposed_similar"].passed
        assert results["n200_proposed_wd1_below_base"].skipped

    def test_n200_ordering(self):
        records = [record(s, 100, 1.0, n=200, ks=0.2) for s in range(3)]
        records += [record(s, 100, 0.8, n=200, ks=0.05, variant=ModelVariant.PROPOSED, sigma_c_sq=1.0)
                    for s in range(3)]
        results = {r.name: r for r in check_desk_acceptance(records)}
        assert results["n200_proposed_wd1_below_base"].passed
        assert results["n200_proposed_ks_below_base"].passed

    def test_tail_check_uses_histograms(self):
        histograms = {"base": hist([5, 20, 20, 20, 5]), "test": hist([20, 20, 20, 20, 20])}
        results = {r.name: r for r in check_desk_acceptance([], histograms)}
        assert results["n200_base_tail_depleted"].passed
        assert not results["n200_base_tail_depleted"].skipped
