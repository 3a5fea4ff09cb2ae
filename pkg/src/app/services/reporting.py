"""
Seed aggregation, plots, brightness histograms and acceptance checks over run logs.
"""
import csv
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.app.exceptions import MetricError  # noqa: E402
from src.app.logging_config import get_logger  # noqa: E402
from src.app.services.cylinder import avg_brightness  # noqa: E402
from src.app.services.metrics import brightness_histogram  # noqa: E402
from src.models.variant import ModelVariant, Prediction  # noqa: E402
from src.schemas.metrics import AcceptanceResult, HistogramResult, MetricRecord  # noqa: E402

logger = get_logger(__name__)

METRICS = ("wd1", "mmd", "ks")
GROUP_KEYS = ("variant", "prediction", "sigma_c_sq", "n", "rho")
AGGREGATE_COLUMNS = GROUP_KEYS + ("step", "seeds") + tuple(
    f"{metric}_{stat}" for metric in METRICS for stat in ("median", "p10", "p90")
)

# Tail bins of the generated histogram below this share of the reference count are "depleted".
DEPLETION_RATIO = 0.8
LEARNED_FACTOR = 5.0
SIMILAR_RELATIVE = 0.30
RHO_KS_RELATIVE = 0.25
SCALING_RHOS = (0.9, 1.0, 1.1)

Group = Tuple[str, str, float, int, float]


def group_key(record: MetricRecord) -> Group:
    return (record.variant.value, record.prediction.value, record.sigma_c_sq, record.n, record.rho)


def group_label(group: Group) -> str:
    variant, prediction, sigma_c_sq, n, rho = group
    label = f"{variant}/{prediction} n={n}"
    if variant in (ModelVariant.OFFSET.value, ModelVariant.PROPOSED.value):
        label += f" sc2={sigma_c_sq:g}"
    if rho != 1.0:
        label += f" rho={rho:g}"
    return label


def aggregate_runs(records: Iterable[MetricRecord]) -> List[Dict[str, float]]:
    """
    Median and 10th / 90th percentiles over seeds, per configuration group and step.

    Non-finite metric values (fully diverged evaluations) are left out of the
    statistics for that metric.
    """
    buckets: Dict[Tuple[Group, int], List[MetricRecord]] = defaultdict(list)
    for record in records:
        buckets[(group_key(record), record.step)].append(record)

    rows = []
    for (group, step), members in sorted(buckets.items(), key=lambda item: (item[0][0], item[0][1])):
        row: Dict[str, float] = dict(zip(GROUP_KEYS, group))
        row["step"] = step
        row["seeds"] = len({m.seed for m in members})
        for metric in METRICS:
            values = np.array([getattr(m, metric) for m in members], dtype=np.float64)
            values = values[np.isfinite(values)]
            if values.size == 0:
                median = p10 = p90 = float("nan")
            else:
                p10, median, p90 = (float(v) for v in np.percentile(values, [10, 50, 90]))
            row[f"{metric}_median"] = median
            row[f"{metric}_p10"] = p10
            row[f"{metric}_p90"] = p90
        rows.append(row)
    return rows


def write_rows(path: Path, rows: Sequence[Mapping], columns: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({col: row[col] for col in columns})
    return path


def plot_metric_curves(rows: Sequence[Mapping], metric: str, path: Path) -> Path:
    """One median line per group with its p10 / p90 band, as SVG."""
    if metric not in METRICS:
        raise MetricError(f"unknown metric {metric!r}")
    series: Dict[Group, List[Mapping]] = defaultdict(list)
    for row in rows:
        series[tuple(row[k] for k in GROUP_KEYS)].append(row)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for group, members in sorted(series.items()):
        members = sorted(members, key=lambda r: r["step"])
        steps = [r["step"] for r in members]
        line, = ax.plot(steps, [r[f"{metric}_median"] for r in members], label=group_label(group))
        ax.fill_between(
            steps,
            [r[f"{metric}_p10"] for r in members],
            [r[f"{metric}_p90"] for r in members],
            color=line.get_color(), alpha=0.2, linewidth=0,
        )
    ax.set_xlabel("training step")
    ax.set_ylabel(metric)
    if series:
        ax.legend(fontsize="small")
    fig.tight_layout()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def brightness_histograms(sets: Mapping[str, np.ndarray], k: float, bins: int = 10) -> Dict[str, HistogramResult]:
    """Histogram of average brightness for each labelled sample set."""
    return {label: brightness_histogram(avg_brightness(data), k, bins) for label, data in sets.items()}


def histogram_rows(histograms: Mapping[str, HistogramResult]) -> List[Dict[str, float]]:
    """Long-format rows: one per (label, bin), plus below / above rows."""
    rows = []
    for label, hist in histograms.items():
        total = sum(hist.counts) + hist.below + hist.above
        for lo, hi, count in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
            rows.append({"label": label, "bin_lo": lo, "bin_hi": hi, "count": count,
                         "fraction": count / total if total else 0.0})
        for name, count, edge in (("below", hist.below, hist.edges[0]), ("above", hist.above, hist.edges[-1])):
            rows.append({"label": label, "bin_lo": name, "bin_hi": edge, "count": count,
                         "fraction": count / total if total else 0.0})
    return rows


HISTOGRAM_COLUMNS = ("label", "bin_lo", "bin_hi", "count", "fraction")


def plot_histograms(histograms: Mapping[str, HistogramResult], path: Path) -> Path:
    """Normalized brightness histograms, one step outline per label, as SVG."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, hist in histograms.items():
        total = max(sum(hist.counts), 1)
        ax.stairs(np.asarray(hist.counts) / total, hist.edges, label=label)
    ax.set_xlabel("average brightness")
    ax.set_ylabel("fraction")
    if histograms:
        ax.legend(fontsize="small")
    fig.tight_layout()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def tail_depleted(generated: HistogramResult, reference: HistogramResult,
                  ratio: float = DEPLETION_RATIO) -> bool:
    """
    True when the first or last bin of ``generated`` holds less than
    ``ratio`` times the reference share.
    """
    if generated.edges != reference.edges:
        raise MetricError("histograms use different bins")
    gen_total, ref_total = sum(generated.counts), sum(reference.counts)
    if gen_total == 0 or ref_total == 0:
        raise MetricError("cannot compare empty histograms")
    for i in (0, -1):
        ref_share = reference.counts[i] / ref_total
        if ref_share > 0 and generated.counts[i] / gen_total < ratio * ref_share:
            return True
    return False


def final_records(records: Iterable[MetricRecord]) -> List[MetricRecord]:
    """The last-step row of every run."""
    last: Dict[str, MetricRecord] = {}
    for record in records:
        current = last.get(record.run_id)
        if current is None or record.step > current.step:
            last[record.run_id] = record
    return list(last.values())


def _select(records: Iterable[MetricRecord], variant: ModelVariant, n: int,
            prediction: Prediction = Prediction.EPS, sigma_c_sq: Optional[float] = None,
            rho: float = 1.0) -> List[MetricRecord]:
    return [
        r for r in records
        if r.variant == variant and r.n == n and r.prediction == prediction and r.rho == rho
        and (sigma_c_sq is None or r.sigma_c_sq == sigma_c_sq)
    ]


def _median(records: Sequence[MetricRecord], metric: str) -> float:
    values = np.array([getattr(r, metric) for r in records], dtype=np.float64)
    values = values[np.isfinite(values)]
    return float(np.median(values)) if values.size else float("nan")


def _skipped(name: str, detail: str) -> AcceptanceResult:
    return AcceptanceResult(name=name, passed=False, skipped=True, detail=detail)


def check_desk_acceptance(records: Sequence[MetricRecord],
                          histograms: Optional[Mapping[str, HistogramResult]] = None) -> List[AcceptanceResult]:
    """
    Ordering properties expected from a desk-profile sweep.

    ``histograms`` may carry ``"base"`` (generated, n = 200, base model) and
    ``"test"`` brightness histograms for the tail-depletion check. Checks
    whose runs are absent are reported as skipped.
    """
    records = list(records)
    finals = final_records(records)
    initial = [r for r in records if r.step == 0]
    results: List[AcceptanceResult] = []

    # n = 2: both models learn, and end up close to each other
    base2 = _select(finals, ModelVariant.BASE, 2)
    prop2 = _select(finals, ModelVariant.PROPOSED, 2, sigma_c_sq=1.0)
    if base2 and prop2:
        learned = []
        for label, finals_g, variant, sc2 in (("base", base2, ModelVariant.BASE, None),
                                              ("proposed", prop2, ModelVariant.PROPOSED, 1.0)):
            start = _median(_select(initial, variant, 2, sigma_c_sq=sc2), "wd1")
            end = _median(finals_g, "wd1")
            learned.append((label, start, end, bool(end * LEARNED_FACTOR <= start)))
        results.append(AcceptanceResult(
            name="n2_training_reduces_wd1",
            passed=all(ok for *_, ok in learned),
            detail="; ".join(f"{label}: {start:.4g} -> {end:.4g}" for label, start, end, _ in learned),
        ))
        a, b = _median(base2, "wd1"), _median(prop2, "wd1")
        gap = abs(a - b) / max(a, b) if max(a, b) > 0 else 0.0
        results.append(AcceptanceResult(
            name="n2_base_proposed_similar",
            passed=bool(gap < SIMILAR_RELATIVE),
            detail=f"base {a:.4g}, proposed {b:.4g}, relative gap {gap:.3f}",
        ))
    else:
        results.append(_skipped("n2_training_reduces_wd1", "n=2 base / proposed runs missing"))
        results.append(_skipped("n2_base_proposed_similar", "n=2 base / proposed runs missing"))

    base200 = _select(finals, ModelVariant.BASE, 200)
    prop200 = _select(finals, ModelVariant.PROPOSED, 200, sigma_c_sq=1.0)
    if base200 and prop200:
        a, b = _median(base200, "wd1"), _median(prop200, "wd1")
        results.append(AcceptanceResult(
            name="n200_proposed_wd1_below_base",
            passed=bool(b < a), detail=f"base {a:.4g}, proposed {b:.4g}",
        ))
        a, b = _median(base200, "ks"), _median(prop200, "ks")
        results.append(AcceptanceResult(
            name="n200_proposed_ks_below_base",
            passed=bool(b < a), detail=f"base {a:.4g}, proposed {b:.4g}",
        ))
    else:
        results.append(_skipped("n200_proposed_wd1_below_base", "n=200 base / proposed runs missing"))
        results.append(_skipped("n200_proposed_ks_below_base", "n=200 base / proposed runs missing"))

    if histograms and "base" in histograms and "test" in histograms:
        depleted = tail_depleted(histograms["base"], histograms["test"])
        results.append(AcceptanceResult(
            name="n200_base_tail_depleted",
            passed=depleted,
            detail=f"first/last bin counts base {histograms['base'].counts[0]}/{histograms['base'].counts[-1]}, "
                   f"test {histograms['test'].counts[0]}/{histograms['test'].counts[-1]}",
        ))
    else:
        results.append(_skipped("n200_base_tail_depleted", "base / test histograms not supplied"))

    by_rho = {rho: _select(finals, ModelVariant.BASE, 200, rho=rho) for rho in SCALING_RHOS}
    if all(by_rho.values()) and prop200:
        ks = {rho: _median(group, "ks") for rho, group in by_rho.items()}
        spread = (max(ks.values()) - min(ks.values())) / min(ks.values()) if min(ks.values()) > 0 else float("inf")
        results.append(AcceptanceResult(
            name="scaling_rho_ks_stable",
            passed=bool(spread < RHO_KS_RELATIVE),
            detail=", ".join(f"rho={rho:g}: {value:.4g}" for rho, value in ks.items()) + f"; spread {spread:.3f}",
        ))
        prop_ks = _median(prop200, "ks")
        results.append(AcceptanceResult(
            name="proposed_beats_all_scalings",
            passed=bool(all(prop_ks < value for value in ks.values())),
            detail=f"proposed {prop_ks:.4g}",
        ))
    else:
        results.append(_skipped("scaling_rho_ks_stable", "base n=200 runs for every rho missing"))
        results.append(_skipped("proposed_beats_all_scalings", "base n=200 runs for every rho missing"))

    vprop = _select(finals, ModelVariant.PROPOSED, 200, prediction=Prediction.V)
    if vprop:
        diverged = sum(r.divergence_count for r in vprop)
        generated = sum(r.n_generated for r in vprop)
        results.append(AcceptanceResult(
            name="v_proposed_divergence_recorded",
            passed=True,
            detail=f"{diverged} of {generated} chains diverged ({diverged / max(generated, 1):.3%})",
        ))
    else:
        results.append(_skipped("v_proposed_divergence_recorded", "v-prediction proposed n=200 runs missing"))

    for result in results:
        logger.info(
            "Acceptance check",
            extra={"check": result.name, "passed": result.passed, "skipped": result.skipped, "detail": result.detail},
        )
    return results
