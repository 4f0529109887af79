"""Per-slice metric evaluation, aggregation, and export (CSV, JSON, heatmap)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from ..volumes import Modality, ScalarVolume
from .quality import dice, hist_cc, mae, psnr, ssim

# documented evaluation windows per modality
CT_WINDOW = (-1024.0, 1600.0)
CT_DYNAMIC_RANGE = CT_WINDOW[1] - CT_WINDOW[0]  # 2624
MR_DYNAMIC_RANGE = 255.0
NORMALIZED_DYNAMIC_RANGE = 2.0

DEFAULT_METRICS = ("ssim", "mae", "psnr", "hist_cc")


@dataclass
class MetricReport:
    per_slice: list[tuple[int, str, float]]
    aggregate: dict[str, tuple[float, float]]
    metadata: dict = field(default_factory=dict)

    def recompute_aggregate(self) -> dict[str, tuple[float, float]]:
        """Rebuild mean/std from the per-slice rows; must match bit-for-bit."""
        agg, _ = aggregate_per_slice(self.per_slice)
        return agg


def aggregate_per_slice(per_slice) -> tuple[dict, dict]:
    """Mean/std (ddof=0) per metric over finite values, in row order.

    Returns (aggregates, infinite_counts); +inf sentinels (identical-slice
    PSNR) are excluded from the moments and counted separately.
    """
    by_metric: dict[str, list[float]] = {}
    inf_counts: dict[str, int] = {}
    for _, name, value in per_slice:
        if math.isinf(value):
            inf_counts[name] = inf_counts.get(name, 0) + 1
            continue
        by_metric.setdefault(name, []).append(value)
    agg = {}
    for name, vals in by_metric.items():
        arr = np.asarray(vals, dtype=np.float64)
        agg[name] = (float(np.mean(arr)), float(np.std(arr)))
    return agg, inf_counts


def dynamic_range_for(v: ScalarVolume) -> float:
    if v.modality == Modality.CT_HU:
        return CT_DYNAMIC_RANGE
    if v.modality == Modality.NORMALIZED:
        return NORMALIZED_DYNAMIC_RANGE
    return MR_DYNAMIC_RANGE


def evaluate_volume_pair(
    pred: ScalarVolume,
    ref: ScalarVolume,
    metrics: tuple[str, ...] = DEFAULT_METRICS,
    dynamic_range: float | None = None,
    hist_bins: int = 64,
    dataset_tag: str = "",
) -> MetricReport:
    """Slice-wise metric suite over a prediction/reference volume pair."""
    if pred.dims != ref.dims:
        raise ShapeError(f"pred dims {pred.dims} != ref dims {ref.dims}")
    if dynamic_range is None:
        dynamic_range = dynamic_range_for(ref)
    if ref.modality == Modality.CT_HU:
        hist_range = CT_WINDOW
    else:
        hist_range = ref.value_range

    per_slice: list[tuple[int, str, float]] = []
    for z in range(pred.n_slices):
        pa, ra = pred.slice_at(z), ref.slice_at(z)
        for name in metrics:
            if name == "ssim":
                value = ssim(pa, ra, dynamic_range)
            elif name == "mae":
                value = mae(pa, ra)
            elif name == "psnr":
                value = psnr(pa, ra, dynamic_range)
            elif name == "hist_cc":
                value = hist_cc(pa, ra, bins=hist_bins, value_range=hist_range)
            else:
                raise ValueError(f"unknown metric {name!r}")
            per_slice.append((z, name, float(value)))

    agg, inf_counts = aggregate_per_slice(per_slice)
    metadata = {
        "dataset_tag": dataset_tag,
        "dynamic_range": dynamic_range,
        "hist_bins": hist_bins,
        "hist_range": list(hist_range),
        "n_slices": pred.n_slices,
    }
    if inf_counts:
        metadata["infinite_counts"] = inf_counts
    return MetricReport(per_slice, agg, metadata)


def report_to_csv(report: MetricReport, path) -> None:
    with open(path, "w") as f:
        f.write("scope,slice,metric,value\n")
        for z, name, value in report.per_slice:
            f.write(f"slice,{z},{name},{value!r}\n")
        for name in sorted(report.aggregate):
            mean, std = report.aggregate[name]
            f.write(f"aggregate_mean,,{name},{mean!r}\n")
            f.write(f"aggregate_std,,{name},{std!r}\n")


def _json_value(v: float):
    # JSON has no infinities; the +inf PSNR sentinel becomes a distinct string
    if math.isfinite(v):
        return v
    return "inf" if v > 0 else "-inf"


def report_to_json_dict(report: MetricReport) -> dict:
    return {
        "per_slice": [
            {"slice": z, "metric": m, "value": _json_value(v)}
            for z, m, v in report.per_slice
        ],
        "aggregate": {
            m: {"mean": mu, "std": sd} for m, (mu, sd) in report.aggregate.items()
        },
        "metadata": report.metadata,
    }


def report_summary_json(report: MetricReport, path) -> None:
    with open(path, "w") as f:
        json.dump(report_to_json_dict(report), f, indent=2, sort_keys=True)
        f.write("\n")


# --------------------------------------------------------------------------
# organ x subject Dice grid


def dice_grid(
    pred_labels: dict[str, np.ndarray],
    ref_labels: dict[str, np.ndarray],
    class_ids: list[int],
) -> tuple[np.ndarray, list[str]]:
    """Per-subject, per-class Dice matrix (subjects sorted by id)."""
    subjects = sorted(pred_labels)
    if sorted(ref_labels) != subjects:
        raise ShapeError("prediction and reference subject sets differ")
    grid = np.zeros((len(subjects), len(class_ids)))
    for i, sid in enumerate(subjects):
        p, r = pred_labels[sid], ref_labels[sid]
        if p.shape != r.shape:
            raise ShapeError(f"subject {sid!r}: shape {p.shape} vs {r.shape}")
        for j, cid in enumerate(class_ids):
            grid[i, j] = dice(p == cid, r == cid)
    return grid, subjects


def dice_grid_to_csv(grid: np.ndarray, subjects: list[str], class_ids: list[int], path) -> None:
    with open(path, "w") as f:
        f.write("subject," + ",".join(f"class_{c}" for c in class_ids) + "\n")
        for sid, row in zip(subjects, grid):
            f.write(sid + "," + ",".join(repr(float(v)) for v in row) + "\n")


def dice_grid_to_png(grid: np.ndarray, subjects: list[str], class_ids: list[int], path) -> None:
    """Render the Dice grid as a blue heatmap image."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(1.0 + 0.6 * len(class_ids), 1.0 + 0.4 * len(subjects)))
    im = ax.imshow(grid, cmap="Blues", vmin=0.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(len(class_ids)), [f"class {c}" for c in class_ids], rotation=45)
    ax.set_yticks(range(len(subjects)), subjects)
    ax.set_xlabel("organ class")
    ax.set_ylabel("subject")
    fig.colorbar(im, ax=ax, label="Dice")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
