"""Measurement protocol: input categories, survival/ROC curves, rejection
tables, mean-radius and normality reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .attacks import DEFAULT_EPS_GRID, fgsm, min_pgd, min_random
from .data import Dataset
from .errors import DegenerateSampleError, InsufficientSampleError
from .network import Network
from .radius import RadiusResult, SearchParams, batch_radii
from .validators import dagostino_pearson_pvalue

DEFAULT_THRESHOLD_GRID = tuple(round(0.002 * i, 3) for i in range(1, 9))  # 0.002 .. 0.016


class Category(Enum):
    VALID = "Valid"
    MISCLASSIFIED = "Misclassified"
    FGSM_01 = "FGSM_01"
    FGSM_005 = "FGSM_005"
    STRONG_MIN = "StrongMin"
    RANDOM_STRONG = "RandomStrong"


@dataclass
class EvaluationReport:
    radii: dict[Category, list[float]]
    survival: dict[Category, list[tuple[float, int]]]
    roc: dict[Category, list[tuple[float, float]]]
    auc: dict[Category, float]
    rejection_table: list[dict]
    means: dict[Category, float]
    valid_pvalue: float | None
    separation_ratio: float | None
    separation_validated: bool
    probe_seconds_mean: float
    shortfalls: dict[Category, int] = field(default_factory=dict)


def categorize(net: Network, dataset: Dataset, n_per_category: int = 100,
               eps_default: float = 0.1, eps_strong: float = 0.05,
               eps_grid=DEFAULT_EPS_GRID, seed: int = 0,
               random_selection: bool = False) -> dict[Category, list[np.ndarray]]:
    """Fill the six input categories from a labelled dataset.

    First-k selection by default; `random_selection` draws a seeded
    permutation first. Attack categories take the first n successful
    attacks on correctly classified inputs. Shortfalls are allowed; the
    caller sees them as short lists.
    """
    order = np.arange(len(dataset))
    if random_selection:
        order = np.random.default_rng(seed).permutation(len(dataset))
    preds = np.argmax(net.forward_batch(dataset.inputs), axis=1)
    out: dict[Category, list[np.ndarray]] = {c: [] for c in Category}
    for i in order:
        x, y, pred = dataset.inputs[i], int(dataset.labels[i]), int(preds[i])
        if pred == y:
            if len(out[Category.VALID]) < n_per_category:
                out[Category.VALID].append(x)
            if len(out[Category.FGSM_01]) < n_per_category:
                r = fgsm(net, x, y, eps_default)
                if r.success:
                    out[Category.FGSM_01].append(r.adversarial)
            if len(out[Category.FGSM_005]) < n_per_category:
                r = fgsm(net, x, y, eps_strong)
                if r.success:
                    out[Category.FGSM_005].append(r.adversarial)
            if len(out[Category.STRONG_MIN]) < n_per_category:
                r = min_pgd(net, x, y, eps_grid)
                if r.success:
                    out[Category.STRONG_MIN].append(r.adversarial)
            if len(out[Category.RANDOM_STRONG]) < n_per_category:
                r = min_random(net, x, y, eps_grid, seed=seed + int(i))
                if r.success:
                    out[Category.RANDOM_STRONG].append(r.adversarial)
        elif len(out[Category.MISCLASSIFIED]) < n_per_category:
            out[Category.MISCLASSIFIED].append(x)
        if all(len(v) >= n_per_category for v in out.values()):
            break
    return out


def survival_curve(radii, grid) -> list[tuple[float, int]]:
    """count(t) = |{r : r > t}| per grid threshold; non-increasing."""
    radii = np.asarray(list(radii), dtype=float)
    return [(float(t), int(np.sum(radii > t))) for t in grid]


def roc_curve(valid_radii, invalid_radii) -> list[tuple[float, float]]:
    """Sweep the rejection threshold (reject radius < theta) over all
    distinct radii plus sentinels; returns (false alarm, true alarm)
    points from (0,0) to (1,1)."""
    valid = np.asarray(list(valid_radii), dtype=float)
    invalid = np.asarray(list(invalid_radii), dtype=float)
    thresholds = np.concatenate([[-np.inf], np.unique(np.concatenate([valid, invalid])), [np.inf]])
    points = []
    for t in thresholds:
        fa = float(np.mean(valid < t)) if valid.size else 0.0
        ta = float(np.mean(invalid < t)) if invalid.size else 0.0
        points.append((fa, ta))
    points.append((1.0, 1.0))
    # deduplicate while preserving sweep order
    unique = []
    for p in points:
        if not unique or unique[-1] != p:
            unique.append(p)
    return unique


def auc(points) -> float:
    """Trapezoidal area under an ROC point list sorted by false-alarm rate."""
    pts = sorted(points)
    fa = np.array([p[0] for p in pts])
    ta = np.array([p[1] for p in pts])
    return float(np.trapezoid(ta, fa))


def rejection_table(category_radii: dict[Category, list[float]],
                    thresholds=DEFAULT_THRESHOLD_GRID) -> list[dict]:
    """Per threshold: percentage of each category with radius < threshold."""
    rows = []
    for t in thresholds:
        row = {"threshold": float(t)}
        for cat, radii in category_radii.items():
            arr = np.asarray(radii, dtype=float)
            row[cat.value] = float(np.mean(arr < t) * 100.0) if arr.size else None
        rows.append(row)
    return rows


def mean_report(category_radii: dict[Category, list[float]],
                separation_bar: float = 2.0) -> dict:
    """Per-category means, Valid normality p-value, and the separation
    ratio mean(Valid) / mean(all non-valid radii pooled).

    The >= 2 bar operationalizes "valid radii are much larger"; it is a
    desk-scale stand-in, flagged as such in emitted reports.
    """
    means = {
        cat: (float(np.mean(r)) if len(r) else None)
        for cat, r in category_radii.items()
    }
    valid = category_radii.get(Category.VALID, [])
    pvalue = None
    if len(valid) >= 20:
        try:
            pvalue = dagostino_pearson_pvalue(valid)
        except (DegenerateSampleError, InsufficientSampleError):
            pvalue = None
    pooled = [r for cat, rs in category_radii.items() if cat != Category.VALID for r in rs]
    ratio = None
    if valid and pooled and np.mean(pooled) > 0:
        ratio = float(np.mean(valid) / np.mean(pooled))
    return {
        "means": means,
        "valid_pvalue": pvalue,
        "separation_ratio": ratio,
        "separation_validated": ratio is not None and ratio >= separation_bar,
        "separation_bar": separation_bar,
    }


def evaluate(net: Network, dataset: Dataset, params: SearchParams = SearchParams(),
             n_per_category: int = 100, parallelism: int = 1, seed: int = 0,
             survival_grid=None, random_selection: bool = False) -> EvaluationReport:
    """Full protocol: categorize, compute radii, assemble every report."""
    categories = categorize(net, dataset, n_per_category, seed=seed,
                            random_selection=random_selection)
    radii: dict[Category, list[float]] = {}
    times: list[float] = []
    shortfalls: dict[Category, int] = {}
    for cat, inputs in categories.items():
        results = batch_radii(net, inputs, params, parallelism)
        radii[cat] = [r.radius for r in results if r.error is None]
        times.extend(r.wall_time / max(r.iterations, 1) for r in results if r.error is None)
        if len(inputs) < n_per_category:
            shortfalls[cat] = n_per_category - len(inputs)
    if survival_grid is None:
        top = max((max(r) for r in radii.values() if r), default=params.up)
        survival_grid = np.linspace(0.0, top, 33)
    survival = {cat: survival_curve(r, survival_grid) for cat, r in radii.items()}
    roc, aucs = {}, {}
    for cat in Category:
        if cat is Category.VALID:
            continue
        if radii[Category.VALID] and radii[cat]:
            pts = roc_curve(radii[Category.VALID], radii[cat])
            roc[cat] = pts
            aucs[cat] = auc(pts)
    mr = mean_report(radii)
    return EvaluationReport(
        radii=radii,
        survival=survival,
        roc=roc,
        auc=aucs,
        rejection_table=rejection_table(radii),
        means=mr["means"],
        valid_pvalue=mr["valid_pvalue"],
        separation_ratio=mr["separation_ratio"],
        separation_validated=mr["separation_validated"],
        probe_seconds_mean=float(np.mean(times)) if times else 0.0,
        shortfalls=shortfalls,
    )


def write_report(report: EvaluationReport, out_dir) -> None:
    """Emit machine-readable records plus plain-text tables."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "radii.jsonl"), "w") as fh:
        i = 0
        for cat, rs in report.radii.items():
            for r in rs:
                fh.write(json.dumps({"id": i, "category": cat.value, "radius": r}) + "\n")
                i += 1
    doc = {
        "means": {c.value: m for c, m in report.means.items()},
        "valid_pvalue": report.valid_pvalue,
        "separation_ratio": report.separation_ratio,
        "separation_validated": report.separation_validated,
        "separation_note": "ratio >= 2 is a desk-scale operationalization of 'much larger'",
        "auc": {c.value: a for c, a in report.auc.items()},
        "rejection_table": report.rejection_table,
        "survival": {c.value: s for c, s in report.survival.items()},
        "roc": {c.value: p for c, p in report.roc.items()},
        "shortfalls": {c.value: n for c, n in report.shortfalls.items()},
    }
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(doc, fh, indent=2)
    with open(os.path.join(out_dir, "tables.txt"), "w") as fh:
        fh.write("Mean radius per category\n")
        for cat, m in report.means.items():
            fh.write(f"  {cat.value:<14} {m if m is not None else 'n/a'}\n")
        fh.write(f"Valid p-value: {report.valid_pvalue}\n")
        fh.write(f"Separation ratio: {report.separation_ratio} "
                 f"(validated: {report.separation_validated})\n")
        fh.write(f"Mean seconds per probe: {report.probe_seconds_mean:.6f}\n\n")
        fh.write("Rejection rates (%) by threshold\n")
        cats = [c.value for c in Category]
        fh.write("  thr    " + "  ".join(f"{c:>13}" for c in cats) + "\n")
        for row in report.rejection_table:
            cells = "  ".join(
                f"{row[c]:>13.1f}" if row.get(c) is not None else f"{'n/a':>13}" for c in cats
            )
            fh.write(f"  {row['threshold']:<6} {cells}\n")
