"""Evaluation protocol: Top-B beam-pair selection, achieved-rate ratio (ATRR),
LOS/NLOS split reporting, location-error sweeps, and coherence-label accuracy.

ATRR of a selection is the spectral-efficiency ratio of the best selected pair
to the overall best pair at the sample's noise power:

    log2(1 + best_selected/noise) / log2(1 + best_overall/noise)

Per-sample ratios are averaged per split; all-zero gain matrices (outages) are
excluded from every mean and counted separately.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import GainMatrix
from .scene import perturb_locations


class BOutOfRange(Exception):
    """Top-B size outside [1, number of pairs]."""


class AllZeroGains(Exception):
    """Outage sample: every beam pair has zero gain."""


class EmptyInput(Exception):
    """Accuracy over zero samples is undefined."""


def top_b_select(logits: np.ndarray, b: int) -> list[int]:
    """Indices of the B largest logits, descending, ties to the lower index."""
    logits = np.asarray(logits)
    if not 1 <= b <= logits.size:
        raise BOutOfRange(f"B={b} outside [1, {logits.size}]")
    order = np.argsort(-logits, kind="stable")
    return [int(i) for i in order[:b]]


def atrr(selected, g: GainMatrix) -> float:
    """Rate ratio achieved by the selected pairs; 1.0 iff the optimum is among them."""
    if len(selected) == 0:
        raise ValueError("selection must be non-empty")
    flat = g.gains.ravel()
    best_all = float(flat.max())
    if best_all <= 0.0:
        raise AllZeroGains("all beam-pair gains are zero")
    best_sel = max(float(flat[p]) for p in selected)
    noise = g.noise_power
    return math.log2(1.0 + best_sel / noise) / math.log2(1.0 + best_all / noise)


def bctpa(predicted, true) -> float:
    """Exact-match accuracy over coherence-time class labels."""
    predicted = np.asarray(predicted)
    true = np.asarray(true)
    if predicted.size == 0:
        raise EmptyInput("no labels to compare")
    if predicted.shape != true.shape:
        raise ValueError("label vectors must have equal length")
    return float(np.mean(predicted == true))


@dataclass
class EvalReport:
    """Mean ATRR per B over all included samples and per LOS/NLOS split.

    Split means are None when the split is empty (reported as absent, not an
    error).  Outage samples are excluded and counted in n_excluded.
    """

    b_values: list[int]
    atrr_all: list[float]
    atrr_los: list
    atrr_nlos: list
    n_total: int
    n_los: int
    n_nlos: int
    n_excluded: int
    top1_accuracy: float
    bctpa: float | None = None

    def rows(self, value: float = 0.0, splits=("all", "los", "nlos")) -> list[dict]:
        """Plot-ready rows: one per (sweep value, split, B)."""
        by_split = {"all": (self.atrr_all, self.n_total),
                    "los": (self.atrr_los, self.n_los),
                    "nlos": (self.atrr_nlos, self.n_nlos)}
        out = []
        for split in splits:
            series, n = by_split[split]
            for b, val in zip(self.b_values, series):
                out.append({"value": value, "split": split, "b": b,
                            "atrr": "" if val is None else val, "n": n})
        return out


def _mean(values) -> float | None:
    return math.fsum(values) / len(values) if values else None


def split_report(logits_list, gains_list, b_max: int = 5,
                 b_values=None) -> EvalReport:
    """Evaluate aligned predictions against gain matrices at every B.

    ``logits_list`` is (N, classes)-like; ``gains_list`` is a sequence of
    GainMatrix with LOS flags.  Exact summation keeps the LOS/NLOS
    decomposition identity exact.
    """
    if len(logits_list) != len(gains_list):
        raise ValueError("predictions and samples must align")
    bs = list(b_values) if b_values is not None else list(range(1, b_max + 1))

    per_b: dict[int, dict[str, list[float]]] = {b: {"all": [], "los": [], "nlos": []}
                                                for b in bs}
    n_los = n_nlos = n_excluded = 0
    top1_hits = 0
    for logits, g in zip(logits_list, gains_list):
        flat = np.asarray(g.gains).ravel()
        if float(flat.max()) <= 0.0:
            n_excluded += 1
            continue
        split = "los" if g.los else "nlos"
        if g.los:
            n_los += 1
        else:
            n_nlos += 1
        selected_max = top_b_select(logits, max(bs))
        if selected_max[0] == int(np.argmax(flat)):
            top1_hits += 1
        for b in bs:
            value = atrr(selected_max[:b], g)
            per_b[b]["all"].append(value)
            per_b[b][split].append(value)

    n_total = n_los + n_nlos
    return EvalReport(
        b_values=bs,
        atrr_all=[_mean(per_b[b]["all"]) if n_total else None for b in bs],
        atrr_los=[_mean(per_b[b]["los"]) for b in bs],
        atrr_nlos=[_mean(per_b[b]["nlos"]) for b in bs],
        n_total=n_total, n_los=n_los, n_nlos=n_nlos, n_excluded=n_excluded,
        top1_accuracy=(top1_hits / n_total) if n_total else math.nan,
    )


def uniform_baseline(gains_list) -> float:
    """Expected Top-1 ATRR of a uniform-random single-pair selection.

    Computed exactly as the per-sample mean over all pairs, then averaged over
    the non-outage samples.
    """
    per_sample = []
    for g in gains_list:
        flat = np.asarray(g.gains).ravel()
        if float(flat.max()) <= 0.0:
            continue
        per_sample.append(_mean([atrr([p], g) for p in range(flat.size)]))
    if not per_sample:
        raise EmptyInput("every sample is an outage")
    return math.fsum(per_sample) / len(per_sample)


def _child_seed(seed: int, *parts: int) -> int:
    ss = np.random.SeedSequence((int(seed),) + tuple(int(p) for p in parts))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sigma_sweep(predict, scenes, gains_list, featurize, sigmas,
                b_values=(5,), seed: int = 0, ms_only: bool = False):
    """Location-error sweep: features come from perturbed scenes, ground-truth
    gains stay those of the clean scenes.

    ``predict`` maps a stacked feature batch to logits; ``featurize`` maps one
    scene to its feature tensor.  Returns [(sigma, EvalReport), ...].
    """
    results = []
    for si, sigma in enumerate(sigmas):
        if sigma < 0:
            raise ValueError("sigma values must be >= 0")
        feats = [featurize(perturb_locations(sc, float(sigma), _child_seed(seed, si, i),
                                             ms_only=ms_only))
                 for i, sc in enumerate(scenes)]
        logits = predict(np.stack(feats))
        results.append((float(sigma), split_report(logits, gains_list, b_values=b_values)))
    return results


def sweep_rows(sweep_results, splits=("los", "nlos")) -> list[dict]:
    rows = []
    for sigma, report in sweep_results:
        rows.extend(report.rows(value=sigma, splits=splits))
    return rows


CSV_FIELDS = ("value", "split", "b", "atrr", "n")


def write_csv(rows, fp) -> None:
    writer = csv.DictWriter(fp, fieldnames=CSV_FIELDS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
