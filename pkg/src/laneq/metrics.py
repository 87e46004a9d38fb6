"""Multi-modal evaluation suite, reported in meters.

Per scenario the forecaster produces 16 hypotheses with confidences; this
module scores them against ground truth with displacement minima over top-K
subsets (confidence-ranked and error-ranked), miss/hit/recall rates across
horizons and distance thresholds, error percentiles, calibration, and a
comparison against the zero-residual rollout baseline.

All distances are normalized lane-frame values multiplied back into meters
by the preprocessing scale; rotations and translations preserve distances,
so these equal displacements measured in raw world coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .model import DEFAULT_ARCH, Architecture, forward
from .qdecoder import ModeSet, confidence_order
from .scenario import (
    DEFAULT_LANE_RADIUS,
    DEFAULT_SCALE,
    Example,
    Scenario,
    build_example,
)

K_VALUES = (1, 5, 10, 16)
THRESHOLDS_M = (2.0, 4.0)
HORIZON_STEPS_EVAL = (10, 20)  # 1.0 s and 2.0 s at 10 Hz
HIT_THRESHOLD_M = 2.0  # headline Hit@1 / ECE threshold, at the full horizon
ECE_BINS = 10


@dataclass
class ScenarioEval:
    """Displacement profiles for one scenario, in meters."""

    scenario_id: str
    displacements: np.ndarray  # (M, T) per-mode distance to ground truth
    confidences: np.ndarray  # (M,)
    baseline_displacements: np.ndarray  # (T,)

    @property
    def ade(self) -> np.ndarray:
        return self.displacements.mean(axis=1)

    @property
    def fde(self) -> np.ndarray:
        return self.displacements[:, -1]

    @property
    def ranking(self) -> np.ndarray:
        return confidence_order(self.confidences)


def score_modes(example: Example, modes: ModeSet) -> ScenarioEval:
    """Distance profiles of every hypothesis and of the baseline, in meters."""
    target = example.target_positions
    deltas = modes.trajectories - target[None, :, :]
    return ScenarioEval(
        scenario_id=example.scenario_id,
        displacements=np.hypot(deltas[:, :, 0], deltas[:, :, 1]) * example.scale,
        confidences=modes.confidences,
        baseline_displacements=np.hypot(
            *(example.baseline - target).T
        ) * example.scale,
    )


def min_displacement(evaluation: ScenarioEval, k: int, ranking: str) -> tuple[float, float]:
    """(minADE, minFDE) over a K-mode subset; minima taken independently.

    ``confidence`` takes the K most confident modes (ties to the lower mode
    index).  ``oracle`` is error-ranked per metric: the K best modes by ADE
    for the ADE figure, the K best by FDE for the FDE figure; the min over
    the K smallest equals the global min for any K, which keeps the oracle
    curve a true lower bound on every confidence-ranked curve.
    """
    n_modes = len(evaluation.confidences)
    if not 1 <= k <= n_modes:
        raise ValueError(f"K must be in 1..{n_modes}, got {k}")
    ade, fde = evaluation.ade, evaluation.fde
    if ranking == "confidence":
        subset = evaluation.ranking[:k]
        return float(ade[subset].min()), float(fde[subset].min())
    if ranking == "oracle":
        return float(ade.min()), float(fde.min())
    raise ValueError(f"ranking must be 'confidence' or 'oracle', got {ranking!r}")


def miss_rate(evaluations: list[ScenarioEval], threshold: float) -> float:
    """Fraction of scenarios where no mode ends within ``threshold`` meters."""
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    misses = [ev.fde.min() > threshold for ev in evaluations]
    return float(np.mean(misses))


def hit_at_1(evaluations: list[ScenarioEval], threshold: float, horizon_steps: int) -> float:
    """Fraction where the top-confidence mode is within threshold at the horizon."""
    hits = [
        ev.displacements[ev.ranking[0], horizon_steps - 1] <= threshold for ev in evaluations
    ]
    return float(np.mean(hits))


def recall_at_k(
    evaluations: list[ScenarioEval], k: int, threshold: float, horizon_steps: int
) -> float:
    """Fraction where any of the top-K confidence-ranked modes is within threshold."""
    hits = [
        ev.displacements[ev.ranking[:k], horizon_steps - 1].min() <= threshold
        for ev in evaluations
    ]
    return float(np.mean(hits))


def oracle_in_top_k(evaluations: list[ScenarioEval], k: int) -> float:
    """Fraction where the globally best-ADE mode appears among the top-K by confidence."""
    found = [int(np.argmin(ev.ade)) in ev.ranking[:k] for ev in evaluations]
    return float(np.mean(found))


def ece(pairs: list[tuple[float, bool]], n_bins: int = ECE_BINS) -> float:
    """Binned expected calibration error over (confidence, hit) pairs."""
    if n_bins < 1:
        raise ValueError(f"n_bins must be at least 1, got {n_bins}")
    if not pairs:
        raise ValueError("cannot compute calibration over an empty input")
    total = len(pairs)
    bins: dict[int, list[tuple[float, bool]]] = {}
    for confidence, hit in pairs:
        index = min(int(confidence * n_bins), n_bins - 1)
        bins.setdefault(index, []).append((confidence, hit))
    error = 0.0
    for members in bins.values():
        confidences = [c for c, _ in members]
        hits = [h for _, h in members]
        error += (len(members) / total) * abs(np.mean(hits) - np.mean(confidences))
    return float(error)


def percentile(values, p: float) -> float:
    """Nearest-rank percentile, 0 < p < 100."""
    if not 0 < p < 100:
        raise ValueError(f"percentile must be strictly between 0 and 100, got {p}")
    data = sorted(values)
    if not data:
        raise ValueError("cannot take a percentile of an empty sequence")
    rank = math.ceil(p / 100 * len(data))
    return float(data[rank - 1])


def ap_proxy(evaluations: list[ScenarioEval], threshold: float = HIT_THRESHOLD_M) -> float:
    """Area under the precision-recall curve of per-mode endpoint hits.

    A stand-in ranking summary (not a published protocol): every mode of
    every scenario contributes a (confidence, endpoint-hit) pair, and the
    confidence threshold is swept from high to low.
    """
    labeled = []
    for scenario_index, ev in enumerate(evaluations):
        for mode, confidence in enumerate(ev.confidences):
            labeled.append((-confidence, scenario_index, mode, ev.fde[mode] <= threshold))
    labeled.sort()
    positives = sum(1 for item in labeled if item[3])
    if positives == 0:
        return 0.0
    area, true_seen, prev_recall = 0.0, 0, 0.0
    for rank, item in enumerate(labeled, start=1):
        if item[3]:
            true_seen += 1
            recall = true_seen / positives
            area += (recall - prev_recall) * (true_seen / rank)
            prev_recall = recall
    return float(area)


@dataclass
class EvalReport:
    """Aggregated metrics over one evaluation split, distances in meters."""

    n_scenarios: int
    n_skipped: int
    skip_reasons: dict[str, int]
    min_ade_at_k: dict[int, float]
    min_fde_at_k: dict[int, float]
    best_k_ade: dict[int, float]
    best_k_fde: dict[int, float]
    miss_at_2m: float
    miss_at_4m: float
    hit_at_1: float
    oracle_in_top_k: dict[int, float]
    recall: dict[int, dict[float, dict[int, float]]]  # horizon steps -> threshold -> K
    percentile_ade: dict[int, float]
    ece: float
    ap_proxy: float
    baseline_ade: float
    baseline_fde: float
    config_hash: str = ""
    extra: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        def k_map(mapping):
            return {f"k{k}": mapping[k] for k in sorted(mapping)}

        recall = {}
        for steps in sorted(self.recall):
            horizon_key = f"horizon_{steps / 10:.1f}s"
            recall[horizon_key] = {
                f"threshold_{threshold:g}m": k_map(by_k)
                for threshold, by_k in sorted(self.recall[steps].items())
            }
        return {
            "n_scenarios": self.n_scenarios,
            "n_skipped": self.n_skipped,
            "skip_reasons": dict(sorted(self.skip_reasons.items())),
            "min_ade_at_k": k_map(self.min_ade_at_k),
            "min_fde_at_k": k_map(self.min_fde_at_k),
            "best_k_ade": k_map(self.best_k_ade),
            "best_k_fde": k_map(self.best_k_fde),
            "miss_at_2m": self.miss_at_2m,
            "miss_at_4m": self.miss_at_4m,
            "hit_at_1": self.hit_at_1,
            "oracle_in_top_k": k_map(self.oracle_in_top_k),
            "recall_at_k": recall,
            "percentile_ade": {f"p{p}": self.percentile_ade[p] for p in sorted(self.percentile_ade)},
            "ece": self.ece,
            "ap_proxy": self.ap_proxy,
            "ap_proxy_note": "threshold-swept PR area over per-mode endpoint hits; "
            "not a published protocol",
            "baseline_ade": self.baseline_ade,
            "baseline_fde": self.baseline_fde,
            "config_hash": self.config_hash,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def aggregate(
    evaluations: list[ScenarioEval],
    skip_reasons: dict[str, int] | None = None,
    config_hash: str = "",
) -> EvalReport:
    """Reduce per-scenario evaluations into one report."""
    if not evaluations:
        raise ValueError("cannot aggregate an empty evaluation list")
    skip_reasons = dict(skip_reasons or {})

    def mean_min(k, ranking, index):
        return float(np.mean([min_displacement(ev, k, ranking)[index] for ev in evaluations]))

    best_ade_per_scenario = [float(ev.ade.min()) for ev in evaluations]
    pairs = [
        (
            float(ev.confidences[ev.ranking[0]]),
            bool(ev.displacements[ev.ranking[0], -1] <= HIT_THRESHOLD_M),
        )
        for ev in evaluations
    ]
    recall = {
        steps: {
            threshold: {
                k: recall_at_k(evaluations, k, threshold, steps) for k in K_VALUES
            }
            for threshold in THRESHOLDS_M
        }
        for steps in HORIZON_STEPS_EVAL
    }
    return EvalReport(
        n_scenarios=len(evaluations),
        n_skipped=sum(skip_reasons.values()),
        skip_reasons=skip_reasons,
        min_ade_at_k={k: mean_min(k, "confidence", 0) for k in K_VALUES},
        min_fde_at_k={k: mean_min(k, "confidence", 1) for k in K_VALUES},
        best_k_ade={k: mean_min(k, "oracle", 0) for k in K_VALUES},
        best_k_fde={k: mean_min(k, "oracle", 1) for k in K_VALUES},
        miss_at_2m=miss_rate(evaluations, 2.0),
        miss_at_4m=miss_rate(evaluations, 4.0),
        hit_at_1=hit_at_1(evaluations, HIT_THRESHOLD_M, HORIZON_STEPS_EVAL[-1]),
        oracle_in_top_k={k: oracle_in_top_k(evaluations, k) for k in K_VALUES},
        recall=recall,
        percentile_ade={p: percentile(best_ade_per_scenario, p) for p in (50, 90, 95, 99)},
        ece=ece(pairs),
        ap_proxy=ap_proxy(evaluations),
        baseline_ade=float(
            np.mean([ev.baseline_displacements.mean() for ev in evaluations])
        ),
        baseline_fde=float(
            np.mean([ev.baseline_displacements[-1] for ev in evaluations])
        ),
        config_hash=config_hash,
    )


def evaluate_examples(
    examples: list[Example],
    theta: np.ndarray,
    arch: Architecture = DEFAULT_ARCH,
    config_hash: str = "",
) -> EvalReport:
    """Score already-preprocessed examples with the given parameters."""
    if not examples:
        raise ValueError("cannot evaluate an empty split")
    evaluations = [score_modes(ex, forward(ex, theta, arch)) for ex in examples]
    return aggregate(evaluations, config_hash=config_hash)


def evaluate_scenarios(
    scenarios: list[Scenario],
    theta: np.ndarray,
    arch: Architecture = DEFAULT_ARCH,
    scale: float = DEFAULT_SCALE,
    lane_radius: float = DEFAULT_LANE_RADIUS,
    config_hash: str = "",
    workers: int = 1,
) -> tuple[EvalReport, list[ScenarioEval]]:
    """Preprocess and score raw scenarios; preprocessing failures become
    counted skips rather than errors."""
    if not scenarios:
        raise ValueError("cannot evaluate an empty split")
    examples, skip_reasons = [], {}
    for scenario in scenarios:
        try:
            examples.append(build_example(scenario, scale=scale, lane_radius=lane_radius))
        except ValueError:
            skip_reasons["preprocess-error"] = skip_reasons.get("preprocess-error", 0) + 1
    if not examples:
        raise ValueError("every scenario failed preprocessing")
    evaluations = _score_examples(examples, theta, arch, workers)
    return aggregate(evaluations, skip_reasons, config_hash), evaluations


def _score_one(args):
    example, theta, arch = args
    return score_modes(example, forward(example, theta, arch))


def _score_examples(examples, theta, arch, workers: int) -> list[ScenarioEval]:
    if workers <= 1 or len(examples) < 4:
        return [_score_one((ex, theta, arch)) for ex in examples]
    from multiprocessing import Pool

    with Pool(workers) as pool:
        return pool.map(_score_one, [(ex, theta, arch) for ex in examples])


def write_scenario_csv(evaluations: list[ScenarioEval], path, config_hash: str = "") -> None:
    """Per-mode dump: one row per (scenario, mode) with ADE/FDE/confidence."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write("scenario_id,mode,ade,fde,confidence\n")
        for ev in evaluations:
            for mode in range(len(ev.confidences)):
                fh.write(
                    f"{ev.scenario_id},{mode},{float(ev.ade[mode])!r},"
                    f"{float(ev.fde[mode])!r},{float(ev.confidences[mode])!r}\n"
                )
