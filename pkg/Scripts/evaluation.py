"""
Identification and verification metrics from score matrices:

- cms: rank-k cumulative match score, ties resolved pessimistically
- roc_eer: FAR/FRR sweep over every observed score and the equal error rate
- evaluate_*: run a classifier over probes and assemble the full report
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from Scripts.errors import EmptyMatrix, NoImpostors
from Scripts.fileio import atomic_write
from Scripts.ingest import DatasetIndex, RgbImage, load_image
from Scripts.pipeline import load_items
from Scripts.recognizer import AnyModel, score_image, train_model

logger = logging.getLogger(__name__)

CMS_FILE = "cms.csv"
ROC_FILE = "roc.csv"
DECISIONS_FILE = "decisions.csv"
SUMMARY_FILE = "summary.txt"

ROC_COLUMNS = ["threshold", "far", "frr"]

Probe = Tuple[str, RgbImage, str]  # (true label, image, probe id)


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    scores: np.ndarray  # probes x enrolled classes, higher = more similar
    truth: np.ndarray  # true class index per probe
    labels: Optional[Sequence[str]] = None

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        truth = np.asarray(self.truth, dtype=np.int64)
        if scores.ndim != 2:
            raise EmptyMatrix(f"scores must be a probes x classes matrix, got shape {scores.shape}")
        if truth.shape != (scores.shape[0],):
            raise ValueError("one truth index is needed per probe")
        if truth.size and (truth.min() < 0 or truth.max() >= scores.shape[1]):
            raise ValueError("truth index out of range")
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "truth", truth)

    @property
    def n_probes(self) -> int:
        return int(self.scores.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.scores.shape[1])

    def genuine(self) -> np.ndarray:
        return self.scores[np.arange(self.n_probes), self.truth]

    def impostor(self) -> np.ndarray:
        mask = np.ones(self.scores.shape, dtype=bool)
        mask[np.arange(self.n_probes), self.truth] = False
        return self.scores[mask]

    def true_ranks(self) -> np.ndarray:
        """0-based rank of the true class, placed after every rival with an equal score."""
        true_scores = self.genuine()[:, np.newaxis]
        return (self.scores > true_scores).sum(axis=1) + (self.scores == true_scores).sum(axis=1) - 1


@dataclass
class EvalReport:
    cms: np.ndarray
    roc: pd.DataFrame
    eer: Optional[float]
    rank1: float
    scores: ScoreMatrix
    decisions: pd.DataFrame
    timings: Dict[str, float] = field(default_factory=dict)


def cms(matrix: ScoreMatrix) -> np.ndarray:
    if matrix.n_probes == 0:
        raise EmptyMatrix("cumulative match score needs at least one probe")
    ranks = matrix.true_ranks()
    return np.array([np.mean(ranks <= r) for r in range(matrix.n_classes)])


def _sweep(genuine: np.ndarray, impostor: np.ndarray, thresholds: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    gen = np.sort(genuine)
    imp = np.sort(impostor)
    far = (imp.size - np.searchsorted(imp, thresholds, side="left")) / imp.size  # impostors >= t
    frr = np.searchsorted(gen, thresholds, side="left") / gen.size  # genuines < t
    return far, frr


def _equal_error(far: np.ndarray, frr: np.ndarray) -> float:
    gap = far - frr  # nonincreasing, +1 at -inf, -1 at +inf
    j = int(np.argmax(gap <= 0))
    if gap[j] == 0:
        return float(far[j])
    alpha = gap[j - 1] / (gap[j - 1] - gap[j])
    return float(far[j - 1] + alpha * (far[j] - far[j - 1]))


def roc_eer(matrix: ScoreMatrix, thresholds: Optional[Sequence[float]] = None) -> Tuple[pd.DataFrame, float]:
    """
    FAR(t) = share of impostor scores >= t, FRR(t) = share of genuine scores < t,
    counted per comparison. The sweep covers every distinct observed score (or
    the given thresholds) plus -inf and +inf; the EER is interpolated linearly
    between the two sweep points that bracket FAR = FRR.
    """
    if matrix.n_probes == 0:
        raise EmptyMatrix("ROC needs at least one probe")
    genuine, impostor = matrix.genuine(), matrix.impostor()
    if impostor.size == 0:
        raise NoImpostors("ROC needs impostor scores; the matrix has a single enrolled class")

    inner = np.unique(np.concatenate([genuine, impostor])) if thresholds is None else np.unique(np.asarray(thresholds, dtype=np.float64))
    sweep = np.concatenate(([-np.inf], inner[np.isfinite(inner)], [np.inf]))
    far, frr = _sweep(genuine, impostor, sweep)
    roc = pd.DataFrame({"threshold": sweep, "far": far, "frr": frr}, columns=ROC_COLUMNS)
    return roc, _equal_error(far, frr)


def _report(matrix: ScoreMatrix, probe_ids: Sequence[str], labels: Sequence[str]) -> EvalReport:
    curve = cms(matrix)
    try:
        roc, eer = roc_eer(matrix)
    except NoImpostors:
        logger.warning("Single enrolled class: no impostor scores, ROC and EER are undefined")
        roc, eer = pd.DataFrame(columns=ROC_COLUMNS), None

    predicted = np.argmax(matrix.scores, axis=1)
    decisions = pd.DataFrame(
        {
            "probe": list(probe_ids),
            "true_label": [labels[i] for i in matrix.truth],
            "predicted_label": [labels[i] for i in predicted],
            "true_score": matrix.genuine(),
            "true_rank": matrix.true_ranks() + 1,
        }
    )
    return EvalReport(cms=curve, roc=roc, eer=eer, rank1=float(curve[0]), scores=matrix, decisions=decisions)


def evaluate_model(model: AnyModel, probes: Sequence[Probe]) -> EvalReport:
    """Score every probe whose class the model knows, in probe order."""
    lookup = {label: i for i, label in enumerate(model.labels)}
    known = [p for p in probes if p[0] in lookup]
    skipped = sorted({p[0] for p in probes if p[0] not in lookup})
    if skipped:
        logger.warning("Skipping probes of %d class(es) the model does not know: %s", len(skipped), skipped)

    start = time.perf_counter()
    rows = [score_image(model, img) for _, img, _ in known]
    elapsed = time.perf_counter() - start

    scores = np.vstack(rows) if rows else np.empty((0, len(model.labels)))
    matrix = ScoreMatrix(scores=scores, truth=np.array([lookup[p[0]] for p in known], dtype=np.int64), labels=model.labels)
    report = _report(matrix, [p[2] for p in known], model.labels)

    per_probe = elapsed / max(len(known), 1)
    report.timings["query_seconds"] = elapsed
    report.timings["query_seconds_per_probe"] = per_probe
    logger.info("Scored %d probes in %.3f s (%.2f ms per probe)", len(known), elapsed, 1000 * per_probe)
    logger.info("rank-1 = %.4f, EER = %s", report.rank1, "n/a" if report.eer is None else f"{report.eer:.4f}")
    return report


def evaluate_images(
    model_kind: str,
    train_images: Sequence[Tuple[str, RgbImage]],
    probes: Sequence[Probe],
    settings,
    m: Optional[int] = None,
    epsilon: Optional[float] = None,
) -> EvalReport:
    start = time.perf_counter()
    model = train_model(model_kind, train_images, settings, m=m, epsilon=epsilon)
    train_seconds = time.perf_counter() - start
    logger.info("Trained %s on %d images in %.3f s", model_kind, len(train_images), train_seconds)

    report = evaluate_model(model, probes)
    report.timings["train_seconds"] = train_seconds
    return report


def index_probes(index: DatasetIndex) -> List[Probe]:
    return [
        (label, load_image(path), path.relative_to(index.root).as_posix())
        for label, path in index.test_items()
    ]


def evaluate_index(model: AnyModel, index: DatasetIndex) -> EvalReport:
    """Score an already trained model against the index's test split."""
    return evaluate_model(model, index_probes(index))


def evaluate_pipeline(model_kind: str, index: DatasetIndex, config) -> EvalReport:
    """Train on the index's train split, classify its test split, report."""
    train_images = load_items(index.train_items())
    return evaluate_images(
        model_kind,
        train_images,
        index_probes(index),
        config.feature_settings(),
        m=config.m,
        epsilon=config.epsilon,
    )


def _summary_text(report: EvalReport, config, digest: Optional[str]) -> str:
    eer = "n/a" if report.eer is None else repr(report.eer)
    lines = [
        f"rank1 = {report.rank1!r}",
        f"eer = {eer}",
        f"probes = {report.scores.n_probes}",
        f"classes = {report.scores.n_classes}",
        f"dataset_hash = {digest or 'n/a'}",
        "",
        "# effective configuration",
        config.to_text().rstrip("\n"),
    ]
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, out_dir: Union[str, Path], config, digest: Optional[str] = None) -> Path:
    """Write cms.csv, roc.csv, decisions.csv and summary.txt into out_dir."""
    out_dir = Path(out_dir)
    cms_df = pd.DataFrame({"rank": np.arange(1, report.cms.size + 1), "score": report.cms})

    atomic_write(out_dir / CMS_FILE, cms_df.to_csv(index=False), module="eval")
    atomic_write(out_dir / ROC_FILE, report.roc.to_csv(index=False), module="eval")
    atomic_write(out_dir / DECISIONS_FILE, report.decisions.to_csv(index=False), module="eval")
    atomic_write(out_dir / SUMMARY_FILE, _summary_text(report, config, digest), module="eval")
    logger.info("Report written to %s", out_dir)
    return out_dir
