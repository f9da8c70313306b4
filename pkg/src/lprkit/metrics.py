"""Recognition and detection metrics.

Recognition: full-sequence accuracy and normalized edit distance (reported
higher-is-better as 1 - distance). Detection: IoU, greedy-matched
precision/recall, 101-point interpolated AP, AP averaged over IoU
0.50:0.05:0.95, and the maximum F1 over confidence thresholds.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .errors import DegenerateBox, EmptyInput
from .plate_grammar import normalize

RECALL_GRID = tuple(Fraction(i, 100) for i in range(101))
IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def ned_score(pred: str, gt: str) -> float:
    """1 - edit_distance / max length; two empty strings score 1."""
    longest = max(len(pred), len(gt))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(pred, gt) / longest


@dataclass(frozen=True)
class RecognitionReport:
    accuracy: float
    ned: float
    n_samples: int

    def to_json(self) -> dict:
        return asdict(self)


def sequence_accuracy(pairs: Iterable[tuple[str, str]]) -> RecognitionReport:
    """Exact-match accuracy and mean NED over (prediction, ground truth)
    pairs, both normalized (uppercase, whitespace removed) first."""
    pairs = [(normalize(p), normalize(g)) for p, g in pairs]
    if not pairs:
        raise EmptyInput("no prediction/ground-truth pairs")
    correct = sum(p == g for p, g in pairs)
    ned = sum(ned_score(p, g) for p, g in pairs) / len(pairs)
    return RecognitionReport(correct / len(pairs), ned, len(pairs))


# detection

Box = Sequence[float]


class Detection(NamedTuple):
    bbox: tuple[float, float, float, float]
    score: float
    image: str = ""


class GroundTruth(NamedTuple):
    bbox: tuple[float, float, float, float]
    image: str = ""


def iou(b1: Box, b2: Box) -> float:
    """Intersection over union of two ``(x, y, w, h)`` boxes."""
    x1, y1, w1, h1 = b1
    x2, y2, w2, h2 = b2
    if w1 <= 0 or h1 <= 0 or w2 <= 0 or h2 <= 0:
        raise DegenerateBox(f"boxes need positive width and height: {tuple(b1)}, {tuple(b2)}")
    iw = min(x1 + w1, x2 + w2) - max(x1, x2)
    ih = min(y1 + h1, y2 + h2) - max(y1, y2)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (w1 * h1 + w2 * h2 - inter)


def _as_dets(dets) -> list[Detection]:
    out = []
    for d in dets:
        d = d if isinstance(d, Detection) else Detection(*d)
        if not 0 <= d.score <= 1:
            raise ValueError(f"confidence {d.score} outside [0, 1]")
        out.append(Detection(tuple(d.bbox), d.score, d.image))
    return out


def _as_gts(gts) -> list[GroundTruth]:
    out = []
    for g in gts:
        if isinstance(g, GroundTruth):
            out.append(GroundTruth(tuple(g.bbox), g.image))
        elif len(g) == 4 and not isinstance(g[0], (tuple, list)):
            out.append(GroundTruth(tuple(g)))
        else:
            out.append(GroundTruth(tuple(g[0]), *g[1:]))
    return out


def match_detections(dets, gts, iou_threshold: float) -> list[tuple[Detection, bool]]:
    """Greedy matching in descending confidence.

    Each detection claims the unmatched ground truth (same image) with the
    highest IoU, if that IoU reaches the threshold. Ties in confidence are
    ordered by (image, box) so the result does not depend on input order.
    """
    dets = sorted(_as_dets(dets), key=lambda d: (-d.score, d.image, d.bbox))
    gts = _as_gts(gts)
    taken = [False] * len(gts)
    out = []
    for d in dets:
        best, best_iou = -1, -1.0
        for j, g in enumerate(gts):
            if taken[j] or g.image != d.image:
                continue
            v = iou(d.bbox, g.bbox)
            if v > best_iou:
                best, best_iou = j, v
        hit = best >= 0 and best_iou >= iou_threshold
        if hit:
            taken[best] = True
        out.append((d, hit))
    return out


def pr_points(dets, gts, iou_threshold: float) -> list[tuple[float, int, int]]:
    """(threshold, true positives, false positives) at each unique confidence,
    from the highest threshold down."""
    matched = match_detections(dets, gts, iou_threshold)
    points = []
    tp = fp = 0
    for i, (d, hit) in enumerate(matched):
        tp += hit
        fp += not hit
        if i + 1 == len(matched) or matched[i + 1][0].score != d.score:
            points.append((d.score, tp, fp))
    return points


def average_precision(dets, gts, iou_threshold: float = 0.5) -> float:
    """101-point interpolated AP. Returns 0 when there are no ground truths."""
    n_gt = len(_as_gts(gts))
    if n_gt == 0:
        return 0.0
    points = pr_points(dets, gts, iou_threshold)
    if not points:
        return 0.0
    recalls = [Fraction(tp, n_gt) for _, tp, _ in points]
    precisions = [Fraction(tp, tp + fp) for _, tp, fp in points]
    # running max from the right gives the precision envelope
    envelope = precisions[:]
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    total = Fraction(0)
    k = 0
    for r in RECALL_GRID:
        while k < len(recalls) and recalls[k] < r:
            k += 1
        if k == len(recalls):
            break
        total += envelope[k]
    return float(total / len(RECALL_GRID))


def map_range(dets, gts) -> float:
    """Mean AP over IoU thresholds 0.50, 0.55, ..., 0.95."""
    return sum(average_precision(dets, gts, t) for t in IOU_THRESHOLDS) / len(IOU_THRESHOLDS)


@dataclass(frozen=True)
class F1Sweep:
    best_threshold: float
    f1_max: float
    precision: float
    recall: float


def f1_sweep(dets, gts, iou_threshold: float = 0.5) -> F1Sweep:
    """Best F1 over thresholds at every unique confidence; ties go to the
    higher threshold."""
    n_gt = len(_as_gts(gts))
    best = F1Sweep(0.0, 0.0, 0.0, 0.0)
    best_f1 = Fraction(-1)
    for thr, tp, fp in pr_points(dets, gts, iou_threshold):
        denom = 2 * tp + fp + (n_gt - tp)
        f1 = Fraction(2 * tp, denom) if denom else Fraction(0)
        if f1 > best_f1:
            best_f1 = f1
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / n_gt if n_gt else 0.0
            best = F1Sweep(thr, float(f1), precision, recall)
    return best


@dataclass(frozen=True)
class DetectionReport:
    precision: float
    recall: float
    ap50: float
    ap50_95: float
    f1_max: float
    best_threshold: float
    n_detections: int
    n_ground_truth: int

    def to_json(self) -> dict:
        return asdict(self)


def evaluate_detections(dets, gts) -> DetectionReport:
    """Precision and recall are reported at the F1-maximizing threshold."""
    dets = _as_dets(dets)
    gts = _as_gts(gts)
    sweep = f1_sweep(dets, gts, 0.5)
    return DetectionReport(
        precision=sweep.precision,
        recall=sweep.recall,
        ap50=average_precision(dets, gts, 0.5),
        ap50_95=map_range(dets, gts),
        f1_max=sweep.f1_max,
        best_threshold=sweep.best_threshold,
        n_detections=len(dets),
        n_ground_truth=len(gts),
    )


def format_table(report: RecognitionReport | DetectionReport) -> str:
    rows = report.to_json()
    width = max(len(k) for k in rows)
    lines = []
    for k, v in rows.items():
        val = f"{v:.4f}" if isinstance(v, float) else str(v)
        lines.append(f"{k.ljust(width)}  {val}")
    return "\n".join(lines)


__all__ = [
    "Detection",
    "DetectionReport",
    "F1Sweep",
    "GroundTruth",
    "IOU_THRESHOLDS",
    "RecognitionReport",
    "average_precision",
    "edit_distance",
    "evaluate_detections",
    "f1_sweep",
    "format_table",
    "iou",
    "map_range",
    "match_detections",
    "ned_score",
    "pr_points",
    "sequence_accuracy",
]
