"""HICO-DET style mAP: per-class greedy matching at IoU >= threshold on both
boxes, precision-envelope AP, and aggregation over rare/non-rare and the
zero-shot splits.

Reported aggregates are percentage points (means multiplied by 100); classes
with no ground truth in the evaluated set are excluded from every mean.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import (BoundingBox, GroundTruthInstance, HoiTaxonomy,
                      SplitDefinition)
from .errors import ValidationError
from .scoring import HoiDetection


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union on continuous coordinates."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    if ix1 >= ix2 or iy1 >= iy2:
        return 0.0
    inter = (ix2 - ix1) * (iy2 - iy1)
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class MatchedDetection:
    detection: HoiDetection
    is_true_positive: bool
    gt_index: int | None  # index into the class's GT list, or None


def match_class(detections: list[HoiDetection],
                gts: list[GroundTruthInstance],
                iou_threshold: float = 0.5) -> list[MatchedDetection]:
    """Greedy TP assignment for one HOI class across images.

    Detections are ranked by score descending (ties: ascending image_id, then
    input order). A detection is a true positive when some still-unmatched GT
    in its image overlaps both boxes at >= iou_threshold; among eligible GTs
    the one maximizing min(human IoU, object IoU) wins, ties going to the
    earlier GT in input order. Each GT is matched at most once.
    """
    order = sorted(range(len(detections)),
                   key=lambda i: (-detections[i].score, detections[i].image_id, i))
    gt_by_image: dict[str, list[int]] = {}
    for gi, gt in enumerate(gts):
        gt_by_image.setdefault(gt.image_id, []).append(gi)
    matched: set[int] = set()
    result = []
    for di in order:
        det = detections[di]
        best_gi = None
        best_overlap = 0.0
        for gi in gt_by_image.get(det.image_id, ()):
            if gi in matched:
                continue
            gt = gts[gi]
            iou_h = iou(det.human_box, gt.human_box)
            if iou_h < iou_threshold:
                continue
            iou_o = iou(det.object_box, gt.object_box)
            if iou_o < iou_threshold:
                continue
            overlap = min(iou_h, iou_o)
            if best_gi is None or overlap > best_overlap:
                best_gi = gi
                best_overlap = overlap
        if best_gi is None:
            result.append(MatchedDetection(det, False, None))
        else:
            matched.add(best_gi)
            result.append(MatchedDetection(det, True, best_gi))
    return result


def average_precision(match: list[MatchedDetection], num_gt: int) -> float:
    """Area under the precision-envelope recall curve.

    `match` must be in rank order (as produced by match_class). Classes with
    no detections score 0; num_gt == 0 classes are excluded upstream.
    """
    if num_gt < 0:
        raise ValidationError(f"num_gt must be >= 0, got {num_gt}")
    if not match or num_gt == 0:
        return 0.0
    tp = np.array([m.is_true_positive for m in match], dtype=np.float64)
    fp = 1.0 - tp
    tp = np.cumsum(tp)
    fp = np.cumsum(fp)
    recall = tp / num_gt
    precision = tp / (tp + fp)
    mrec = np.concatenate(([0.0], recall, [recall[-1]]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    changed = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))


@dataclass(frozen=True)
class ClassAp:
    hoi_id: int
    ap: float
    num_gt: int
    num_detections: int


@dataclass
class EvalReport:
    full: float
    rare: float
    non_rare: float
    splits: dict[str, dict[str, float]] = field(default_factory=dict)
    per_class: list[ClassAp] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "full": self.full,
            "rare": self.rare,
            "non_rare": self.non_rare,
            "splits": {name: dict(vals) for name, vals in self.splits.items()},
            "per_class": [
                {"hoi_id": c.hoi_id, "ap": c.ap, "num_gt": c.num_gt}
                for c in self.per_class
            ],
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "EvalReport":
        try:
            return cls(
                full=float(raw["full"]),
                rare=float(raw["rare"]),
                non_rare=float(raw["non_rare"]),
                splits={str(k): {kk: float(vv) for kk, vv in v.items()}
                        for k, v in raw.get("splits", {}).items()},
                per_class=[ClassAp(int(c["hoi_id"]), float(c["ap"]),
                                   int(c["num_gt"]), int(c.get("num_detections", 0)))
                           for c in raw.get("per_class", [])],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed report JSON: {exc}") from exc


def _mean_pct(aps: dict[int, float], ids) -> float:
    vals = [aps[h] for h in ids if h in aps]
    if not vals:
        return 0.0
    return 100.0 * float(np.mean(vals))


def evaluate(detections: list[HoiDetection],
             annotations,
             taxonomy: HoiTaxonomy,
             splits: list[SplitDefinition] = (),
             iou_threshold: float = 0.5) -> EvalReport:
    """Full protocol: per-class AP over classes with ground truth, plus
    rare/non-rare and per-split unseen/seen aggregates.

    `annotations` is the loader's list of (ImageRecord, instances).
    """
    image_ids = {img.id for img, _ in annotations}
    gt_by_class: dict[int, list[GroundTruthInstance]] = {}
    for _, instances in annotations:
        for inst in instances:
            gt_by_class.setdefault(inst.hoi_id, []).append(inst)
    det_by_class: dict[int, list[HoiDetection]] = {}
    for det in detections:
        if det.image_id not in image_ids:
            raise ValidationError(
                f"detection references unknown image {det.image_id!r}")
        if det.hoi_id not in taxonomy:
            raise ValidationError(f"detection has unknown hoi_id {det.hoi_id}")
        det_by_class.setdefault(det.hoi_id, []).append(det)

    aps: dict[int, float] = {}
    per_class = []
    for hoi_id in sorted(gt_by_class):
        gts = gt_by_class[hoi_id]
        dets = det_by_class.get(hoi_id, [])
        match = match_class(dets, gts, iou_threshold)
        ap = average_precision(match, len(gts))
        aps[hoi_id] = ap
        per_class.append(ClassAp(hoi_id, ap, len(gts), len(dets)))

    measured = set(aps)
    report = EvalReport(
        full=_mean_pct(aps, measured),
        rare=_mean_pct(aps, taxonomy.rare_ids),
        non_rare=_mean_pct(aps, taxonomy.non_rare_ids),
        per_class=per_class,
    )
    for split in splits:
        report.splits[split.name] = {
            "full": report.full,
            "unseen": _mean_pct(aps, split.unseen_hoi_ids),
            "seen": _mean_pct(aps, split.seen_hoi_ids),
        }
    return report


# ---------------------------------------------------------------------------
# Rendering

def render_table(report: EvalReport) -> str:
    """Aligned text table: a default row plus one row per split."""
    lines = []
    lines.append(f"{'setting':<22}{'full':>9}{'rare':>9}{'non-rare':>10}")
    lines.append(f"{'default':<22}{report.full:>9.2f}{report.rare:>9.2f}"
                 f"{report.non_rare:>10.2f}")
    split_names = [n for n in report.splits if n != "default"]
    if split_names:
        lines.append("")
        lines.append(f"{'split':<22}{'full':>9}{'unseen':>9}{'seen':>10}")
        for name in split_names:
            vals = report.splits[name]
            lines.append(f"{name:<22}{vals['full']:>9.2f}{vals['unseen']:>9.2f}"
                         f"{vals['seen']:>10.2f}")
    return "\n".join(lines) + "\n"


def compare_reports(reports: list[EvalReport], labels: list[str]) -> str:
    """Side-by-side metric table with deltas of each report vs. the first."""
    if len(reports) < 2:
        raise ValidationError("compare needs at least two reports")
    if len(labels) != len(reports):
        raise ValidationError("one label per report required")
    split_names = list(reports[0].splits)
    for rep in reports[1:]:
        if list(rep.splits) != split_names:
            raise ValidationError(
                "reports are structurally incompatible (different splits)")

    rows: list[tuple[str, list[float]]] = [
        ("full", [r.full for r in reports]),
        ("rare", [r.rare for r in reports]),
        ("non-rare", [r.non_rare for r in reports]),
    ]
    for name in split_names:
        for col in ("unseen", "seen"):
            rows.append((f"{name}/{col}",
                         [r.splits[name][col] for r in reports]))

    width = max(12, *(len(lbl) + 7 for lbl in labels))
    header = f"{'metric':<30}{labels[0]:>{width}}"
    for lbl in labels[1:]:
        header += f"{lbl:>{width}}{'delta':>{width}}"
    lines = [header]
    for metric, vals in rows:
        line = f"{metric:<30}{vals[0]:>{width}.2f}"
        for v in vals[1:]:
            line += f"{v:>{width}.2f}{v - vals[0]:>{width}.2f}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def write_report_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_json_dict(), f, indent=1)
        f.write("\n")


def read_report_json(path) -> EvalReport:
    with open(path, encoding="utf-8") as f:
        return EvalReport.from_json_dict(json.load(f))
