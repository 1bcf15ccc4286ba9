"""Candidate (human, object) pair generation for the three input regimes:
annotated pairs (gt), exhaustive recombination of annotated boxes (gt-r),
and detector outputs (detector).

Pair generation is pure per image; images can be processed independently.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .dataset import BoundingBox, GroundTruthInstance, HoiTaxonomy
from .errors import FormatError, ValidationError


@dataclass(frozen=True)
class CandidatePair:
    image_id: str
    pair_index: int
    human_box: BoundingBox
    object_box: BoundingBox
    object_id: int
    human_score: float
    object_score: float
    union_box: BoundingBox

    def to_json_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "pair_index": self.pair_index,
            "human_box": self.human_box.to_list(),
            "object_box": self.object_box.to_list(),
            "object_id": self.object_id,
            "human_score": self.human_score,
            "object_score": self.object_score,
            "union_box": self.union_box.to_list(),
        }


@dataclass(frozen=True)
class DetectionBox:
    image_id: str
    box: BoundingBox
    category_id: int
    score: float

    def __post_init__(self):
        if not 1 <= self.category_id <= 80:
            raise ValidationError(
                f"detection category_id {self.category_id} outside [1, 80]")
        if not 0 < self.score <= 1:
            raise ValidationError(f"detection score {self.score} outside (0, 1]")


@dataclass(frozen=True)
class PairingParams:
    score_threshold: float = 0.25
    max_pairs_per_image: int = 100


def union_box(a: BoundingBox, b: BoundingBox) -> BoundingBox:
    """Smallest box containing both inputs (componentwise min/max)."""
    return BoundingBox(min(a.x1, b.x1), min(a.y1, b.y1),
                       max(a.x2, b.x2), max(a.y2, b.y2))


def _single_image_id(items, what: str) -> None:
    ids = {it.image_id for it in items}
    if len(ids) > 1:
        raise ValidationError(f"{what} span multiple images: {sorted(ids)}")


def _build_pair(image_id, index, human, obj, object_id,
                human_score=1.0, object_score=1.0) -> CandidatePair:
    return CandidatePair(
        image_id=image_id, pair_index=index,
        human_box=human, object_box=obj, object_id=object_id,
        human_score=human_score, object_score=object_score,
        union_box=union_box(human, obj),
    )


def make_gt_pairs(instances: list[GroundTruthInstance],
                  taxonomy: HoiTaxonomy) -> list[CandidatePair]:
    """One pair per distinct (human box, object box, object category).

    Instances that differ only in verb collapse onto a single pair; scoring
    produces the full verb distribution for it anyway.
    """
    _single_image_id(instances, "gt instances")
    pairs = []
    seen = set()
    for inst in instances:
        object_id = taxonomy.category(inst.hoi_id).object_id
        key = (inst.human_box.as_tuple(), inst.object_box.as_tuple(), object_id)
        if key in seen:
            continue
        seen.add(key)
        pairs.append(_build_pair(inst.image_id, len(pairs),
                                 inst.human_box, inst.object_box, object_id))
    return pairs


def make_recombined_pairs(instances: list[GroundTruthInstance],
                          taxonomy: HoiTaxonomy) -> list[CandidatePair]:
    """Cross every annotated human box with every annotated box.

    Humans are all annotated human boxes plus any annotated object box whose
    category is person; objects are all annotated boxes with their category.
    Pairs whose two boxes are coordinate-identical are dropped (a box cannot
    interact with itself); person-person pairs over distinct boxes remain.
    """
    _single_image_id(instances, "gt instances")
    person = taxonomy.person_object_id
    humans: list[BoundingBox] = []
    human_keys = set()
    boxes: list[tuple[BoundingBox, int]] = []
    box_keys = set()

    def add_human(box: BoundingBox):
        if box.as_tuple() not in human_keys:
            human_keys.add(box.as_tuple())
            humans.append(box)

    def add_box(box: BoundingBox, object_id: int):
        key = (box.as_tuple(), object_id)
        if key not in box_keys:
            box_keys.add(key)
            boxes.append((box, object_id))

    for inst in instances:
        object_id = taxonomy.category(inst.hoi_id).object_id
        add_human(inst.human_box)
        if person is not None:
            add_box(inst.human_box, person)
        add_box(inst.object_box, object_id)
        if object_id == person:
            add_human(inst.object_box)

    pairs = []
    image_id = instances[0].image_id if instances else ""
    for human in humans:
        for box, object_id in boxes:
            if human.as_tuple() == box.as_tuple():
                continue
            pairs.append(_build_pair(image_id, len(pairs), human, box, object_id))
    return pairs


def make_detector_pairs(detections: list[DetectionBox],
                        taxonomy: HoiTaxonomy,
                        params: PairingParams) -> list[CandidatePair]:
    """Cross detected persons with all detections above the score threshold.

    When the cross product exceeds `max_pairs_per_image`, the pairs with the
    largest human_score * object_score products are kept (ties broken by
    generation order); the kept pairs are re-indexed in generation order.
    """
    _single_image_id(detections, "detections")
    person = taxonomy.person_object_id
    kept = [d for d in detections if d.score >= params.score_threshold]
    humans = [d for d in kept if d.category_id == person]
    raw: list[tuple[DetectionBox, DetectionBox]] = []
    for h in humans:
        for o in kept:
            if h.box.as_tuple() == o.box.as_tuple():
                continue
            raw.append((h, o))
    if len(raw) > params.max_pairs_per_image:
        order = sorted(range(len(raw)),
                       key=lambda i: (-raw[i][0].score * raw[i][1].score, i))
        keep = sorted(order[:params.max_pairs_per_image])
        raw = [raw[i] for i in keep]
    pairs = []
    for index, (h, o) in enumerate(raw):
        pairs.append(_build_pair(h.image_id, index, h.box, o.box, o.category_id,
                                 human_score=h.score, object_score=o.score))
    return pairs


# ---------------------------------------------------------------------------
# JSON Lines IO

def write_pairs_jsonl(pairs, path) -> int:
    """Append-free deterministic dump; returns the number of lines written."""
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for pair in pairs:
            f.write(json.dumps(pair.to_json_dict()) + "\n")
            n += 1
    return n


def read_pairs_jsonl(path) -> list[CandidatePair]:
    pairs = []
    for lineno, rec in _iter_jsonl(path):
        try:
            pair = CandidatePair(
                image_id=str(rec["image_id"]),
                pair_index=int(rec["pair_index"]),
                human_box=BoundingBox.from_list(rec["human_box"]),
                object_box=BoundingBox.from_list(rec["object_box"]),
                object_id=int(rec["object_id"]),
                human_score=float(rec["human_score"]),
                object_score=float(rec["object_score"]),
                union_box=BoundingBox.from_list(rec["union_box"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: bad pair record") from exc
        if not pair.union_box.contains(pair.human_box) or \
                not pair.union_box.contains(pair.object_box):
            raise ValidationError(
                f"{path}:{lineno}: union_box does not contain both boxes")
        pairs.append(pair)
    return pairs


def read_detections_jsonl(path) -> list[DetectionBox]:
    """Read a detector dump (one detection per line)."""
    out = []
    for lineno, rec in _iter_jsonl(path):
        try:
            out.append(DetectionBox(
                image_id=str(rec["image_id"]),
                box=BoundingBox.from_list(rec["box"]),
                category_id=int(rec["category_id"]),
                score=float(rec["score"]),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: bad detection record") from exc
    return out


def _iter_jsonl(path):
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: not valid JSON") from exc
