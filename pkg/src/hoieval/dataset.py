"""HICO-DET style test-set model: boxes, the 600-class HOI taxonomy,
ground-truth annotations, and zero-shot split definitions.

All structures are plain immutable records loaded from canonical JSON files
(see the repo README for the file schemas). Loaded objects are safe to share
across threads.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import FormatError, ValidationError

SPLIT_NAMES = (
    "default",
    "unseen_combination",
    "rare_first",
    "non_rare_first",
    "unseen_object",
    "unseen_verb",
)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle, origin top-left, strictly positive area."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        vals = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"non-finite box coordinates {vals}")
        if min(vals) < 0:
            raise ValidationError(f"negative box coordinates {vals}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValidationError(f"degenerate box {vals} (needs x1<x2 and y1<y2)")

    @classmethod
    def from_list(cls, coords) -> "BoundingBox":
        if len(coords) != 4:
            raise FormatError(f"box needs 4 coordinates, got {coords!r}")
        return cls(*(float(v) for v in coords))

    def to_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def contains(self, other: "BoundingBox") -> bool:
        return (self.x1 <= other.x1 and self.y1 <= other.y1
                and self.x2 >= other.x2 and self.y2 >= other.y2)


@dataclass(frozen=True)
class HoiCategory:
    hoi_id: int
    object_id: int
    verb_id: int
    object_name: str
    verb_name: str
    rare: bool


class HoiTaxonomy:
    """The (object, verb) <-> HOI id registry with rare flags.

    Categories are kept in file order; `verbs_for_object` maps each object id
    to its verb ids sorted ascending.
    """

    def __init__(self, categories: list[HoiCategory]):
        if not categories:
            raise ValidationError("taxonomy has no categories")
        self.categories = list(categories)
        self._by_hoi: dict[int, HoiCategory] = {}
        pair_to_hoi: dict[tuple[int, int], int] = {}
        for cat in self.categories:
            if not 1 <= cat.hoi_id <= 600:
                raise ValidationError(f"hoi_id {cat.hoi_id} outside [1, 600]")
            if not 1 <= cat.object_id <= 80:
                raise ValidationError(
                    f"object_id {cat.object_id} outside [1, 80] (hoi {cat.hoi_id})")
            if not 1 <= cat.verb_id <= 117:
                raise ValidationError(
                    f"verb_id {cat.verb_id} outside [1, 117] (hoi {cat.hoi_id})")
            if cat.hoi_id in self._by_hoi:
                raise ValidationError(f"duplicate hoi_id {cat.hoi_id}")
            key = (cat.object_id, cat.verb_id)
            if key in pair_to_hoi:
                raise ValidationError(
                    f"duplicate (object_id, verb_id) pair {key}: "
                    f"hois {pair_to_hoi[key]} and {cat.hoi_id}")
            self._by_hoi[cat.hoi_id] = cat
            pair_to_hoi[key] = cat.hoi_id
        self.verbs_for_object: dict[int, list[int]] = {}
        self._hois_for_object: dict[int, list[int]] = {}
        for cat in sorted(self.categories, key=lambda c: c.verb_id):
            self.verbs_for_object.setdefault(cat.object_id, []).append(cat.verb_id)
        for cat in sorted(self.categories, key=lambda c: c.hoi_id):
            self._hois_for_object.setdefault(cat.object_id, []).append(cat.hoi_id)
        names = {cat.object_id: cat.object_name for cat in self.categories}
        for cat in self.categories:
            if names[cat.object_id] != cat.object_name:
                raise ValidationError(
                    f"object_id {cat.object_id} carries two names: "
                    f"{names[cat.object_id]!r} and {cat.object_name!r}")
        self._person_object_id = next(
            (oid for oid, name in names.items() if name == "person"), None)

    def __len__(self) -> int:
        return len(self.categories)

    def __contains__(self, hoi_id: int) -> bool:
        return hoi_id in self._by_hoi

    def category(self, hoi_id: int) -> HoiCategory:
        try:
            return self._by_hoi[hoi_id]
        except KeyError:
            raise ValidationError(f"unknown hoi_id {hoi_id}") from None

    def hois_for_object(self, object_id: int) -> list[int]:
        """Valid HOI ids for an object category, ascending."""
        try:
            return self._hois_for_object[object_id]
        except KeyError:
            raise ValidationError(f"unknown object_id {object_id}") from None

    @property
    def object_ids(self) -> list[int]:
        return sorted(self._hois_for_object)

    @property
    def person_object_id(self) -> int | None:
        return self._person_object_id

    @property
    def rare_ids(self) -> frozenset[int]:
        return frozenset(c.hoi_id for c in self.categories if c.rare)

    @property
    def non_rare_ids(self) -> frozenset[int]:
        return frozenset(c.hoi_id for c in self.categories if not c.rare)

    @property
    def hoi_ids(self) -> frozenset[int]:
        return frozenset(self._by_hoi)


@dataclass(frozen=True)
class ImageRecord:
    id: str
    file_name: str
    width: int
    height: int


@dataclass(frozen=True)
class GroundTruthInstance:
    image_id: str
    human_box: BoundingBox
    object_box: BoundingBox
    hoi_id: int


@dataclass(frozen=True)
class SplitDefinition:
    """Partition of the taxonomy's HOI ids into unseen and seen sets.

    For name "default" the "unseen" side is the rare set and "seen" the
    non-rare set; it drives the rare/non-rare report columns.
    """

    name: str
    unseen_hoi_ids: frozenset[int] = field(default_factory=frozenset)
    seen_hoi_ids: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.unseen_hoi_ids & self.seen_hoi_ids:
            raise ValidationError(
                f"split {self.name!r}: unseen and seen sets overlap")


def _read_json(path) -> object:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc


def load_taxonomy(path) -> HoiTaxonomy:
    """Load a taxonomy JSON file (top-level array of category objects)."""
    raw = _read_json(path)
    if not isinstance(raw, list):
        raise FormatError(f"{path}: taxonomy must be a JSON array")
    categories = []
    for i, rec in enumerate(raw):
        try:
            categories.append(HoiCategory(
                hoi_id=int(rec["hoi_id"]),
                object_id=int(rec["object_id"]),
                verb_id=int(rec["verb_id"]),
                object_name=str(rec["object_name"]),
                verb_name=str(rec["verb_name"]),
                rare=bool(rec["rare"]),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: bad taxonomy record #{i}: {rec!r}") from exc
    return HoiTaxonomy(categories)


def load_annotations(path, taxonomy: HoiTaxonomy):
    """Load a canonical annotation JSON file.

    Returns a list of (ImageRecord, [GroundTruthInstance...]) preserving the
    file's image order. Every instance is validated against the taxonomy and
    the box invariants.
    """
    raw = _read_json(path)
    if not isinstance(raw, dict) or "images" not in raw or "annotations" not in raw:
        raise FormatError(f"{path}: annotation file needs 'images' and 'annotations'")
    images: list[ImageRecord] = []
    by_id: dict[str, list[GroundTruthInstance]] = {}
    for i, rec in enumerate(raw["images"]):
        try:
            img = ImageRecord(id=str(rec["id"]), file_name=str(rec["file_name"]),
                              width=int(rec["width"]), height=int(rec["height"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: bad image record #{i}: {rec!r}") from exc
        if img.id in by_id:
            raise ValidationError(f"{path}: duplicate image id {img.id!r}")
        images.append(img)
        by_id[img.id] = []
    for i, rec in enumerate(raw["annotations"]):
        try:
            image_id = str(rec["image_id"])
            human = rec["human_box"]
            obj = rec["object_box"]
            hoi_id = int(rec["hoi_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: bad annotation record #{i}: {rec!r}") from exc
        if image_id not in by_id:
            raise ValidationError(
                f"{path}: annotation #{i} references unknown image {image_id!r}")
        if hoi_id not in taxonomy:
            raise ValidationError(
                f"{path}: annotation #{i} (image {image_id}) has unknown "
                f"hoi_id {hoi_id}")
        try:
            inst = GroundTruthInstance(
                image_id=image_id,
                human_box=BoundingBox.from_list(human),
                object_box=BoundingBox.from_list(obj),
                hoi_id=hoi_id,
            )
        except ValidationError as exc:
            raise ValidationError(f"{path}: image {image_id}: {exc}") from exc
        by_id[image_id].append(inst)
    return [(img, by_id[img.id]) for img in images]


def default_split(taxonomy: HoiTaxonomy) -> SplitDefinition:
    """The rare/non-rare pseudo-split implied by the taxonomy's rare flags."""
    return SplitDefinition("default", taxonomy.rare_ids, taxonomy.non_rare_ids)


def load_split(name: str, path, taxonomy: HoiTaxonomy) -> SplitDefinition:
    """Load a split JSON file and expand/validate it against the taxonomy.

    Files either list `unseen_hoi_ids` directly, or `unseen_object_ids` /
    `unseen_verb_ids` for the object/verb hold-out splits, which are expanded
    to all matching HOI ids.
    """
    if name not in SPLIT_NAMES:
        raise ValidationError(f"unknown split name {name!r} (one of {SPLIT_NAMES})")
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: split file must be a JSON object")
    file_name = raw.get("name")
    if file_name is not None and file_name != name:
        raise ValidationError(
            f"{path}: split file is named {file_name!r}, expected {name!r}")

    if "unseen_object_ids" in raw:
        held = [int(v) for v in raw["unseen_object_ids"]]
        bad = [o for o in held if o not in set(taxonomy.object_ids)]
        if bad:
            raise ValidationError(f"{path}: unknown object ids {bad}")
        unseen = {c.hoi_id for c in taxonomy.categories if c.object_id in set(held)}
    elif "unseen_verb_ids" in raw:
        held = [int(v) for v in raw["unseen_verb_ids"]]
        known = {c.verb_id for c in taxonomy.categories}
        bad = [v for v in held if v not in known]
        if bad:
            raise ValidationError(f"{path}: unknown verb ids {bad}")
        unseen = {c.hoi_id for c in taxonomy.categories if c.verb_id in set(held)}
    elif "unseen_hoi_ids" in raw:
        unseen = {int(v) for v in raw["unseen_hoi_ids"]}
        bad = sorted(v for v in unseen if not 1 <= v <= 600)
        if bad:
            raise ValidationError(f"{path}: unseen hoi ids outside [1, 600]: {bad}")
        missing = sorted(unseen - taxonomy.hoi_ids)
        if missing:
            raise ValidationError(
                f"{path}: unseen hoi ids not in the taxonomy: {missing}")
        if name == "unseen_object":
            _check_block_exact(path, unseen, taxonomy, by="object_id")
        if name == "unseen_verb":
            _check_block_exact(path, unseen, taxonomy, by="verb_id")
    else:
        raise FormatError(
            f"{path}: split file needs unseen_hoi_ids, unseen_object_ids, "
            f"or unseen_verb_ids")

    seen = taxonomy.hoi_ids - unseen
    split = SplitDefinition(name, frozenset(unseen), frozenset(seen))
    if name == "default" and split.unseen_hoi_ids != taxonomy.rare_ids:
        raise ValidationError(
            f"{path}: default split must hold out exactly the rare classes")
    return split


def _check_block_exact(path, unseen: set[int], taxonomy: HoiTaxonomy, by: str):
    """The unseen set must be a union of whole object (or verb) blocks."""
    held = {getattr(taxonomy.category(h), by) for h in unseen}
    expanded = {c.hoi_id for c in taxonomy.categories if getattr(c, by) in held}
    if expanded != unseen:
        raise ValidationError(
            f"{path}: unseen set must cover every HOI of each held-out "
            f"{by.removesuffix('_id')}")


def bundled_data_dir() -> Path:
    """Directory holding the shipped taxonomy and split defaults."""
    return Path(resources.files("hoieval") / "data")


def bundled_taxonomy_path() -> Path:
    return bundled_data_dir() / "hico_taxonomy.json"


def bundled_splits_dir() -> Path:
    return bundled_data_dir() / "splits"
