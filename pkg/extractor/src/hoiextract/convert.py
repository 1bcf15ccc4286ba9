"""Convert the official benchmark annotation archive (anno_bbox.mat) to the
pipeline's canonical JSON.

The official format stores per-image struct arrays with 1-based inclusive
pixel boxes in (x1, x2, y1, y2) field order and links human/object boxes via
`connection` index pairs; `invis` interactions carry no boxes. Boxes convert
to continuous [x1-1, y1-1, x2, y2] so a one-pixel box keeps positive area.

Rare flags are computed from the train split: classes with fewer than 10
annotated instances are rare.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InputError

RARE_MAX_TRAIN_INSTANCES = 10


def _as_list(value) -> list:
    """Undo scipy's squeeze: scalar struct -> [struct], arrays -> flat list."""
    if value is None:
        return []
    if isinstance(value, np.ndarray):
        return [] if value.size == 0 else list(np.ravel(value))
    return [value]


def _scalar(value):
    if isinstance(value, np.ndarray):
        if value.size != 1:
            raise InputError(f"expected scalar, got shape {value.shape}")
        return value.reshape(-1)[0]
    return value


def _connection_rows(conn) -> list[tuple[int, int]]:
    arr = np.asarray(conn)
    if arr.size == 0:
        return []
    arr = arr.reshape(-1, 2) if arr.ndim == 1 else arr
    return [(int(r[0]), int(r[1])) for r in arr]


def _get(struct, name):
    try:
        return getattr(struct, name)
    except AttributeError as exc:
        raise InputError(f"official record missing field {name!r}") from exc


def _box_from_struct(b) -> list[float]:
    x1, x2 = float(_scalar(_get(b, "x1"))), float(_scalar(_get(b, "x2")))
    y1, y2 = float(_scalar(_get(b, "y1"))), float(_scalar(_get(b, "y2")))
    return [x1 - 1.0, y1 - 1.0, x2, y2]


def load_official(path):
    """Returns (actions, {"train": entries, "test": entries})."""
    from scipy.io import loadmat

    try:
        mat = loadmat(path, squeeze_me=True, struct_as_record=False)
    except (OSError, ValueError, NotImplementedError) as exc:
        raise InputError(f"{path}: cannot read MAT file: {exc}") from exc
    missing = [k for k in ("bbox_train", "bbox_test", "list_action")
               if k not in mat]
    if missing:
        raise InputError(f"{path}: missing variables {missing}")
    return (_as_list(mat["list_action"]),
            {"train": _as_list(mat["bbox_train"]),
             "test": _as_list(mat["bbox_test"])})


def _iter_instances(entry, index: int):
    """(hoi_id, human_box, object_box) triples for one image entry."""
    try:
        for hoi in _as_list(_get(entry, "hoi")):
            if int(_scalar(_get(hoi, "invis"))):
                continue
            hoi_id = int(_scalar(_get(hoi, "id")))
            humans = [_box_from_struct(b)
                      for b in _as_list(_get(hoi, "bboxhuman"))]
            objects = [_box_from_struct(b)
                       for b in _as_list(_get(hoi, "bboxobject"))]
            for h_idx, o_idx in _connection_rows(_get(hoi, "connection")):
                yield hoi_id, humans[h_idx - 1], objects[o_idx - 1]
    except (IndexError, TypeError, ValueError) as exc:
        raise InputError(f"malformed official record #{index}: {exc}") from exc


def convert_annotations(entries) -> dict:
    """Canonical annotation dict for one split's image entries."""
    images, annotations = [], []
    for index, entry in enumerate(entries):
        filename = str(_scalar(_get(entry, "filename")))
        size = _get(entry, "size")
        image_id = Path(filename).stem
        images.append({
            "id": image_id,
            "file_name": filename,
            "width": int(_scalar(_get(size, "width"))),
            "height": int(_scalar(_get(size, "height"))),
        })
        for hoi_id, human, obj in _iter_instances(entry, index):
            annotations.append({"image_id": image_id, "human_box": human,
                                "object_box": obj, "hoi_id": hoi_id})
    return {"images": images, "annotations": annotations}


def build_taxonomy(actions, train_entries) -> list[dict]:
    """Canonical taxonomy records with rare flags from train-split counts."""
    counts = {}
    for index, entry in enumerate(train_entries):
        for hoi_id, _, _ in _iter_instances(entry, index):
            counts[hoi_id] = counts.get(hoi_id, 0) + 1

    records = []
    object_ids: dict[str, int] = {}
    verb_names = []
    for pos, action in enumerate(actions):
        try:
            nname = str(_scalar(_get(action, "nname")))
            vname = str(_scalar(_get(action, "vname")))
        except InputError as exc:
            raise InputError(f"list_action record #{pos}: {exc}") from exc
        object_ids.setdefault(nname, len(object_ids) + 1)
        verb_names.append(vname)
        records.append({"hoi_id": pos + 1, "object_name": nname,
                        "verb_name": vname})
    verb_rank = {v: i + 1 for i, v in enumerate(sorted(set(verb_names)))}
    for rec in records:
        rec["object_id"] = object_ids[rec["object_name"]]
        rec["verb_id"] = verb_rank[rec["verb_name"]]
        rec["rare"] = counts.get(rec["hoi_id"], 0) < RARE_MAX_TRAIN_INSTANCES
    return [{k: r[k] for k in ("hoi_id", "object_id", "verb_id",
                               "object_name", "verb_name", "rare")}
            for r in records]


def convert_official(mat_path, out_annotations, out_taxonomy=None,
                     split: str = "test") -> tuple[int, int]:
    """Full conversion; returns (image count, instance count)."""
    if split not in ("train", "test"):
        raise InputError(f"split must be train or test, got {split!r}")
    actions, entries = load_official(mat_path)
    payload = convert_annotations(entries[split])
    Path(out_annotations).write_text(json.dumps(payload, indent=1))
    if out_taxonomy is not None:
        taxonomy = build_taxonomy(actions, entries["train"])
        Path(out_taxonomy).write_text(json.dumps(taxonomy, indent=1))
    return len(payload["images"]), len(payload["annotations"])
