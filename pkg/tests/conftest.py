import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hoieval.dataset import (BoundingBox, GroundTruthInstance, HoiCategory,
                             HoiTaxonomy, ImageRecord)


def make_taxonomy(rows):
    """rows: (hoi_id, object_id, verb_id, object_name, verb_name, rare)."""
    return HoiTaxonomy([HoiCategory(*row) for row in rows])


@pytest.fixture
def toy_taxonomy():
    """Two objects (horse, person) and three verbs; person enables gt-r
    human/object crossovers."""
    return make_taxonomy([
        (1, 1, 1, "horse", "ride", False),
        (2, 1, 2, "horse", "walk", True),
        (3, 1, 3, "horse", "no_interaction", False),
        (4, 2, 2, "person", "walk", False),
        (5, 2, 3, "person", "no_interaction", True),
    ])


def box(x1, y1, x2, y2):
    return BoundingBox(float(x1), float(y1), float(x2), float(y2))


def gt(image_id, human, obj, hoi_id):
    return GroundTruthInstance(image_id, human, obj, hoi_id)


def random_box(rng, lo=0.0, hi=100.0, min_side=1.0):
    x1 = rng.uniform(lo, hi)
    y1 = rng.uniform(lo, hi)
    return BoundingBox(x1, y1,
                       x1 + rng.uniform(min_side, hi - lo),
                       y1 + rng.uniform(min_side, hi - lo))


def jitter_box(rng, b, scale):
    """Shift/stretch a box; small scales keep IoU near 1."""
    w = b.x2 - b.x1
    h = b.y2 - b.y1
    dx, dy = rng.uniform(-scale, scale, 2) * w, rng.uniform(-scale, scale, 2) * h
    x1 = max(0.0, b.x1 + dx[0])
    y1 = max(0.0, b.y1 + dy[0])
    x2 = max(x1 + 0.5, b.x2 + dx[1])
    y2 = max(y1 + 0.5, b.y2 + dy[1])
    return BoundingBox(x1, y1, x2, y2)


def write_annotations(path, images, instances):
    payload = {
        "images": [{"id": i.id, "file_name": i.file_name,
                    "width": i.width, "height": i.height} for i in images],
        "annotations": [{"image_id": g.image_id,
                         "human_box": g.human_box.to_list(),
                         "object_box": g.object_box.to_list(),
                         "hoi_id": g.hoi_id} for g in instances],
    }
    Path(path).write_text(json.dumps(payload))
    return path


def image_record(image_id, width=640, height=480):
    return ImageRecord(image_id, f"{image_id}.jpg", width, height)


def unit_vectors(rng, count, dim):
    vecs = rng.standard_normal((count, dim))
    return vecs / np.linalg.norm(vecs, axis=1, keepdims=True)


def random_eval_fixture(rng, hoi_ids=(1, 2, 4), max_images=5,
                        max_detections=10, max_gt_per_class=5):
    """Small random (annotations, detections) instance for evaluator checks.

    Detections mix jittered copies of GT boxes (near-matches) with unrelated
    boxes; scores are continuous so rank ties have probability zero.
    """
    from hoieval.scoring import HoiDetection

    n_images = int(rng.integers(1, max_images + 1))
    images = [image_record(f"im{i}") for i in range(n_images)]
    instances = []
    per_class = {h: 0 for h in hoi_ids}
    for _ in range(int(rng.integers(1, 2 * n_images + 2))):
        hoi = int(rng.choice(hoi_ids))
        if per_class[hoi] >= max_gt_per_class:
            continue
        per_class[hoi] += 1
        image_id = f"im{int(rng.integers(n_images))}"
        instances.append(gt(image_id, random_box(rng, hi=40),
                            random_box(rng, hi=40), hoi))
    detections = []
    for _ in range(int(rng.integers(0, max_detections + 1))):
        if instances and rng.random() < 0.75:
            src = instances[int(rng.integers(len(instances)))]
            hoi = src.hoi_id if rng.random() < 0.8 else int(rng.choice(hoi_ids))
            detections.append(HoiDetection(
                src.image_id, jitter_box(rng, src.human_box, 0.3),
                jitter_box(rng, src.object_box, 0.3), hoi,
                float(rng.random())))
        else:
            image_id = f"im{int(rng.integers(n_images))}"
            detections.append(HoiDetection(
                image_id, random_box(rng, hi=40), random_box(rng, hi=40),
                int(rng.choice(hoi_ids)), float(rng.random())))
    annotations = [(img, [i for i in instances if i.image_id == img.id])
                   for img in images]
    return annotations, detections
