import numpy as np
import pytest

from hoieval.dataset import BoundingBox
from hoieval.errors import ValidationError
from hoieval.pairing import (CandidatePair, DetectionBox, PairingParams,
                             make_detector_pairs, make_gt_pairs,
                             make_recombined_pairs, read_pairs_jsonl,
                             union_box, write_pairs_jsonl)

from conftest import box, gt, random_box


def test_union_box_identical():
    b = box(0, 0, 10, 10)
    assert union_box(b, b) == b


def test_union_box_componentwise():
    assert union_box(box(0, 0, 4, 4), box(2, 2, 8, 8)) == box(0, 0, 8, 8)


def test_union_box_contains_and_commutes():
    rng = np.random.default_rng(7)
    for _ in range(100):
        a, b = random_box(rng), random_box(rng)
        u = union_box(a, b)
        assert u.contains(a) and u.contains(b)
        assert union_box(b, a) == u


# ---------------------------------------------------------------------------
# gt pairs

def test_single_instance_single_pair(toy_taxonomy):
    pairs = make_gt_pairs([gt("im", box(0, 0, 5, 5), box(4, 4, 9, 9), 1)],
                          toy_taxonomy)
    assert len(pairs) == 1
    p = pairs[0]
    assert p.object_id == 1  # horse
    assert p.pair_index == 0
    assert p.human_score == p.object_score == 1.0
    assert p.union_box == box(0, 0, 9, 9)


def test_multiple_verbs_collapse(toy_taxonomy):
    h, o = box(0, 0, 5, 5), box(4, 4, 9, 9)
    pairs = make_gt_pairs([gt("im", h, o, 1), gt("im", h, o, 2)], toy_taxonomy)
    assert len(pairs) == 1


def test_gt_pairs_dedup_count(toy_taxonomy):
    # 4 instances over 3 distinct (human, object) pairs -> 3 pairs
    h1, h2 = box(0, 0, 5, 5), box(10, 10, 15, 15)
    o1, o2 = box(4, 4, 9, 9), box(20, 20, 25, 25)
    instances = [
        gt("im", h1, o1, 1),
        gt("im", h1, o1, 2),  # same boxes, different verb
        gt("im", h1, o2, 1),
        gt("im", h2, o1, 3),
    ]
    pairs = make_gt_pairs(instances, toy_taxonomy)
    assert len(pairs) == 3
    assert [p.pair_index for p in pairs] == [0, 1, 2]


def test_mixed_images_rejected(toy_taxonomy):
    with pytest.raises(ValidationError):
        make_gt_pairs([gt("a", box(0, 0, 1, 1), box(0, 0, 2, 2), 1),
                       gt("b", box(0, 0, 1, 1), box(0, 0, 2, 2), 1)],
                      toy_taxonomy)


# ---------------------------------------------------------------------------
# recombined pairs

def test_recombine_one_human_one_horse(toy_taxonomy):
    pairs = make_recombined_pairs(
        [gt("im", box(0, 0, 5, 5), box(4, 4, 9, 9), 1)], toy_taxonomy)
    # human box enters the object pool as person; self-pair excluded
    assert len(pairs) == 1
    assert pairs[0].object_id == 1


def test_recombine_two_humans_one_horse(toy_taxonomy):
    h1, h2, horse = box(0, 0, 5, 5), box(10, 10, 15, 15), box(4, 4, 9, 9)
    instances = [gt("im", h1, horse, 1), gt("im", h2, horse, 1)]
    pairs = make_recombined_pairs(instances, toy_taxonomy)
    # H = {h1, h2}; B = {h1:person, h2:person, horse:horse} -> 2*3 - 2 = 4
    assert len(pairs) == 4
    combos = {(p.human_box.as_tuple(), p.object_box.as_tuple(), p.object_id)
              for p in pairs}
    assert (h1.as_tuple(), h2.as_tuple(), 2) in combos  # human -> human
    assert (h2.as_tuple(), h1.as_tuple(), 2) in combos
    assert (h1.as_tuple(), horse.as_tuple(), 1) in combos
    assert (h2.as_tuple(), horse.as_tuple(), 1) in combos


def test_gt_pairs_subset_of_recombined(toy_taxonomy):
    rng = np.random.default_rng(11)
    for _ in range(20):
        instances = []
        for _ in range(rng.integers(1, 5)):
            instances.append(gt("im", random_box(rng), random_box(rng),
                                int(rng.integers(1, 4))))
        gt_pairs = make_gt_pairs(instances, toy_taxonomy)
        gtr_pairs = make_recombined_pairs(instances, toy_taxonomy)
        gt_set = {(p.human_box.as_tuple(), p.object_box.as_tuple(), p.object_id)
                  for p in gt_pairs}
        gtr_set = {(p.human_box.as_tuple(), p.object_box.as_tuple(), p.object_id)
                   for p in gtr_pairs}
        assert gt_set <= gtr_set


def test_recombine_count_law(toy_taxonomy):
    # fixed role and category per box so every human box appears exactly once
    # in the deduplicated box pool, the regime the count law describes
    rng = np.random.default_rng(13)
    for _ in range(20):
        human_pool = [random_box(rng) for _ in range(4)]
        object_pool = [random_box(rng) for _ in range(4)]
        object_hoi = [1, 2, 4, 5]  # horse, horse, person, person
        instances = []
        for _ in range(rng.integers(1, 7)):
            hb = int(rng.integers(0, 4))
            ob = int(rng.integers(0, 4))
            instances.append(gt("im", human_pool[hb], object_pool[ob],
                                object_hoi[ob]))
        pairs = make_recombined_pairs(instances, toy_taxonomy)
        humans = {i.human_box.as_tuple() for i in instances}
        humans |= {i.object_box.as_tuple() for i in instances
                   if i.hoi_id in (4, 5)}
        all_boxes = {(i.human_box.as_tuple(), 2) for i in instances}
        all_boxes |= {(i.object_box.as_tuple(),
                       1 if i.hoi_id in (1, 2, 3) else 2) for i in instances}
        assert len(pairs) == len(humans) * len(all_boxes) - len(humans)


# ---------------------------------------------------------------------------
# detector pairs

def det(image_id, b, category_id, score):
    return DetectionBox(image_id, b, category_id, score)


def test_no_person_detections(toy_taxonomy):
    dets = [det("im", box(0, 0, 5, 5), 1, 0.9)]
    assert make_detector_pairs(dets, toy_taxonomy, PairingParams()) == []


def test_detector_cross_product(toy_taxonomy):
    dets = [det("im", box(0, 0, 5, 5), 2, 0.9),
            det("im", box(10, 10, 15, 15), 2, 0.8),
            det("im", box(20, 20, 25, 25), 1, 0.7)]
    pairs = make_detector_pairs(dets, toy_taxonomy, PairingParams(0.25, 100))
    assert len(pairs) == 4  # 2 humans x 3 objects - 2 self-pairs
    assert [p.pair_index for p in pairs] == [0, 1, 2, 3]
    assert pairs[0].human_score == 0.9 and pairs[0].object_score == 0.8


def test_detector_cap_keeps_largest_products(toy_taxonomy):
    dets = [det("im", box(0, 0, 5, 5), 2, 0.9),
            det("im", box(10, 10, 15, 15), 2, 0.8),
            det("im", box(20, 20, 25, 25), 1, 0.7)]
    pairs = make_detector_pairs(dets, toy_taxonomy, PairingParams(0.25, 2))
    # products in generation order: 0.72, 0.63, 0.72, 0.56; the two 0.72
    # person-person pairs win, tie broken by generation order
    assert len(pairs) == 2
    products = sorted(round(p.human_score * p.object_score, 6) for p in pairs)
    assert products == [0.72, 0.72]
    assert [p.pair_index for p in pairs] == [0, 1]


def test_detector_threshold(toy_taxonomy):
    dets = [det("im", box(0, 0, 5, 5), 2, 0.9),
            det("im", box(10, 10, 15, 15), 1, 0.2)]  # below threshold
    pairs = make_detector_pairs(dets, toy_taxonomy, PairingParams(0.25, 100))
    assert pairs == []  # only the person survives; no object partner


def test_detection_box_validation():
    with pytest.raises(ValidationError):
        det("im", box(0, 0, 1, 1), 81, 0.5)
    with pytest.raises(ValidationError):
        det("im", box(0, 0, 1, 1), 1, 0.0)


# ---------------------------------------------------------------------------
# JSONL round trip

def test_pairs_jsonl_roundtrip_and_determinism(tmp_path, toy_taxonomy):
    rng = np.random.default_rng(3)
    instances = [gt("im", random_box(rng), random_box(rng), 1)
                 for _ in range(4)]
    pairs = make_recombined_pairs(instances, toy_taxonomy)
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_pairs_jsonl(pairs, p1)
    write_pairs_jsonl(pairs, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert read_pairs_jsonl(p1) == pairs


def test_pairs_jsonl_union_check(tmp_path):
    line = ('{"image_id": "im", "pair_index": 0, "human_box": [0,0,5,5], '
            '"object_box": [4,4,9,9], "object_id": 1, "human_score": 1.0, '
            '"object_score": 1.0, "union_box": [0,0,5,5]}')
    path = tmp_path / "bad.jsonl"
    path.write_text(line + "\n")
    with pytest.raises(ValidationError, match="union_box"):
        read_pairs_jsonl(path)
