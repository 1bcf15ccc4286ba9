import json

import pytest

from hoiextract.detect import detect_images, object_names_from_taxonomy
from hoiextract.errors import InputError

from conftest import hoieval_validate, make_image


def test_detect_images_writes_contract_format(tmp_path):
    images_dir = tmp_path / "imgs"
    images_dir.mkdir()
    make_image(images_dir / "im0.jpg", seed=0)
    make_image(images_dir / "im1.jpg", seed=1)

    def infer(image_id, image):
        if image_id == "im0":
            return [([1.0, 2.0, 30.0, 40.0], 16, 0.9),
                    ([5.0, 5.0, 25.0, 35.0], 1, 0.4)]
        return []

    n_images, n_dets = detect_images(images_dir, infer, tmp_path / "d.jsonl")
    assert (n_images, n_dets) == (2, 2)
    lines = (tmp_path / "d.jsonl").read_text().splitlines()
    assert json.loads(lines[0]) == {"image_id": "im0",
                                    "box": [1.0, 2.0, 30.0, 40.0],
                                    "category_id": 16, "score": 0.9}
    proc = hoieval_validate("--detections", tmp_path / "d.jsonl")
    assert proc.returncode == 0, proc.stderr
    assert "detector dump" in proc.stderr


def test_blank_image_zero_detections_still_valid(tmp_path):
    images_dir = tmp_path / "imgs"
    images_dir.mkdir()
    make_image(images_dir / "blank.png", seed=2)
    n_images, n_dets = detect_images(images_dir, lambda i, im: [],
                                     tmp_path / "d.jsonl")
    assert (n_images, n_dets) == (1, 0)
    assert (tmp_path / "d.jsonl").read_text() == ""


def test_inference_failure_names_image(tmp_path):
    images_dir = tmp_path / "imgs"
    images_dir.mkdir()
    make_image(images_dir / "boom.jpg", seed=3)

    def infer(image_id, image):
        raise RuntimeError("device lost")

    with pytest.raises(InputError, match="boom"):
        detect_images(images_dir, infer, tmp_path / "d.jsonl")


def test_score_range_enforced(tmp_path):
    images_dir = tmp_path / "imgs"
    images_dir.mkdir()
    make_image(images_dir / "im.jpg", seed=4)
    with pytest.raises(InputError, match="score"):
        detect_images(images_dir,
                      lambda i, im: [([0.0, 0.0, 5.0, 5.0], 1, 0.0)],
                      tmp_path / "d.jsonl")


def test_object_names_ordered_by_id(toy_taxonomy_path):
    assert object_names_from_taxonomy(toy_taxonomy_path) == ["horse", "person"]
