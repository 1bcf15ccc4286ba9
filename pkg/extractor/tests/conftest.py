import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

# real verb ids (ride = 77, walk = 111) so the default template renders
TOY_TAXONOMY = [
    {"hoi_id": 1, "object_id": 1, "verb_id": 77, "object_name": "horse",
     "verb_name": "ride", "rare": False},
    {"hoi_id": 2, "object_id": 1, "verb_id": 111, "object_name": "horse",
     "verb_name": "walk", "rare": True},
    {"hoi_id": 3, "object_id": 2, "verb_id": 111, "object_name": "person",
     "verb_name": "walk", "rare": False},
]


@pytest.fixture
def toy_taxonomy_path(tmp_path):
    path = tmp_path / "taxonomy.json"
    path.write_text(json.dumps(TOY_TAXONOMY))
    return path


def make_image(path, width=64, height=48, seed=0):
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 255, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(arr, "RGB").save(path)
    return path


def write_pair_file(path, records):
    with open(path, "w") as f:
        for image_id, pair_index, union in records:
            f.write(json.dumps({
                "image_id": image_id, "pair_index": pair_index,
                "human_box": union, "object_box": union,
                "object_id": 1, "human_score": 1.0, "object_score": 1.0,
                "union_box": union}) + "\n")
    return path


def hoieval_validate(*args) -> subprocess.CompletedProcess:
    """Run the consumer's validate subcommand on produced files."""
    return subprocess.run(
        [sys.executable, "-m", "hoieval.cli", "validate", *map(str, args)],
        capture_output=True, text=True)
