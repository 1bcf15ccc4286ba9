"""Whole-pipeline contract check: official-format annotations through
conversion, pair generation, stub-backbone extraction, scoring, and
evaluation, crossing the package boundary only via files and CLIs."""
import json
import subprocess
import sys

from hoiextract.cli import main as extract_main

from conftest import make_image
from test_convert import make_official_mat


def run_hoieval(*args):
    return subprocess.run([sys.executable, "-m", "hoieval.cli", *map(str, args)],
                          capture_output=True, text=True)


def test_full_pipeline(tmp_path):
    mat = make_official_mat(tmp_path / "anno_bbox.mat")
    anno = tmp_path / "test_annotations.json"
    tax = tmp_path / "taxonomy.json"
    assert extract_main(["convert", "--anno-mat", str(mat),
                         "--out-annotations", str(anno),
                         "--out-taxonomy", str(tax)]) == 0

    images_dir = tmp_path / "imgs"
    images_dir.mkdir()
    for i, rec in enumerate(json.loads(anno.read_text())["images"]):
        make_image(images_dir / rec["file_name"], width=rec["width"],
                   height=rec["height"], seed=100 + i)

    pairs = tmp_path / "pairs.jsonl"
    proc = run_hoieval("pairs", "--regime", "gt", "--annotations", anno,
                       "--taxonomy", tax, "--out", pairs)
    assert proc.returncode == 0, proc.stderr

    pair_emb = tmp_path / "pairs.hoie"
    assert extract_main(["extract-pairs", "--pairs", str(pairs),
                         "--images-dir", str(images_dir),
                         "--backbone", "stub16",
                         "--out", str(pair_emb)]) == 0
    text_emb = tmp_path / "text.hoie"
    assert extract_main(["extract-text", "--taxonomy", str(tax),
                         "--backbone", "stub16",
                         "--out", str(text_emb)]) == 0

    proc = run_hoieval("validate", "--pair-embeddings", pair_emb,
                       "--text-embeddings", text_emb)
    assert proc.returncode == 0, proc.stderr

    dets = tmp_path / "detections.jsonl"
    proc = run_hoieval("score", "--pairs", pairs,
                       "--pair-embeddings", pair_emb,
                       "--text-embeddings", text_emb,
                       "--taxonomy", tax, "--out", dets)
    assert proc.returncode == 0, proc.stderr

    report = tmp_path / "report.json"
    proc = run_hoieval("eval", "--detections", dets, "--annotations", anno,
                       "--taxonomy", tax, "--out", report)
    assert proc.returncode == 0, proc.stderr
    payload = json.loads(report.read_text())
    assert 0.0 <= payload["full"] <= 100.0
    assert payload["per_class"]
    assert "full" in proc.stdout and "rare" in proc.stdout
