"""Union-crop and text-prompt embedding extraction.

Consumes the pipeline's pair-list JSONL and taxonomy JSON by their documented
schemas and writes HOIE archives: pair crops keyed "{image_id}:{pair_index}",
class prompts keyed "hoi{hoi_id}". Archive order follows the input file order
regardless of batching.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .archive import write_archive
from .errors import InputError
from .prompts import PromptTemplate


@dataclass(frozen=True)
class PairRecord:
    image_id: str
    pair_index: int
    union_box: tuple[float, float, float, float]


def read_pair_file(path) -> list[PairRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                records.append(PairRecord(
                    image_id=str(rec["image_id"]),
                    pair_index=int(rec["pair_index"]),
                    union_box=tuple(float(v) for v in rec["union_box"]),
                ))
            except (json.JSONDecodeError, KeyError, TypeError,
                    ValueError) as exc:
                raise InputError(f"{path}:{lineno}: bad pair record") from exc
    return records


def read_taxonomy_file(path) -> list[dict]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON") from exc
    if not isinstance(raw, list):
        raise InputError(f"{path}: taxonomy must be a JSON array")
    return raw


def crop_union(image: Image.Image, box, padding: float = 0.0) -> Image.Image:
    """Clamp the union box to the image (optionally padded) and crop."""
    x1, y1, x2, y2 = box
    if padding:
        pw, ph = padding * (x2 - x1), padding * (y2 - y1)
        x1, y1, x2, y2 = x1 - pw, y1 - ph, x2 + pw, y2 + ph
    x1 = max(0.0, x1)
    y1 = max(0.0, y1)
    x2 = min(float(image.width), x2)
    y2 = min(float(image.height), y2)
    if x2 - x1 < 1e-6 or y2 - y1 < 1e-6:
        raise InputError(
            f"union box {box} clamps to zero area on a "
            f"{image.width}x{image.height} image")
    return image.crop((x1, y1, x2, y2))


def _open_image(images_dir: Path, image_id: str) -> Image.Image:
    for ext in (".jpg", ".jpeg", ".png", ".bmp"):
        path = images_dir / f"{image_id}{ext}"
        if path.exists():
            try:
                return Image.open(path).convert("RGB")
            except (OSError, UnidentifiedImageError) as exc:
                raise InputError(f"unreadable image {image_id}: {exc}") from exc
    raise InputError(f"no image file for {image_id} under {images_dir}")


def extract_pair_embeddings(pairs_path, images_dir, backbone, out_path,
                            batch_size: int = 32,
                            padding: float = 0.0) -> int:
    """One archive entry per pair, in pair-file order; returns the count."""
    images_dir = Path(images_dir)
    records = read_pair_file(pairs_path)
    keys = [f"{r.image_id}:{r.pair_index}" for r in records]
    if len(set(keys)) != len(keys):
        raise InputError(f"{pairs_path}: duplicate (image_id, pair_index)")

    vectors = [None] * len(records)
    batch_idx: list[int] = []
    batch_crops: list[Image.Image] = []
    cache_id, cache_img = None, None

    def flush():
        if not batch_idx:
            return
        feats = backbone.embed_images(batch_crops)
        for local, vec in zip(batch_idx, feats):
            vectors[local] = vec
        batch_idx.clear()
        batch_crops.clear()

    for i, rec in enumerate(records):
        if rec.image_id != cache_id:
            cache_id, cache_img = rec.image_id, _open_image(images_dir,
                                                            rec.image_id)
        batch_idx.append(i)
        batch_crops.append(crop_union(cache_img, rec.union_box, padding))
        if len(batch_idx) >= batch_size:
            flush()
    flush()
    return write_archive(out_path, backbone.spec.dim, zip(keys, vectors))


def extract_text_embeddings(taxonomy_path, template: PromptTemplate,
                            backbone, out_path,
                            batch_size: int = 64) -> int:
    """One normalized entry per taxonomy class, keyed hoi{id}."""
    categories = read_taxonomy_file(taxonomy_path)
    keys, prompts = [], []
    for rec in categories:
        keys.append(f"hoi{int(rec['hoi_id'])}")
        prompts.append(template.render(int(rec["verb_id"]),
                                       str(rec["object_name"])))
    vectors = []
    for start in range(0, len(prompts), batch_size):
        vectors.extend(backbone.embed_texts(prompts[start:start + batch_size]))
    return write_archive(out_path, backbone.spec.dim, zip(keys, vectors))


def render_all_prompts(taxonomy_path, template: PromptTemplate):
    """(hoi_id, prompt) pairs in taxonomy order, for inspection."""
    return [(int(rec["hoi_id"]),
             template.render(int(rec["verb_id"]), str(rec["object_name"])))
            for rec in read_taxonomy_file(taxonomy_path)]
