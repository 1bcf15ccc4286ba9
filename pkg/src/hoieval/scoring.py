"""Score verb distributions for candidate pairs from precomputed embeddings.

Embeddings live in HOIE archives (binary, little-endian): magic "HOIE",
version u32 = 1, dim u32, count u64, then per record a u16 key length, the
UTF-8 key, and dim float32 values. Pair embeddings are keyed
"{image_id}:{pair_index}", text embeddings "hoi{hoi_id}".
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import BoundingBox, HoiTaxonomy
from .errors import (ConsistencyError, FormatError, MissingKeyError,
                     TruncationError, ValidationError)
from .pairing import CandidatePair

MAGIC = b"HOIE"
VERSION = 1
NORM_TOLERANCE = 1e-3


class EmbeddingArchive:
    """Keyed store of L2-normalized float32 vectors of one dimension."""

    def __init__(self, dim: int, entries: dict[str, np.ndarray]):
        self.dim = dim
        self.entries = entries

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def get(self, key: str) -> np.ndarray:
        try:
            return self.entries[key]
        except KeyError:
            raise MissingKeyError(key) from None


def pair_key(image_id: str, pair_index: int) -> str:
    return f"{image_id}:{pair_index}"


def text_key(hoi_id: int) -> str:
    return f"hoi{hoi_id}"


def load_archive(path) -> EmbeddingArchive:
    """Read an HOIE archive, validating header, count, and vector norms."""
    path = Path(path)
    with open(path, "rb") as f:
        header = f.read(20)
        if len(header) < 20 or header[:4] != MAGIC:
            raise FormatError(f"{path}: not an HOIE archive (bad magic)")
        version, dim = struct.unpack("<II", header[4:12])
        (count,) = struct.unpack("<Q", header[12:20])
        if version != VERSION:
            raise FormatError(f"{path}: unsupported HOIE version {version}")
        if dim == 0:
            raise FormatError(f"{path}: zero embedding dimension")
        entries: dict[str, np.ndarray] = {}
        vec_bytes = 4 * dim
        for i in range(count):
            raw_len = f.read(2)
            if len(raw_len) < 2:
                raise TruncationError(
                    f"{path}: ended after {i} of {count} records")
            (key_len,) = struct.unpack("<H", raw_len)
            raw_key = f.read(key_len)
            raw_vec = f.read(vec_bytes)
            if len(raw_key) < key_len or len(raw_vec) < vec_bytes:
                raise TruncationError(
                    f"{path}: ended inside record {i} of {count}")
            key = raw_key.decode("utf-8")
            if key in entries:
                raise ValidationError(f"{path}: duplicate key {key!r}")
            vec = np.frombuffer(raw_vec, dtype="<f4")
            norm = float(np.linalg.norm(vec))
            if abs(norm - 1.0) > NORM_TOLERANCE:
                raise ValidationError(
                    f"{path}: vector {key!r} has norm {norm:.6f}, "
                    f"expected 1 within {NORM_TOLERANCE}")
            entries[key] = vec
        if f.read(1):
            raise FormatError(f"{path}: trailing bytes after {count} records")
    return EmbeddingArchive(dim, entries)


def write_archive(path, dim: int, items) -> int:
    """Write (key, vector) items to an HOIE archive; returns the count.

    Vectors are cast to float32; record order follows the iterable.
    """
    items = list(items)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IIQ", VERSION, dim, len(items)))
        for key, vec in items:
            raw_key = key.encode("utf-8")
            arr = np.asarray(vec, dtype="<f4")
            if arr.shape != (dim,):
                raise ValidationError(
                    f"vector {key!r} has shape {arr.shape}, expected ({dim},)")
            f.write(struct.pack("<H", len(raw_key)))
            f.write(raw_key)
            f.write(arr.tobytes())
    return len(items)


@dataclass(frozen=True)
class VerbDistribution:
    """Softmax over the candidate HOI classes of one pair, ascending hoi_id."""

    image_id: str
    pair_index: int
    entries: tuple[tuple[int, float], ...]

    @property
    def argmax_hoi(self) -> int:
        return max(self.entries, key=lambda e: e[1])[0]


@dataclass(frozen=True)
class HoiDetection:
    image_id: str
    human_box: BoundingBox
    object_box: BoundingBox
    hoi_id: int
    score: float

    def to_json_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "human_box": self.human_box.to_list(),
            "object_box": self.object_box.to_list(),
            "hoi_id": self.hoi_id,
            "score": self.score,
        }


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max subtraction)."""
    shifted = logits - np.max(logits)
    exps = np.exp(shifted)
    return exps / exps.sum()


def score_pair(pair: CandidatePair, image_emb: np.ndarray,
               text_archive: EmbeddingArchive, taxonomy: HoiTaxonomy,
               logit_scale: float = 100.0,
               candidates: str = "object") -> VerbDistribution:
    """Softmax of scaled cosine similarities over the pair's candidate HOIs.

    With candidates="object" (the default) the candidate set is the taxonomy's
    HOI classes for the pair's object category. candidates="all" is an
    ablation that spans every taxonomy class, leaking verbs across objects.
    """
    if logit_scale <= 0:
        raise ValidationError(f"logit_scale must be positive, got {logit_scale}")
    if candidates == "object":
        hoi_ids = taxonomy.hois_for_object(pair.object_id)
    elif candidates == "all":
        hoi_ids = sorted(taxonomy.hoi_ids)
    else:
        raise ValidationError(f"unknown candidate mode {candidates!r}")
    if not hoi_ids:
        raise ValidationError(f"no candidate HOIs for object {pair.object_id}")
    text = np.stack([text_archive.get(text_key(h)) for h in hoi_ids])
    sims = text.astype(np.float64) @ np.asarray(image_emb, dtype=np.float64)
    probs = softmax(logit_scale * sims)
    return VerbDistribution(
        image_id=pair.image_id, pair_index=pair.pair_index,
        entries=tuple(zip(hoi_ids, probs.tolist())),
    )


def assemble_detections(pairs: list[CandidatePair],
                        distributions: list[VerbDistribution]
                        ) -> list[HoiDetection]:
    """One detection per (pair, candidate HOI); score = prob * det scores.

    Output follows pair order, then ascending hoi_id within a pair.
    """
    by_key = {(d.image_id, d.pair_index): d for d in distributions}
    if len(by_key) != len(distributions):
        raise ConsistencyError("duplicate (image_id, pair_index) distributions")
    detections = []
    for pair in pairs:
        dist = by_key.pop((pair.image_id, pair.pair_index), None)
        if dist is None:
            raise ConsistencyError(
                f"no distribution for pair {pair_key(pair.image_id, pair.pair_index)}")
        for hoi_id, prob in dist.entries:
            detections.append(HoiDetection(
                image_id=pair.image_id,
                human_box=pair.human_box,
                object_box=pair.object_box,
                hoi_id=hoi_id,
                score=prob * pair.human_score * pair.object_score,
            ))
    if by_key:
        extra = next(iter(by_key))
        raise ConsistencyError(f"distribution without a pair: {extra}")
    return detections


@dataclass
class ScoringSummary:
    pairs_scored: int = 0
    detections_emitted: int = 0
    missing_embeddings: int = 0


def run_scoring(pairs_path, pair_archive_path, text_archive_path,
                taxonomy: HoiTaxonomy, out_path, logit_scale: float = 100.0,
                on_missing: str = "fail",
                candidates: str = "object") -> ScoringSummary:
    """Score every pair in a pairs file and stream detections to out_path.

    on_missing="fail" raises on the first pair without an embedding;
    "skip" drops such pairs and counts them in the summary.
    """
    from .pairing import read_pairs_jsonl

    if on_missing not in ("fail", "skip"):
        raise ValidationError(f"on_missing must be fail or skip, got {on_missing!r}")
    pairs = read_pairs_jsonl(pairs_path)
    pair_archive = load_archive(pair_archive_path)
    text_archive = load_archive(text_archive_path)
    summary = ScoringSummary()
    with open(out_path, "w", encoding="utf-8") as out:
        for pair in pairs:
            key = pair_key(pair.image_id, pair.pair_index)
            if key not in pair_archive:
                if on_missing == "fail":
                    raise MissingKeyError(key)
                summary.missing_embeddings += 1
                continue
            dist = score_pair(pair, pair_archive.get(key), text_archive,
                              taxonomy, logit_scale, candidates)
            for det in assemble_detections([pair], [dist]):
                out.write(json.dumps(det.to_json_dict()) + "\n")
                summary.detections_emitted += 1
            summary.pairs_scored += 1
    return summary


def write_detections_jsonl(detections, path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for det in detections:
            f.write(json.dumps(det.to_json_dict()) + "\n")
            n += 1
    return n


def read_detections_file(path) -> list[HoiDetection]:
    """Read scored detections (JSON Lines)."""
    from .pairing import _iter_jsonl

    out = []
    for lineno, rec in _iter_jsonl(path):
        try:
            det = HoiDetection(
                image_id=str(rec["image_id"]),
                human_box=BoundingBox.from_list(rec["human_box"]),
                object_box=BoundingBox.from_list(rec["object_box"]),
                hoi_id=int(rec["hoi_id"]),
                score=float(rec["score"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: bad detection record") from exc
        if not np.isfinite(det.score):
            raise ValidationError(f"{path}:{lineno}: non-finite score")
        out.append(det)
    return out
