"""Open-vocabulary detection dumps in the pipeline's detection JSONL format.

The inference backend is injectable: `detect_images` drives any callable
(image_id, PIL image) -> [(box, category_id, score)], which keeps the format
logic testable without model weights. `GroundingDinoDetector` is the real
backend, prompting with all object class names at once.
"""
from __future__ import annotations

import json
from pathlib import Path

from PIL import Image

from .errors import ConfigError, InputError

IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png", ".bmp")


def detect_images(images_dir, infer_fn, out_path) -> tuple[int, int]:
    """Run inference over every image under images_dir (sorted order).

    Returns (image count, detection count). Inference failures abort with the
    offending image id; no image is silently skipped.
    """
    images_dir = Path(images_dir)
    paths = sorted(p for p in images_dir.iterdir()
                   if p.suffix.lower() in IMAGE_EXTENSIONS)
    n_images = n_dets = 0
    with open(out_path, "w", encoding="utf-8") as out:
        for path in paths:
            image_id = path.stem
            try:
                image = Image.open(path).convert("RGB")
                detections = infer_fn(image_id, image)
            except Exception as exc:
                raise InputError(f"inference failed on {image_id}: {exc}") from exc
            n_images += 1
            for box, category_id, score in detections:
                if not 0.0 < score <= 1.0:
                    raise InputError(
                        f"{image_id}: detection score {score} outside (0, 1]")
                out.write(json.dumps({
                    "image_id": image_id,
                    "box": [float(v) for v in box],
                    "category_id": int(category_id),
                    "score": float(score),
                }) + "\n")
                n_dets += 1
    return n_images, n_dets


def object_names_from_taxonomy(taxonomy_path) -> list[str]:
    """Object names ordered by object_id (one entry per category)."""
    raw = json.loads(Path(taxonomy_path).read_text(encoding="utf-8"))
    by_id = {}
    for rec in raw:
        by_id[int(rec["object_id"])] = str(rec["object_name"])
    return [by_id[k] for k in sorted(by_id)]


class GroundingDinoDetector:
    """Text-prompted detector producing category ids from the class list."""

    def __init__(self, class_names: list[str],
                 checkpoint: str = "IDEA-Research/grounding-dino-base",
                 box_threshold: float = 0.25, text_threshold: float = 0.25,
                 device: str = "cpu"):
        try:
            import torch  # noqa: F401
            from transformers import (AutoProcessor,
                                      GroundingDinoForObjectDetection)
        except ImportError as exc:
            raise ConfigError(
                "grounding detection needs torch+transformers "
                "(pip install 'hoiextract[models]')") from exc
        self.class_names = class_names
        self.box_threshold = box_threshold
        self.text_threshold = text_threshold
        self.device = device
        self.processor = AutoProcessor.from_pretrained(checkpoint)
        self.model = GroundingDinoForObjectDetection.from_pretrained(
            checkpoint).to(device).eval()
        # the text prompt convention: lowercase classes joined by periods
        self._prompt = ". ".join(n.replace("_", " ").lower()
                                 for n in class_names) + "."
        self._name_to_id = {n.replace("_", " ").lower(): i + 1
                            for i, n in enumerate(class_names)}

    def __call__(self, image_id: str, image: Image.Image):
        import torch

        inputs = self.processor(images=image, text=self._prompt,
                                return_tensors="pt").to(self.device)
        with torch.no_grad():
            outputs = self.model(**inputs)
        results = self.processor.post_process_grounded_object_detection(
            outputs, inputs["input_ids"],
            threshold=self.box_threshold,
            text_threshold=self.text_threshold,
            target_sizes=[(image.height, image.width)])[0]
        detections = []
        for box, score, label in zip(results["boxes"], results["scores"],
                                     results["text_labels"]
                                     if "text_labels" in results
                                     else results["labels"]):
            category_id = self._name_to_id.get(str(label).strip().lower())
            if category_id is None:
                continue  # partial-phrase match outside the class list
            detections.append((box.tolist(), category_id,
                               min(float(score), 1.0)))
        return detections


def run_grounding_dino(images_dir, class_names, out_path,
                       checkpoint: str = "IDEA-Research/grounding-dino-base",
                       box_threshold: float = 0.25,
                       text_threshold: float = 0.25,
                       device: str = "cpu") -> tuple[int, int]:
    detector = GroundingDinoDetector(class_names, checkpoint, box_threshold,
                                     text_threshold, device)
    return detect_images(images_dir, detector, out_path)
