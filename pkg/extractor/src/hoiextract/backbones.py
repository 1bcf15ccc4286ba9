"""Vision-language backbone registry.

Eight production backbones are registered by their model identifiers; they
load lazily so the converter and format tooling work without torch installed.
`stub{dim}` backbones (e.g. "stub16") produce deterministic hash-based unit
vectors for pipeline tests and dry runs.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ConfigError


@dataclass(frozen=True)
class BackboneSpec:
    name: str
    dim: int
    input_resolution: int
    family: str  # clip | open_clip | blip | blip2 | stub
    checkpoint: str = ""


REGISTRY = {
    "CLIP RN101": BackboneSpec(
        "CLIP RN101", 512, 224, "open_clip", "RN101"),
    "CLIP ViT-B/16": BackboneSpec(
        "CLIP ViT-B/16", 512, 224, "clip", "openai/clip-vit-base-patch16"),
    "CLIP ViT-L/14": BackboneSpec(
        "CLIP ViT-L/14", 768, 224, "clip", "openai/clip-vit-large-patch14"),
    "CLIP ViT-L/14@336px": BackboneSpec(
        "CLIP ViT-L/14@336px", 768, 336, "clip",
        "openai/clip-vit-large-patch14-336"),
    "blip_vitB/16": BackboneSpec(
        "blip_vitB/16", 256, 384, "blip", "Salesforce/blip-itm-base-coco"),
    "blip2_pretrain_vitL/14": BackboneSpec(
        "blip2_pretrain_vitL/14", 256, 224, "blip2", "pretrain_vitL"),
    "blip2_pretrain_vitH/14": BackboneSpec(
        "blip2_pretrain_vitH/14", 256, 224, "blip2", "pretrain"),
    "blip2_coco_vitH/14@364px": BackboneSpec(
        "blip2_coco_vitH/14@364px", 256, 364, "blip2", "coco"),
}


def load_backbone(name: str, device: str = "cpu"):
    """Resolve a backbone by registry name or `stub{dim}`."""
    stub = re.fullmatch(r"stub(\d+)", name)
    if stub:
        return StubBackbone(int(stub.group(1)))
    if name not in REGISTRY:
        known = ", ".join(sorted(REGISTRY))
        raise ConfigError(f"unknown backbone {name!r}; known: {known}, stub<dim>")
    spec = REGISTRY[name]
    if spec.family == "clip":
        return ClipBackbone(spec, device)
    if spec.family == "open_clip":
        return OpenClipBackbone(spec, device)
    return LavisBackbone(spec, device)


def _normalize(vecs: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return (vecs / np.clip(norms, 1e-12, None)).astype(np.float32)


class StubBackbone:
    """Deterministic stand-in: unit vectors seeded from content hashes.

    Images hash their 8x8 grayscale thumbnail, texts their UTF-8 bytes, so
    identical inputs give identical embeddings across runs and platforms.
    """

    def __init__(self, dim: int):
        self.spec = BackboneSpec(f"stub{dim}", dim, 224, "stub")

    def _from_digest(self, digest: bytes) -> np.ndarray:
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return rng.standard_normal(self.spec.dim)

    def embed_images(self, images: list[Image.Image]) -> np.ndarray:
        out = []
        for img in images:
            thumb = img.convert("L").resize((8, 8), Image.BILINEAR)
            out.append(self._from_digest(
                hashlib.sha256(thumb.tobytes()).digest()))
        return _normalize(np.stack(out)) if out else np.zeros((0, self.spec.dim),
                                                              dtype=np.float32)

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        out = [self._from_digest(hashlib.sha256(t.encode("utf-8")).digest())
               for t in texts]
        return _normalize(np.stack(out)) if out else np.zeros((0, self.spec.dim),
                                                              dtype=np.float32)


class ClipBackbone:
    """Contrastive image/text encoder from the transformers CLIP family."""

    def __init__(self, spec: BackboneSpec, device: str = "cpu"):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ConfigError(
                f"backbone {spec.name!r} needs torch+transformers "
                f"(pip install 'hoiextract[models]')") from exc
        self.spec = spec
        self.device = device
        self.model = CLIPModel.from_pretrained(spec.checkpoint).to(device).eval()
        self.processor = CLIPProcessor.from_pretrained(spec.checkpoint)

    def embed_images(self, images):
        import torch
        with torch.no_grad():
            inputs = self.processor(images=images, return_tensors="pt")
            feats = self.model.get_image_features(
                pixel_values=inputs["pixel_values"].to(self.device))
        return _normalize(feats.cpu().numpy())

    def embed_texts(self, texts):
        import torch
        with torch.no_grad():
            inputs = self.processor(text=texts, return_tensors="pt",
                                    padding=True, truncation=True)
            feats = self.model.get_text_features(
                input_ids=inputs["input_ids"].to(self.device),
                attention_mask=inputs["attention_mask"].to(self.device))
        return _normalize(feats.cpu().numpy())


class OpenClipBackbone:
    """CLIP checkpoints only published through open_clip (RN101)."""

    def __init__(self, spec: BackboneSpec, device: str = "cpu"):
        try:
            import open_clip
            import torch  # noqa: F401
        except ImportError as exc:
            raise ConfigError(
                f"backbone {spec.name!r} needs open_clip_torch") from exc
        self.spec = spec
        self.device = device
        self.model, _, self.preprocess = open_clip.create_model_and_transforms(
            spec.checkpoint, pretrained="openai", device=device)
        self.model.eval()
        self.tokenizer = open_clip.get_tokenizer(spec.checkpoint)

    def embed_images(self, images):
        import torch
        batch = torch.stack([self.preprocess(img) for img in images])
        with torch.no_grad():
            feats = self.model.encode_image(batch.to(self.device))
        return _normalize(feats.cpu().numpy())

    def embed_texts(self, texts):
        import torch
        tokens = self.tokenizer(texts)
        with torch.no_grad():
            feats = self.model.encode_text(tokens.to(self.device))
        return _normalize(feats.cpu().numpy())


class LavisBackbone:
    """BLIP / BLIP-2 feature extractors via LAVIS.

    Both families project into a 256-d contrastive space. BLIP gives one CLS
    projection per image; BLIP-2 gives one per query token, stored here as
    their normalized mean so the archive keeps a single vector per key.
    """

    def __init__(self, spec: BackboneSpec, device: str = "cpu"):
        try:
            import torch  # noqa: F401
            from lavis.models import load_model_and_preprocess
        except ImportError as exc:
            raise ConfigError(
                f"backbone {spec.name!r} needs salesforce-lavis") from exc
        self.spec = spec
        self.device = device
        arch = ("blip2_feature_extractor" if spec.family == "blip2"
                else "blip_feature_extractor")
        model_type = spec.checkpoint if spec.family == "blip2" else "base"
        self.model, self.vis_processors, self.txt_processors = \
            load_model_and_preprocess(arch, model_type=model_type,
                                      is_eval=True, device=device)

    def embed_images(self, images):
        import torch
        batch = torch.stack([self.vis_processors["eval"](img)
                             for img in images]).to(self.device)
        with torch.no_grad():
            feats = self.model.extract_features({"image": batch},
                                                mode="image")
        proj = feats.image_embeds_proj
        if proj.dim() == 3:  # (batch, tokens, dim): CLS for BLIP, queries for BLIP-2
            proj = proj[:, 0, :] if self.spec.family == "blip" else proj.mean(1)
        return _normalize(proj.cpu().numpy())

    def embed_texts(self, texts):
        import torch
        processed = [self.txt_processors["eval"](t) for t in texts]
        with torch.no_grad():
            feats = self.model.extract_features({"text_input": processed},
                                                mode="text")
        proj = feats.text_embeds_proj
        if proj.dim() == 3:
            proj = proj[:, 0, :]
        return _normalize(proj.cpu().numpy())
