"""Embedding, detection, and annotation-conversion front end for hoieval."""

from .archive import read_archive, write_archive
from .backbones import REGISTRY, BackboneSpec, StubBackbone, load_backbone
from .convert import build_taxonomy, convert_annotations, convert_official
from .detect import detect_images, object_names_from_taxonomy
from .errors import ConfigError, ExtractorError, InputError
from .extract import (crop_union, extract_pair_embeddings,
                      extract_text_embeddings, render_all_prompts)
from .prompts import PromptTemplate, load_template

__version__ = "0.1.0"
