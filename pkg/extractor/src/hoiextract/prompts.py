"""Class prompt rendering.

The default template renders "a photo of a person {verb_phrase} {article}
{object}" from a verb-id -> gerund phrase table (the no-interaction verb's
phrase is "and", which makes its prompt "a photo of a person and a horse").
Templates are plain JSON and swappable via --template-file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError, InputError

DEFAULT_ARTICLE = "a"


@dataclass(frozen=True)
class PromptTemplate:
    pattern: str
    verb_phrases: dict[int, str]
    object_articles: dict[str, str] = field(default_factory=dict)

    def render(self, verb_id: int, object_name: str) -> str:
        if verb_id not in self.verb_phrases:
            raise ConfigError(f"no verb phrase for verb_id {verb_id}")
        phrase = self.verb_phrases[verb_id]
        article = self.object_articles.get(object_name, DEFAULT_ARTICLE)
        prompt = self.pattern.format(verb_phrase=phrase, article=article,
                                     object=object_name.replace("_", " "))
        if not prompt.strip():
            raise ConfigError(f"empty prompt for verb {verb_id}/{object_name}")
        return prompt


def default_template_path() -> Path:
    return Path(resources.files("hoiextract") / "data" / "prompt_template.json")


def load_template(path=None) -> PromptTemplate:
    path = Path(path) if path else default_template_path()
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON") from exc
    try:
        return PromptTemplate(
            pattern=raw["pattern"],
            verb_phrases={int(k): str(v)
                          for k, v in raw["verb_phrases"].items()},
            object_articles={str(k): str(v)
                             for k, v in raw.get("object_articles", {}).items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed template: {exc}") from exc
