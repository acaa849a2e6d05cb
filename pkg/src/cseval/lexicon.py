"""Clinical term lexicon backing prompt parsing and graph extraction.

The lexicon is the closed knowledge base for the rule-based pipeline: which
phrases count as observations, severity modifiers, or anatomy, and which cue
phrases flip an observation to absent or uncertain. All terms are stored
lowercase; multi-word terms are space-joined.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError

# Known plural surface forms folded to their singular lemma before matching.
LEMMA_TABLE = {
    "effusions": "effusion",
    "opacifications": "opacification",
    "opacities": "opacity",
    "consolidations": "consolidation",
    "pneumothoraces": "pneumothorax",
    "pneumothoraxes": "pneumothorax",
    "lobes": "lobe",
    "findings": "finding",
}

_PUNCT_STRIP = string.punctuation + string.whitespace


@dataclass(frozen=True)
class Lexicon:
    """Closed vocabularies for extraction. Immutable after construction.

    ``observations`` and ``anatomy`` map each accepted surface term to its
    canonical form (a canonical form maps to itself). ``synonyms`` is an
    optional extra folding layer applied by :func:`cseval.graph.normalize_term`
    only when ``use_synonyms`` is enabled.
    """

    observations: dict[str, str] = field(default_factory=dict)
    modifiers: frozenset[str] = frozenset()
    anatomy: dict[str, str] = field(default_factory=dict)
    negation_cues: frozenset[str] = frozenset()
    uncertainty_cues: frozenset[str] = frozenset()
    synonyms: dict[str, str] = field(default_factory=dict)
    use_synonyms: bool = False

    def __post_init__(self) -> None:
        for name in ("observations", "anatomy", "synonyms"):
            mapping = getattr(self, name)
            for term, canon in mapping.items():
                if term != term.lower() or canon != canon.lower():
                    raise SchemaError(f"lexicon {name} term not lowercase: {term!r}")
                if canon in mapping and mapping[canon] != canon:
                    raise SchemaError(
                        f"lexicon {name} canonical form {canon!r} does not map to itself"
                    )
        for name in ("modifiers", "negation_cues", "uncertainty_cues"):
            for term in getattr(self, name):
                if term != term.lower():
                    raise SchemaError(f"lexicon {name} term not lowercase: {term!r}")

    def location_words(self) -> frozenset[str]:
        """Word-level location vocabulary derived from the anatomy terms."""
        words: set[str] = set()
        for term in self.anatomy:
            words.update(term.split())
        return frozenset(words)

    def with_synonyms(self, enabled: bool) -> "Lexicon":
        if enabled == self.use_synonyms:
            return self
        return Lexicon(
            observations=self.observations,
            modifiers=self.modifiers,
            anatomy=self.anatomy,
            negation_cues=self.negation_cues,
            uncertainty_cues=self.uncertainty_cues,
            synonyms=self.synonyms,
            use_synonyms=enabled,
        )


def normalize_word(word: str) -> str:
    """Lowercase a single word, strip edge punctuation, fold known plurals."""
    word = word.lower().strip(_PUNCT_STRIP)
    return LEMMA_TABLE.get(word, word)


def default_lexicon() -> Lexicon:
    """Lexicon covering the four template pathologies plus common CXR findings."""
    observations = [
        "cardiomegaly",
        "pleural effusion",
        "effusion",
        "opacification",
        "opacity",
        "pneumothorax",
        "atelectasis",
        "consolidation",
        "edema",
    ]
    return Lexicon(
        observations={term: term for term in observations},
        modifiers=frozenset({"mild", "moderate", "severe", "small", "large", "trace"}),
        anatomy={
            term: term
            for term in (
                "left",
                "right",
                "upper lobe",
                "lower lobe",
                "apical",
                "basal",
                "bilateral",
            )
        },
        negation_cues=frozenset({"no", "without", "absent", "clear of", "negative for"}),
        uncertainty_cues=frozenset({"possible", "may represent", "cannot exclude"}),
    )


def _as_canonical_map(value: object, name: str) -> dict[str, str]:
    """Accept either a list of terms (self-canonical) or an explicit map."""
    if isinstance(value, list):
        if not all(isinstance(t, str) for t in value):
            raise SchemaError(f"lexicon {name} must contain strings")
        return {t: t for t in value}
    if isinstance(value, dict):
        if not all(isinstance(k, str) and isinstance(v, str) for k, v in value.items()):
            raise SchemaError(f"lexicon {name} map must be string -> string")
        out = dict(value)
        # canonical targets are implicitly part of the vocabulary
        for canon in list(out.values()):
            out.setdefault(canon, canon)
        return out
    raise SchemaError(f"lexicon {name} must be a list or a map")


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a lexicon from its JSON file format.

    Schema: ``{"observations": [...]|{...}, "modifiers": [...], "anatomy":
    [...]|{...}, "negation_cues": [...], "uncertainty_cues": [...],
    "synonyms": {...}}``. Missing groups fall back to the defaults' empties.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read lexicon {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("lexicon document must be a JSON object")
    known = {
        "observations",
        "modifiers",
        "anatomy",
        "negation_cues",
        "uncertainty_cues",
        "synonyms",
    }
    unknown = set(doc) - known
    if unknown:
        raise SchemaError(f"unknown lexicon fields: {sorted(unknown)}")

    def terms(name: str) -> frozenset[str]:
        value = doc.get(name, [])
        if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
            raise SchemaError(f"lexicon {name} must be a list of strings")
        return frozenset(value)

    return Lexicon(
        observations=_as_canonical_map(doc.get("observations", []), "observations"),
        modifiers=terms("modifiers"),
        anatomy=_as_canonical_map(doc.get("anatomy", []), "anatomy"),
        negation_cues=terms("negation_cues"),
        uncertainty_cues=terms("uncertainty_cues"),
        synonyms=_as_canonical_map(doc.get("synonyms", {}), "synonyms") if doc.get("synonyms") else {},
    )
