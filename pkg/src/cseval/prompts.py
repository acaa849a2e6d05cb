"""Constrained clinical prompt grammar: templates, expansion, and parsing.

Prompts have the fixed shape ``severity location pathology`` with optional
slots, drawn from closed vocabularies. The built-in templates enumerate to
31 prompts; ten image variations per prompt gives the 310-sample layout the
evaluation harness assumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import AmbiguousPrompt, PromptParseError, SchemaError, UnknownPathology
from .graph import Entity, EntityGraph, Relation
from .lexicon import Lexicon, default_lexicon, normalize_word


@dataclass(frozen=True)
class PromptTemplate:
    """One pathology with its severity options and optional location slots."""

    pathology: str
    severity_options: tuple[str, ...]
    location_options: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        if not self.severity_options:
            raise SchemaError(f"template {self.pathology!r} has no severity options")

    def combinations(self) -> int:
        return len(self.severity_options) * max(1, len(self.location_options))


@dataclass(frozen=True)
class ClinicalAssertion:
    """Parsed prompt: pathology plus optional severity and location."""

    pathology: str
    severity: str | None = None
    location: tuple[str, ...] | None = None

    @property
    def raw_text(self) -> str:
        parts: list[str] = []
        if self.severity:
            parts.append(self.severity)
        if self.location:
            parts.extend(self.location)
        parts.append(self.pathology)
        return " ".join(parts)


def builtin_templates() -> list[PromptTemplate]:
    """The four built-in chest X-ray templates (31 prompts in total)."""
    return [
        PromptTemplate("cardiomegaly", ("mild", "moderate", "severe")),
        PromptTemplate(
            "pleural effusion",
            ("small", "moderate"),
            (("left",), ("right",)),
        ),
        PromptTemplate(
            "opacification",
            ("small", "moderate"),
            (
                ("left",),
                ("right",),
                ("left", "upper", "lobe"),
                ("left", "lower", "lobe"),
                ("right", "upper", "lobe"),
                ("right", "lower", "lobe"),
            ),
        ),
        PromptTemplate(
            "pneumothorax",
            ("small", "moderate", "large"),
            (("left",), ("right",), ("left", "apical"), ("right", "apical")),
        ),
    ]


def expand_templates(templates: list[PromptTemplate]) -> list[ClinicalAssertion]:
    """Cartesian expansion in template order, severity-major, then location."""
    out: list[ClinicalAssertion] = []
    for tpl in templates:
        locations: tuple[tuple[str, ...] | None, ...] = tpl.location_options or (None,)
        for severity in tpl.severity_options:
            for location in locations:
                out.append(
                    ClinicalAssertion(
                        pathology=tpl.pathology, severity=severity, location=location
                    )
                )
    return out


def normalize_prompt(text: str) -> str:
    """Lowercase, collapse whitespace, strip trailing punctuation."""
    words = [normalize_word(w) for w in text.split()]
    return " ".join(w for w in words if w)


def parse_prompt(text: str, lex: Lexicon | None = None) -> ClinicalAssertion:
    """Parse a prompt by greedy longest-match against the closed vocabularies.

    The prompt must render back to its normalized input, i.e. follow the
    ``severity location pathology`` shape. Raises UnknownPathology if no
    pathology token matches, AmbiguousPrompt if more than one does, and
    PromptParseError for leftover tokens outside the vocabularies.
    """
    lex = lex or default_lexicon()
    words = normalize_prompt(text).split()
    if not words:
        raise UnknownPathology(f"no pathology token in {text!r}")

    matches = _pathology_matches(words, lex)
    if not matches:
        raise UnknownPathology(f"no pathology token in {text!r}")
    if len(matches) > 1:
        found = ", ".join(" ".join(words[s : e + 1]) for s, e in matches)
        raise AmbiguousPrompt(f"multiple pathology tokens in {text!r}: {found}")

    start, end = matches[0]
    if end != len(words) - 1:
        raise PromptParseError(f"pathology must end the prompt: {text!r}")
    pathology = " ".join(words[start:end + 1])

    rest = words[:start]
    severity: str | None = None
    if rest and rest[0] in lex.modifiers:
        severity = rest[0]
        rest = rest[1:]

    location: tuple[str, ...] | None = None
    if rest:
        location_vocab = lex.location_words()
        bad = [w for w in rest if w not in location_vocab]
        if bad:
            raise PromptParseError(f"unparseable tokens in {text!r}: {bad}")
        location = tuple(rest)

    return ClinicalAssertion(pathology=pathology, severity=severity, location=location)


def _pathology_matches(words: list[str], lex: Lexicon) -> list[tuple[int, int]]:
    """Longest-match occurrences of observation terms, left to right."""
    max_len = max((len(t.split()) for t in lex.observations), default=0)
    matches: list[tuple[int, int]] = []
    i = 0
    while i < len(words):
        matched = 0
        for length in range(min(max_len, len(words) - i), 0, -1):
            if " ".join(words[i : i + length]) in lex.observations:
                matched = length
                break
        if matched:
            matches.append((i, i + matched - 1))
            i += matched
        else:
            i += 1
    return matches


def assertion_to_graph(assertion: ClinicalAssertion) -> EntityGraph:
    """Ground-truth graph for a prompt.

    The pathology becomes an OBS-DP entity; a severity becomes a modifier
    entity with a modify relation to it; a location phrase becomes one
    ANAT-DP entity with a located_at relation from the pathology.
    """
    words = assertion.raw_text.split()
    entities: list[Entity] = []
    relations: list[Relation] = []
    pos = 0
    severity_ix = location_ix = None
    if assertion.severity:
        entities.append(Entity(assertion.severity, "OBS-DP", pos, pos))
        severity_ix = len(entities) - 1
        pos += 1
    if assertion.location:
        end = pos + len(assertion.location) - 1
        entities.append(Entity(" ".join(assertion.location), "ANAT-DP", pos, end))
        location_ix = len(entities) - 1
        pos = end + 1
    path_end = pos + len(assertion.pathology.split()) - 1
    entities.append(Entity(assertion.pathology, "OBS-DP", pos, path_end))
    pathology_ix = len(entities) - 1

    if severity_ix is not None:
        relations.append(Relation(head=severity_ix, tail=pathology_ix, label="modify"))
    if location_ix is not None:
        relations.append(Relation(head=pathology_ix, tail=location_ix, label="located_at"))
    return EntityGraph(source_text=" ".join(words), entities=entities, relations=relations)


def load_templates(path: str | Path) -> list[PromptTemplate]:
    """Load template overrides from the JSON format
    ``{"templates": [{"pathology": ..., "severities": [...], "locations": [[...], ...]}]}``."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read templates {path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("templates"), list):
        raise SchemaError("templates document must be {'templates': [...]}")
    out: list[PromptTemplate] = []
    for item in doc["templates"]:
        if not isinstance(item, dict) or "pathology" not in item or "severities" not in item:
            raise SchemaError("each template needs 'pathology' and 'severities'")
        locations = item.get("locations", [])
        if not isinstance(locations, list) or not all(isinstance(l, list) for l in locations):
            raise SchemaError("'locations' must be a list of token lists")
        out.append(
            PromptTemplate(
                pathology=item["pathology"],
                severity_options=tuple(item["severities"]),
                location_options=tuple(tuple(loc) for loc in locations),
            )
        )
    return out
