"""Entity-relation graph model and deterministic rule-based extraction.

Graphs follow the RadGraph labeling convention: observations carry a
certainty label (OBS-DP present, OBS-DA absent, OBS-U uncertain) and anatomy
is ANAT-DP. Extraction is a longest-match scan against the lexicon with
clause-scoped negation/uncertainty cues, a fixed modifier attachment window,
and nearest-observation anatomy attachment. Externally produced graphs are
ingested from RadGraph-style JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import EmptySentence, SchemaError, UnknownLabel
from .lexicon import Lexicon, normalize_word

ENTITY_LABELS = ("OBS-DP", "OBS-DA", "OBS-U", "ANAT-DP")
RELATION_LABELS = ("modify", "located_at", "suggestive_of")


@dataclass(frozen=True)
class Entity:
    """A labeled text span; ``tokens`` are the normalized words at the span."""

    tokens: str
    label: str
    start_ix: int
    end_ix: int

    def __post_init__(self) -> None:
        if self.label not in ENTITY_LABELS:
            raise UnknownLabel(f"unknown entity label {self.label!r}")
        if not (0 <= self.start_ix <= self.end_ix):
            raise SchemaError(
                f"bad entity span [{self.start_ix}, {self.end_ix}] for {self.tokens!r}"
            )


@dataclass(frozen=True)
class Relation:
    """Typed edge between two entities, referenced by index."""

    head: int
    tail: int
    label: str

    def __post_init__(self) -> None:
        if self.label not in RELATION_LABELS:
            raise UnknownLabel(f"unknown relation label {self.label!r}")
        if self.head == self.tail:
            raise SchemaError("relation endpoints must differ")


@dataclass
class EntityGraph:
    """Entities plus typed relations extracted from ``source_text``."""

    source_text: str
    entities: list[Entity] = field(default_factory=list)
    relations: list[Relation] = field(default_factory=list)

    def __post_init__(self) -> None:
        spans = set()
        for ent in self.entities:
            span = (ent.start_ix, ent.end_ix)
            if span in spans:
                raise SchemaError(f"duplicate entity span {span}")
            spans.add(span)
        n = len(self.entities)
        for rel in self.relations:
            if not (0 <= rel.head < n and 0 <= rel.tail < n):
                raise SchemaError(f"relation references missing entity: {rel}")

    def __eq__(self, other: object) -> bool:
        # relation order is not meaningful; serialization groups by head
        if not isinstance(other, EntityGraph):
            return NotImplemented
        return (
            self.source_text == other.source_text
            and self.entities == other.entities
            and set(self.relations) == set(other.relations)
        )


def normalize_term(raw: str, lex: Lexicon) -> str:
    """Normalize a term: lowercase, strip punctuation, fold known plurals,
    then apply the lexicon synonym map when enabled."""
    words = [normalize_word(w) for w in raw.split()]
    words = [w for w in words if w]
    term = " ".join(words)
    if lex.use_synonyms and term in lex.synonyms:
        term = lex.synonyms[term]
    return term


def _match_words(sentence: str, lex: Lexicon) -> tuple[list[str], list[int]]:
    """Normalized words of a sentence plus a clause id per word.

    Clauses are delimited by commas and semicolons; cues only act within
    their own clause.
    """
    words: list[str] = []
    clause_ids: list[int] = []
    clause = 0
    for raw in sentence.split():
        word = normalize_word(raw)
        if lex.use_synonyms and word in lex.synonyms:
            word = lex.synonyms[word]
        if word:
            words.append(word)
            clause_ids.append(clause)
        if raw.rstrip().endswith((",", ";")):
            clause += 1
    return words, clause_ids


def _scan_terms(words: list[str], vocab: dict[str, str] | frozenset[str]) -> list[tuple[int, int]]:
    """Longest-match scan; returns non-overlapping (start, end) word spans."""
    max_len = max((len(t.split()) for t in vocab), default=0)
    spans: list[tuple[int, int]] = []
    i = 0
    while i < len(words):
        matched = 0
        for length in range(min(max_len, len(words) - i), 0, -1):
            if " ".join(words[i : i + length]) in vocab:
                matched = length
                break
        if matched:
            spans.append((i, i + matched - 1))
            i += matched
        else:
            i += 1
    return spans


def extract_graph(sentence: str, lex: Lexicon) -> EntityGraph:
    """Extract an entity-relation graph from one sentence.

    Longest lexicon match wins and ties favor observations over anatomy over
    modifiers. Observations preceded in-clause by a negation cue become
    OBS-DA, by an uncertainty cue OBS-U, else OBS-DP. A modifier ending
    within three words before an observation yields a modify relation; each
    anatomy term attaches to its nearest observation via located_at.
    """
    words, clause_ids = _match_words(sentence, lex)
    if not words:
        raise EmptySentence(f"sentence empty after normalization: {sentence!r}")

    # cue spans are detected independently of entity spans
    negated_ends = {end: clause_ids[end] for _, end in _scan_terms(words, lex.negation_cues)}
    uncertain_ends = {end: clause_ids[end] for _, end in _scan_terms(words, lex.uncertainty_cues)}

    # one combined longest-match pass over all entity vocabularies
    combined: dict[str, str] = {}
    for term in lex.modifiers:
        combined[term] = "MOD"
    for term in lex.anatomy:
        combined[term] = "ANAT"
    for term in lex.observations:
        combined[term] = "OBS"  # observations win ties by insertion last

    entities: list[Entity] = []
    kinds: list[str] = []
    for start, end in _scan_terms(words, combined):
        kind = combined[" ".join(words[start : end + 1])]
        tokens = " ".join(words[start : end + 1])
        if kind == "ANAT":
            label = "ANAT-DP"
        else:
            clause = clause_ids[start]
            label = "OBS-DP"
            if any(pos < start and cl == clause for pos, cl in negated_ends.items()):
                label = "OBS-DA"
            elif any(pos < start and cl == clause for pos, cl in uncertain_ends.items()):
                label = "OBS-U"
        entities.append(Entity(tokens=tokens, label=label, start_ix=start, end_ix=end))
        kinds.append(kind)

    relations: list[Relation] = []
    obs_ix = [i for i, kind in enumerate(kinds) if kind == "OBS"]
    for i, kind in enumerate(kinds):
        if kind == "MOD":
            for j in obs_ix:
                gap = entities[j].start_ix - entities[i].end_ix
                if 0 < gap <= 3:
                    relations.append(Relation(head=i, tail=j, label="modify"))
        elif kind == "ANAT" and obs_ix:
            nearest = min(obs_ix, key=lambda j: (_span_gap(entities[i], entities[j]), j))
            relations.append(Relation(head=nearest, tail=i, label="located_at"))

    return EntityGraph(source_text=" ".join(words), entities=entities, relations=relations)


def _span_gap(a: Entity, b: Entity) -> int:
    if b.start_ix > a.end_ix:
        return b.start_ix - a.end_ix
    if a.start_ix > b.end_ix:
        return a.start_ix - b.end_ix
    return 0


def merge_graphs(graphs: list[EntityGraph]) -> EntityGraph:
    """Union graph over per-sentence graphs; indices re-based, text joined
    by newlines. Duplicate (tokens, label) entities are kept; they collapse
    later under tuple-set semantics."""
    entities: list[Entity] = []
    relations: list[Relation] = []
    texts: list[str] = []
    word_offset = 0
    for g in graphs:
        ent_offset = len(entities)
        for ent in g.entities:
            entities.append(
                Entity(
                    tokens=ent.tokens,
                    label=ent.label,
                    start_ix=ent.start_ix + word_offset,
                    end_ix=ent.end_ix + word_offset,
                )
            )
        for rel in g.relations:
            relations.append(
                Relation(head=rel.head + ent_offset, tail=rel.tail + ent_offset, label=rel.label)
            )
        texts.append(g.source_text)
        word_offset += len(g.source_text.split())
    return EntityGraph(source_text="\n".join(texts), entities=entities, relations=relations)


# --- RadGraph-style JSON ------------------------------------------------------

def serialize_graph(graph: EntityGraph) -> str:
    """Emit the RadGraph-style JSON document for a graph.

    Entities are keyed "1".."n" in graph order; each carries its outgoing
    relations as ``[label, target_id]`` pairs.
    """
    outgoing: dict[int, list[list[str]]] = {i: [] for i in range(len(graph.entities))}
    for rel in graph.relations:
        outgoing[rel.head].append([rel.label, str(rel.tail + 1)])
    doc = {
        "text": graph.source_text,
        "entities": {
            str(i + 1): {
                "tokens": ent.tokens,
                "label": ent.label,
                "start_ix": ent.start_ix,
                "end_ix": ent.end_ix,
                "relations": outgoing[i],
            }
            for i, ent in enumerate(graph.entities)
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def parse_radgraph_json(data: str | bytes) -> EntityGraph:
    """Parse a RadGraph-style JSON document into an :class:`EntityGraph`.

    Raises SchemaError on structural problems (missing fields, bad indices,
    dangling relation targets) and UnknownLabel on labels outside the enums.
    """
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("graph document must be a JSON object")
    if "text" not in doc or "entities" not in doc:
        raise SchemaError("graph document needs 'text' and 'entities'")
    text = doc["text"]
    raw_entities = doc["entities"]
    if not isinstance(text, str) or not isinstance(raw_entities, dict):
        raise SchemaError("'text' must be a string and 'entities' an object")

    try:
        ordered_ids = sorted(raw_entities, key=lambda k: int(k))
    except ValueError as exc:
        raise SchemaError("entity ids must be numeric strings") from exc
    index_of = {eid: i for i, eid in enumerate(ordered_ids)}

    entities: list[Entity] = []
    relations: list[Relation] = []
    for eid in ordered_ids:
        spec = raw_entities[eid]
        if not isinstance(spec, dict):
            raise SchemaError(f"entity {eid} must be an object")
        for key in ("tokens", "label", "start_ix", "end_ix"):
            if key not in spec:
                raise SchemaError(f"entity {eid} missing field {key!r}")
        if not isinstance(spec["start_ix"], int) or not isinstance(spec["end_ix"], int):
            raise SchemaError(f"entity {eid} indices must be integers")
        if spec["label"] not in ENTITY_LABELS:
            raise UnknownLabel(f"entity {eid} has unknown label {spec['label']!r}")
        entities.append(
            Entity(
                tokens=spec["tokens"],
                label=spec["label"],
                start_ix=spec["start_ix"],
                end_ix=spec["end_ix"],
            )
        )
        for item in spec.get("relations", []):
            if not (isinstance(item, list) and len(item) == 2):
                raise SchemaError(f"entity {eid} relation entries must be [label, id]")
            label, target = item
            if label not in RELATION_LABELS:
                raise UnknownLabel(f"unknown relation label {label!r}")
            if target not in index_of:
                raise SchemaError(f"relation target {target!r} not among entities")
            relations.append(Relation(head=index_of[eid], tail=index_of[target], label=label))

    return EntityGraph(source_text=text, entities=entities, relations=relations)
