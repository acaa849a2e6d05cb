"""Grounded-sentence filtering and entity-relation tuple overlap scoring.

The headline score is the harmonic mean of precision and recall over the
union of entity tuples and relation tuples from the predicted and ground
truth graphs; entity-only and relation-only scores are reported alongside.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError
from .graph import EntityGraph, extract_graph, merge_graphs, normalize_term, serialize_graph
from .lexicon import Lexicon
from .prompts import ClinicalAssertion, assertion_to_graph

EntityTuple = tuple[str, str]
RelationTuple = tuple[EntityTuple, str, EntityTuple]


@dataclass(frozen=True)
class BoundingBox:
    """Fractional box; coordinates in [0, 1] with positive extent."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "y_min", "x_max", "y_max"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise SchemaError(f"box coordinate {name}={v} outside [0, 1]")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise SchemaError("box must satisfy x_min < x_max and y_min < y_max")


@dataclass(frozen=True)
class GroundedSentence:
    text: str
    boxes: tuple[BoundingBox, ...] = ()


@dataclass(frozen=True)
class GroundedReport:
    """Generated report as sentences, each with zero or more bounding boxes."""

    sentences: tuple[GroundedSentence, ...] = ()

    @classmethod
    def from_json(cls, data: str | bytes) -> "GroundedReport":
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid report JSON: {exc}") from exc
        if not isinstance(doc, dict) or not isinstance(doc.get("sentences"), list):
            raise SchemaError("report document must be {'sentences': [...]}")
        sentences = []
        for item in doc["sentences"]:
            if not isinstance(item, dict) or "text" not in item:
                raise SchemaError("each sentence needs a 'text' field")
            raw_boxes = item.get("boxes") or []
            if not isinstance(raw_boxes, list):
                raise SchemaError("'boxes' must be a list or null")
            boxes = []
            for box in raw_boxes:
                if not isinstance(box, dict):
                    raise SchemaError("each box must be an object")
                try:
                    boxes.append(
                        BoundingBox(
                            x_min=box["x_min"],
                            y_min=box["y_min"],
                            x_max=box["x_max"],
                            y_max=box["y_max"],
                        )
                    )
                except KeyError as exc:
                    raise SchemaError(f"box missing field {exc}") from exc
            sentences.append(GroundedSentence(text=item["text"], boxes=tuple(boxes)))
        return cls(sentences=tuple(sentences))

    @classmethod
    def from_file(cls, path: str | Path) -> "GroundedReport":
        try:
            data = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise SchemaError(f"cannot read report {path}: {exc}") from exc
        return cls.from_json(data)


@dataclass(frozen=True)
class TupleSet:
    """Entity and relation tuples of a graph under set semantics."""

    entity_tuples: frozenset[EntityTuple]
    relation_tuples: frozenset[RelationTuple]

    def union_size(self) -> int:
        return len(self.entity_tuples) + len(self.relation_tuples)

    def is_empty(self) -> bool:
        return not self.entity_tuples and not self.relation_tuples


@dataclass(frozen=True)
class F1Breakdown:
    precision: float
    recall: float
    f1: float
    entity_f1: float
    relation_f1: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "entity_f1": self.entity_f1,
            "relation_f1": self.relation_f1,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "F1Breakdown":
        return cls(
            precision=doc["precision"],
            recall=doc["recall"],
            f1=doc["f1"],
            entity_f1=doc["entity_f1"],
            relation_f1=doc["relation_f1"],
            degenerate=doc.get("degenerate", False),
        )


def filter_grounded(report: GroundedReport, keep_all: bool = False) -> list[str]:
    """Sentences carrying at least one bounding box, in original order.

    ``keep_all`` supports free-form reports without grounding: every sentence
    is retained.
    """
    if keep_all:
        return [s.text for s in report.sentences]
    return [s.text for s in report.sentences if s.boxes]


def tuple_set(graph: EntityGraph, lex: Lexicon) -> TupleSet:
    """Collapse a graph to its normalized entity and relation tuples."""
    by_index: dict[int, EntityTuple] = {}
    for i, ent in enumerate(graph.entities):
        by_index[i] = (normalize_term(ent.tokens, lex), ent.label)
    relation_tuples = frozenset(
        (by_index[rel.head], rel.label, by_index[rel.tail]) for rel in graph.relations
    )
    return TupleSet(
        entity_tuples=frozenset(by_index.values()), relation_tuples=relation_tuples
    )


def _prf(overlap: int, n_pred: int, n_gt: int) -> tuple[float, float, float]:
    if n_pred == 0 and n_gt == 0:
        return 1.0, 1.0, 1.0
    precision = overlap / n_pred if n_pred else 0.0
    recall = overlap / n_gt if n_gt else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2.0 * precision * recall / (precision + recall)


def radgraph_f1(pred: TupleSet, gt: TupleSet) -> F1Breakdown:
    """Precision/recall/F1 over the union of entity and relation tuples.

    Both sets empty counts as vacuous agreement: f1 = 1.0 with the degenerate
    flag set. Exactly one empty side scores 0.0.
    """
    ent_overlap = len(pred.entity_tuples & gt.entity_tuples)
    rel_overlap = len(pred.relation_tuples & gt.relation_tuples)
    precision, recall, f1 = _prf(
        ent_overlap + rel_overlap, pred.union_size(), gt.union_size()
    )
    _, _, entity_f1 = _prf(ent_overlap, len(pred.entity_tuples), len(gt.entity_tuples))
    _, _, relation_f1 = _prf(
        rel_overlap, len(pred.relation_tuples), len(gt.relation_tuples)
    )
    return F1Breakdown(
        precision=precision,
        recall=recall,
        f1=f1,
        entity_f1=entity_f1,
        relation_f1=relation_f1,
        degenerate=pred.is_empty() and gt.is_empty(),
    )


@dataclass
class ScoreRecord:
    """Per-sample metric values plus the intermediate graphs for audit."""

    sample_id: str = ""
    finding: str = ""
    f1_breakdown: F1Breakdown | None = None
    alignment: float | None = None
    expert_mean: float | None = None
    provenance: dict[str, str] = field(default_factory=dict)
    gt_graph: EntityGraph | None = None
    pred_graph: EntityGraph | None = None

    def to_dict(self, include_graphs: bool = True) -> dict:
        doc: dict = {
            "sample_id": self.sample_id,
            "finding": self.finding,
            "f1_breakdown": self.f1_breakdown.to_dict() if self.f1_breakdown else None,
            "alignment": self.alignment,
            "expert_mean": self.expert_mean,
            "provenance": self.provenance,
        }
        if include_graphs:
            doc["graphs"] = {
                "gt": json.loads(serialize_graph(self.gt_graph)) if self.gt_graph else None,
                "pred": json.loads(serialize_graph(self.pred_graph)) if self.pred_graph else None,
            }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ScoreRecord":
        f1 = doc.get("f1_breakdown")
        return cls(
            sample_id=doc.get("sample_id", ""),
            finding=doc.get("finding", ""),
            f1_breakdown=F1Breakdown.from_dict(f1) if f1 else None,
            alignment=doc.get("alignment"),
            expert_mean=doc.get("expert_mean"),
            provenance=doc.get("provenance", {}),
        )


def score_graphs(
    gt_graph: EntityGraph, pred_graph: EntityGraph, lex: Lexicon
) -> F1Breakdown:
    """Compare two graphs directly (extraction bypassed)."""
    return radgraph_f1(tuple_set(pred_graph, lex), tuple_set(gt_graph, lex))


def score_sample(
    prompt: ClinicalAssertion,
    report: GroundedReport,
    lex: Lexicon,
    filter_to_grounded: bool = True,
) -> ScoreRecord:
    """Full pipeline for one sample: filter, extract, merge, compare.

    A report with no retained sentences yields an empty prediction and
    therefore f1 = 0.0 against the non-empty prompt graph.
    """
    gt_graph = assertion_to_graph(prompt)
    sentences = filter_grounded(report, keep_all=not filter_to_grounded)
    pred_graph = merge_graphs([extract_graph(s, lex) for s in sentences])
    breakdown = score_graphs(gt_graph, pred_graph, lex)
    return ScoreRecord(
        finding=prompt.pathology,
        f1_breakdown=breakdown,
        gt_graph=gt_graph,
        pred_graph=pred_graph,
    )
