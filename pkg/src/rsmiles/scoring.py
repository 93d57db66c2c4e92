"""Rank aggregation of beam outputs from several augmented inputs.

Every valid prediction at beam rank ``k`` of any input variant contributes
``1 / (1 + alpha * (k - 1))`` to its canonical form; ``alpha = 1`` gives the
plain reciprocal-rank ``1 / k``. Invalid predictions contribute nothing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .smiles import canonicalize


@dataclass(frozen=True)
class BeamOutputs:
    variants: tuple[tuple[str, ...], ...]
    beam: int
    topk: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(tuple(v) for v in self.variants))
        for v in self.variants:
            if len(v) > self.beam:
                raise ValueError(f"variant has {len(v)} predictions for beam size {self.beam}")

    @property
    def augmentation(self) -> int:
        return len(self.variants)

    @classmethod
    def from_flat(cls, lines: Sequence[str], augmentation: int, beam: int, topk: int | None = None):
        """Variant-major flat list (``augmentation * beam`` lines) to BeamOutputs."""
        if len(lines) != augmentation * beam:
            raise ValueError(f"expected {augmentation * beam} predictions, got {len(lines)}")
        variants = [tuple(lines[v * beam:(v + 1) * beam]) for v in range(augmentation)]
        return cls(tuple(variants), beam, topk)


@dataclass(frozen=True)
class ScoringConfig:
    alpha: float = 1.0
    topk_out: int = 10

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


@dataclass(frozen=True)
class ScoredCandidate:
    canonical: str
    score: float
    final_rank: int = field(default=0)


def score_of_rank(k: int, alpha: float = 1.0) -> float:
    if k < 1:
        raise ValueError("rank must be >= 1")
    return 1.0 / (1.0 + alpha * (k - 1))


def aggregate_scores(outputs: BeamOutputs, alpha: float = 1.0, canon=canonicalize) -> dict[str, float]:
    cutoff = outputs.topk or outputs.beam
    scores: dict[str, float] = {}
    for variant in outputs.variants:
        for k, pred in enumerate(variant[:cutoff], start=1):
            key = canon(pred.replace(" ", ""))
            if not key:
                continue
            scores[key] = scores.get(key, 0.0) + score_of_rank(k, alpha)
    return scores


def rank_scores(scores: dict[str, float], topk_out: int | None = None) -> list[ScoredCandidate]:
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    if topk_out is not None:
        ordered = ordered[:topk_out]
    return [ScoredCandidate(c, s, r) for r, (c, s) in enumerate(ordered, start=1)]


def aggregate(outputs: BeamOutputs, cfg: ScoringConfig = ScoringConfig()) -> list[ScoredCandidate]:
    return rank_scores(aggregate_scores(outputs, cfg.alpha), cfg.topk_out)
