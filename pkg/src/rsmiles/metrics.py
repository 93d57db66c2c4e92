"""Edit distances, exact-match and MaxFrag accuracy, dataset statistics,
and reaction classification by ring change, chirality and new atoms."""
from __future__ import annotations

import enum
import random
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

from rapidfuzz.distance import Levenshtein

from .align import AlignedPair, Task, largest
from .augment import AugmentConfig, augment_training, record_seed
from .molgraph import (
    Chirality,
    Reaction,
    bond_diff,
    reactant_bond_table,
    ring_bond_set,
    split_fragments,
)
from .smiles import SmilesError, parse, random_smiles, tokenize_line, write_canonical


class LengthMismatch(ValueError):
    pass


def edit_distance(a: str, b: str, tokens: bool = False) -> int:
    """Levenshtein distance over characters (or SMILES tokens with ``tokens``)."""
    if tokens:
        return Levenshtein.distance(tokenize_line(a), tokenize_line(b))
    return Levenshtein.distance(a, b)


# -- accuracy -------------------------------------------------------------------


def _fragment_key(smiles: str) -> tuple[str, ...] | None:
    try:
        mol = parse(smiles.replace(" ", ""))
    except SmilesError:
        return None
    return tuple(sorted(write_canonical(f) for f in split_fragments(mol)))


def _largest_fragment_key(smiles: str) -> str | None:
    try:
        mol = parse(smiles.replace(" ", ""))
    except SmilesError:
        return None
    return write_canonical(largest(split_fragments(mol)))


def _accuracy(predictions, truths, ks, key) -> dict[int, float]:
    if len(predictions) != len(truths):
        raise LengthMismatch(f"{len(predictions)} prediction lists for {len(truths)} truths")
    ks = sorted(ks)
    hits = Counter()
    for preds, truth in zip(predictions, truths):
        target = key(truth)
        first = None
        for rank, pred in enumerate(preds[: ks[-1]], start=1):
            if target is not None and key(pred) == target:
                first = rank
                break
        for k in ks:
            if first is not None and first <= k:
                hits[k] += 1
    n = len(truths)
    return {k: (hits[k] / n if n else 0.0) for k in ks}


def topk_accuracy(predictions, truths, ks=(1, 3, 5, 10)) -> dict[int, float]:
    """Fraction of records whose truth is among the first k predictions.

    Predictions and truths are compared as multisets of canonical fragments.
    """
    return _accuracy(predictions, truths, ks, _fragment_key)


def maxfrag_accuracy(predictions, truths, ks=(1, 3, 5, 10)) -> dict[int, float]:
    """Like :func:`topk_accuracy` but only the largest fragment must match."""
    return _accuracy(predictions, truths, ks, _largest_fragment_key)


# -- dataset statistics ---------------------------------------------------------


@dataclass(frozen=True)
class DatasetStats:
    n_records: int
    mean_product_len: float
    mean_reactant_len: float
    mean_edit_distance_plain: float
    mean_edit_distance_aligned: float

    @property
    def reduction(self) -> float:
        """Relative drop of the aligned distance versus the plain one."""
        if not self.mean_edit_distance_plain:
            return 0.0
        return 1.0 - self.mean_edit_distance_aligned / self.mean_edit_distance_plain

    def as_dict(self) -> dict:
        return {**asdict(self), "reduction": self.reduction}


def plain_pairs(rxn: Reaction, factor: int, seed: int, index: int = 0) -> list[tuple[str, str]]:
    """Unaligned (product, reactants) strings: canonical first, then randomized.

    Randomized variants write every molecule from an independent random root
    with random branch order; reactant fragments keep canonical order.
    """
    product = rxn.product
    reactants = [f for r in rxn.reactants for f in split_fragments(r)]
    reactants.sort(key=write_canonical)
    pairs = [(write_canonical(product), ".".join(write_canonical(r) for r in reactants))]
    base = record_seed(seed, index)
    for k in range(1, factor):
        rng = random.Random(f"{base}:{k}")
        p = random_smiles(product, rng)
        r = ".".join(random_smiles(m, rng) for m in reactants)
        pairs.append((p, r))
    return pairs


@dataclass(frozen=True)
class RecordStats:
    """Integer sums for one record; summed exactly across records."""

    pairs: int
    product_len: int
    reactant_len: int
    plain: int
    aligned: int


def record_stats(rxn: Reaction, factor: int, seed: int, index: int) -> RecordStats:
    plain = plain_pairs(rxn, factor, seed, index)
    aligned = augment_training(rxn, AugmentConfig(factor, seed, Task.P2R), index)
    return RecordStats(
        pairs=factor,
        product_len=sum(len(p) for p, _ in plain),
        reactant_len=sum(len(r) for _, r in plain),
        plain=sum(edit_distance(p, r) for p, r in plain),
        aligned=sum(edit_distance(a.source, a.target) for a in aligned),
    )


def merge_stats(parts: Sequence[RecordStats]) -> DatasetStats:
    n = sum(p.pairs for p in parts)
    if not n:
        return DatasetStats(0, 0.0, 0.0, 0.0, 0.0)
    return DatasetStats(
        n_records=n,
        mean_product_len=sum(p.product_len for p in parts) / n,
        mean_reactant_len=sum(p.reactant_len for p in parts) / n,
        mean_edit_distance_plain=sum(p.plain for p in parts) / n,
        mean_edit_distance_aligned=sum(p.aligned for p in parts) / n,
    )


def table2_stats(rxns: Sequence[Reaction], factor: int = 1, seed: int = 0) -> DatasetStats:
    """Mean string lengths and product/reactant edit distances, with and
    without root alignment, over ``factor`` augmented pairs per reaction."""
    return merge_stats([record_stats(rxn, factor, seed, i) for i, rxn in enumerate(rxns)])


# -- reaction classification ------------------------------------------------------


class RingChange(str, enum.Enum):
    NON_RING = "non_ring"
    RING_OPENING = "ring_opening"
    RING_FORMING = "ring_forming"


@dataclass(frozen=True)
class ReactionClass:
    kind: RingChange
    chirality: bool
    new_atom_count: int


def classify_reaction(rxn: Reaction) -> ReactionClass:
    """Label a mapped reaction by ring change, chirality and new reactant atoms.

    Ring forming: a product ring bond has no counterpart bond in the reactants.
    Ring opening: a reactant ring bond between product atoms has no counterpart
    in the product. Bonds that only change order count for neither. When both
    happen the side with more such bonds wins; a tie is ring forming.
    """
    product = rxn.product
    diff = bond_diff(rxn)
    rtable = reactant_bond_table(rxn.reactants)
    p_rings = ring_bond_set(product)
    forming = 0
    for k in diff.broken:
        b = product.bonds[k]
        pair = tuple(sorted((product.atoms[b.a].map_num, product.atoms[b.b].map_num)))
        if pair not in rtable and k in p_rings:
            forming += 1
    p_pairs = {
        tuple(sorted((product.atoms[b.a].map_num, product.atoms[b.b].map_num))) for b in product.bonds
    }
    ring_sets = {}
    opening = 0
    for pair in diff.formed:
        if pair in p_pairs:
            continue
        r, k, _ = rtable[pair]
        if r not in ring_sets:
            ring_sets[r] = ring_bond_set(rxn.reactants[r])
        if k in ring_sets[r]:
            opening += 1
    if forming and forming >= opening:
        kind = RingChange.RING_FORMING
    elif opening:
        kind = RingChange.RING_OPENING
    else:
        kind = RingChange.NON_RING
    mols = [*rxn.reactants, *rxn.reagents, *rxn.products]
    chiral = any(a.chirality is not Chirality.NONE for m in mols for a in m.atoms)
    pmaps = set(product.map_index)
    new_atoms = sum(
        1
        for m in rxn.reactants
        for a in m.atoms
        if a.element != "H" and (a.map_num is None or a.map_num not in pmaps)
    )
    return ReactionClass(kind, chiral, new_atoms)


def cohort_report(
    rxns: Sequence[Reaction],
    pairs: Sequence[AlignedPair],
    predictions: Sequence[Sequence[str]] | None = None,
    ks=(1, 3, 5, 10),
) -> dict[str, dict]:
    """Mean pair edit distance and top-k accuracy per reaction cohort.

    Cohorts: ``overall``, ``kind=<ring change>``, ``chirality=<bool>`` and
    ``new_atoms=<count>``. Empty cohorts are left out. The truth for each
    record is its pair's target.
    """
    if len(rxns) != len(pairs) or (predictions is not None and len(predictions) != len(rxns)):
        raise LengthMismatch("reactions, pairs and predictions must have one entry per record")
    groups: dict[str, list[int]] = {"overall": list(range(len(rxns)))}
    for i, rxn in enumerate(rxns):
        label = classify_reaction(rxn)
        for name in (
            f"kind={label.kind.value}",
            f"chirality={str(label.chirality).lower()}",
            f"new_atoms={label.new_atom_count}",
        ):
            groups.setdefault(name, []).append(i)
    report = {}
    for name, members in groups.items():
        if not members:
            continue
        row = {
            "n": len(members),
            "mean_edit_distance": sum(edit_distance(pairs[i].source, pairs[i].target) for i in members)
            / len(members),
        }
        if predictions is not None:
            acc = topk_accuracy([predictions[i] for i in members], [pairs[i].target for i in members], ks)
            row.update({f"top{k}": v for k, v in acc.items()})
        report[name] = row
    return report
