"""Training/test augmentation by root enumeration, and token masking for pretraining."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

from .align import (
    AlignedPair,
    Task,
    align,
    extract_synthons,
    largest,
    r2p_root_candidates,
)
from .molgraph import Molecule, Reaction
from .smiles import canonical_ranks, random_smiles, write_canonical


@dataclass(frozen=True)
class AugmentConfig:
    factor: int = 1
    seed: int = 0
    task: Task = Task.P2R

    def __post_init__(self):
        if self.factor < 1:
            raise ValueError("augmentation factor must be >= 1")
        object.__setattr__(self, "task", Task.coerce(self.task))


def record_seed(seed: int, index: int) -> int:
    """Per-record seed; identical for serial and parallel runs."""
    return seed ^ index


def _ranked_root_maps(mol: Molecule) -> list[int]:
    ranks = canonical_ranks(mol)
    return [mol.atoms[i].map_num for i in sorted(range(len(mol.atoms)), key=ranks.__getitem__)]


def root_candidates(rxn: Reaction, task: Task) -> list[int]:
    """Root map numbers available to ``task``, canonical root first."""
    if task is Task.P2R:
        return _ranked_root_maps(rxn.product)
    if task in (Task.P2S, Task.S2R):
        return _ranked_root_maps(largest(extract_synthons(rxn).synthons))
    return r2p_root_candidates(rxn)


def choose_roots(candidates: list[int], factor: int, rng: random.Random) -> list[int]:
    """Canonical root first, then distinct random roots, then repeats."""
    rest = candidates[1:]
    rng.shuffle(rest)
    roots = [candidates[0]] + rest[: factor - 1]
    while len(roots) < factor:
        roots.append(rng.choice(candidates))
    return roots


def augment_training(rxn: Reaction, cfg: AugmentConfig, index: int = 0) -> list[AlignedPair]:
    seed = record_seed(cfg.seed, index)
    rng = random.Random(seed)
    roots = choose_roots(root_candidates(rxn, cfg.task), cfg.factor, rng)
    return [
        replace(align(rxn, cfg.task, root), aug_index=k, seed=seed)
        for k, root in enumerate(roots)
    ]


def augment_test(product: Molecule, cfg: AugmentConfig, index: int = 0) -> list[str]:
    """``factor`` input variants: the canonical string, then random SMILES.

    Variants are distinct while the molecule admits enough distinct strings;
    otherwise earlier variants are repeated so the count stays ``factor``.
    """
    rng = random.Random(record_seed(cfg.seed, index))
    canon = write_canonical(product)
    out = [canon]
    seen = {canon}
    n = len(product.atoms)
    roots = list(range(n))
    rng.shuffle(roots)
    attempts = 0
    while len(out) < cfg.factor and attempts < 20 * cfg.factor + n:
        root = roots[attempts] if attempts < n else rng.randrange(n)
        attempts += 1
        s = random_smiles(product, rng, root)
        if s not in seen:
            seen.add(s)
            out.append(s)
    k = 0
    while len(out) < cfg.factor:
        out.append(out[k % len(out)])
        k += 1
    return out


# -- masking ----------------------------------------------------------------------


class EmptyVocabulary(ValueError):
    pass


@dataclass(frozen=True)
class MaskConfig:
    mask_rate: float = 0.15
    unknown_rate: float = 0.80
    random_rate: float = 0.10
    keep_rate: float = 0.10
    unknown_token: str = "<unk>"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mask_rate <= 1.0:
            raise ValueError("mask_rate must be a probability")
        total = self.unknown_rate + self.random_rate + self.keep_rate
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"unknown/random/keep rates must sum to 1, got {total}")


@dataclass(frozen=True)
class MaskedLine:
    tokens: tuple[str, ...]
    positions: tuple[int, ...]
    originals: tuple[str, ...]
    # "unknown", "random" or "keep" per masked position
    kinds: tuple[str, ...]


def build_vocabulary(lines, exclude: str | None = None) -> list[str]:
    vocab = {tok for line in lines for tok in line}
    vocab.discard(exclude)
    return sorted(vocab)


def mask_corpus(lines, cfg: MaskConfig) -> list[MaskedLine]:
    """BERT-style masking: each token is selected with probability ``mask_rate``.

    A selected token becomes ``unknown_token`` (``unknown_rate``), a uniform
    draw from the corpus vocabulary (``random_rate``), or stays as it is.
    """
    lines = [list(line) for line in lines]
    vocab = build_vocabulary(lines, exclude=cfg.unknown_token)
    if not vocab and cfg.mask_rate > 0:
        raise EmptyVocabulary("no tokens to build a replacement vocabulary from")
    out = []
    for index, line in enumerate(lines):
        rng = random.Random(record_seed(cfg.seed, index))
        tokens = list(line)
        positions, originals, kinds = [], [], []
        for p, tok in enumerate(line):
            if rng.random() >= cfg.mask_rate:
                continue
            u = rng.random()
            if u < cfg.unknown_rate:
                tokens[p], kind = cfg.unknown_token, "unknown"
            elif u < cfg.unknown_rate + cfg.random_rate:
                tokens[p], kind = vocab[rng.randrange(len(vocab))], "random"
            else:
                kind = "keep"
            positions.append(p)
            originals.append(tok)
            kinds.append(kind)
        out.append(MaskedLine(tuple(tokens), tuple(positions), tuple(originals), tuple(kinds)))
    return out
