"""Root alignment of reactions for the P2R, P2S, S2R and R2P tasks.

The source molecule is written from a chosen root; every target molecule is
then rooted at its atom whose map number appears earliest in the source
string, and targets are ordered by that same position. Map numbers are only
used to find roots; they never appear in the emitted strings.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .molgraph import (
    Molecule,
    MolGraphError,
    Reaction,
    UnmappedProductAtom,
    bond_diff,
    heavy_atom_count,
    implicit_h,
    split_fragments,
    strip_maps,
)
from .smiles import SPLIT_TOKEN, canonical_ranks, write_aligned, write_canonical

UnmappedProduct = UnmappedProductAtom


class Task(str, enum.Enum):
    P2R = "P2R"
    P2S = "P2S"
    S2R = "S2R"
    R2P = "R2P"

    @classmethod
    def coerce(cls, value) -> "Task":
        return value if isinstance(value, cls) else cls(str(value).upper())


class AlignmentError(MolGraphError):
    pass


class RootNotInProduct(AlignmentError):
    pass


class RootNotShared(AlignmentError):
    pass


class MapMismatch(AlignmentError):
    """A product map number is missing from, or repeated across, the reactants."""


class SynthonReactantMismatch(AlignmentError):
    pass


@dataclass(frozen=True)
class AlignedPair:
    task: Task
    source: str
    target: str
    root_map: int
    aug_index: int = 0
    seed: int = 0


@dataclass(frozen=True)
class SynthonSet:
    synthons: tuple[Molecule, ...]
    broken_bonds: frozenset[int]


def strip_atom_maps(m: Molecule) -> Molecule:
    return strip_maps(m)


def size_key(m: Molecule):
    """Sort key putting the 'largest' molecule first, deterministic on ties."""
    canon = write_canonical(m)
    maps = [a.map_num for a in m.atoms if a.map_num is not None]
    return (-heavy_atom_count(m), -len(canon), canon, min(maps) if maps else 0)


def largest(mols):
    return min(mols, key=size_key)


def _fragments(mols) -> list[Molecule]:
    out = []
    for m in mols:
        out.extend(split_fragments(m))
    return out


def _check_product(rxn: Reaction) -> Molecule:
    product = rxn.product
    if not product.is_connected():
        raise AlignmentError("product must be a single connected molecule")
    for i, atom in enumerate(product.atoms):
        if atom.map_num is None:
            raise UnmappedProduct(f"product atom {i} ({atom.element}) has no atom map")
    seen: dict[int, int] = {}
    for r, mol in enumerate(_fragments(rxn.reactants)):
        for mp in mol.map_index:
            if mp in seen:
                raise MapMismatch(f"map number {mp} occurs in more than one reactant")
            seen[mp] = r
    missing = [mp for mp in product.map_index if mp not in seen]
    if missing:
        raise MapMismatch(f"product map numbers {sorted(missing)} not found in reactants")
    return product


def _root_atom(m: Molecule, root_map: int, error=RootNotInProduct) -> int:
    idx = m.map_index.get(root_map)
    if idx is None:
        raise error(f"map number {root_map} not present")
    return idx


def _align_targets(targets, position: dict[int, int]) -> tuple[list[str], list[tuple[int, Molecule]]]:
    """Root each target at its earliest-written shared map and order them.

    Returns the ordered strings plus ``(root atom, molecule)`` for the aligned
    ones. Targets sharing no map with ``position`` go last, in canonical form.
    """
    aligned, loose = [], []
    for mol in targets:
        shared = [(position[a.map_num], i) for i, a in enumerate(mol.atoms) if a.map_num in position]
        if shared:
            first, root = min(shared)
            aligned.append((first, root, mol))
        else:
            loose.append(write_canonical(mol))
    aligned.sort(key=lambda t: t[0])
    strings = [write_aligned(mol, root)[0] for _, root, mol in aligned]
    return strings + sorted(loose), [(root, mol) for _, root, mol in aligned]


def _positions(m: Molecule, order: list[int]) -> dict[int, int]:
    return {m.atoms[i].map_num: p for p, i in enumerate(order) if m.atoms[i].map_num is not None}


def align_p2r(rxn: Reaction, root_map: int) -> AlignedPair:
    product = _check_product(rxn)
    root = _root_atom(product, root_map)
    source, order = write_aligned(product, root)
    targets, _ = _align_targets(_fragments(rxn.reactants), _positions(product, order))
    return AlignedPair(Task.P2R, source, ".".join(targets), root_map)


def extract_synthons(rxn: Reaction) -> SynthonSet:
    """Cut the product's reaction-centre bonds and split it into synthons.

    Atoms that lose a bond have their hydrogen counts re-derived from the
    valence model when the product's count was the implied one, so mapless
    synthon strings read as plain organic atoms.
    """
    product = _check_product(rxn)
    diff = bond_diff(rxn)
    if not diff.broken:
        return SynthonSet((product,), diff.broken)
    touched = set()
    for k in diff.broken:
        touched.update((product.bonds[k].a, product.bonds[k].b))
    atoms = list(product.atoms)
    for i in touched:
        if atoms[i].explicit_h is not None and atoms[i].explicit_h == implicit_h(product, i):
            atoms[i] = replace(atoms[i], explicit_h=None)
    kept = tuple(b for k, b in enumerate(product.bonds) if k not in diff.broken)
    cut = Molecule(tuple(atoms), kept)
    return SynthonSet(tuple(split_fragments(cut)), diff.broken)


def _synthon_root(product: Molecule, synthons: SynthonSet, root_map: int | None) -> int:
    big = largest(synthons.synthons)
    if root_map is None:
        root_map = big.atoms[canonical_ranks(big).index(0)].map_num
    elif root_map not in big.map_index:
        raise RootNotInProduct(f"map number {root_map} is not an atom of the largest synthon")
    return _root_atom(product, root_map)


def _p2s_parts(rxn: Reaction, root_map: int | None):
    product = _check_product(rxn)
    synthons = extract_synthons(rxn)
    root = _synthon_root(product, synthons, root_map)
    source, order = write_aligned(product, root)
    position = _positions(product, order)
    strings, rooted = _align_targets(synthons.synthons, position)
    return product, root, source, strings, rooted


def align_p2s(rxn: Reaction, root_map: int | None = None) -> AlignedPair:
    """Product -> synthons, with the product rooted inside the largest synthon.

    ``root_map`` defaults to the canonical root of the largest synthon.
    """
    product, root, source, strings, _ = _p2s_parts(rxn, root_map)
    return AlignedPair(Task.P2S, source, ".".join(strings), product.atoms[root].map_num)


def align_s2r(rxn: Reaction, root_map: int | None = None) -> AlignedPair:
    product, root, source, synthon_strings, rooted = _p2s_parts(rxn, root_map)
    reactants = _fragments(rxn.reactants)
    owner = {}
    for r, mol in enumerate(reactants):
        for mp in mol.map_index:
            owner[mp] = r
    used: list[int] = []
    parts: list[str] = []
    for syn_root, syn in rooted:
        hosts = {owner[mp] for mp in syn.map_index}
        if len(hosts) != 1:
            raise SynthonReactantMismatch(
                f"synthon rooted at map {syn.atoms[syn_root].map_num} spans {len(hosts)} reactants"
            )
        r = hosts.pop()
        if r in used:
            continue
        used.append(r)
        mol = reactants[r]
        parts.append(write_aligned(mol, mol.map_index[syn.atoms[syn_root].map_num])[0])
    rest = sorted(write_canonical(mol) for r, mol in enumerate(reactants) if r not in used)
    src = f"{source} {SPLIT_TOKEN} {'.'.join(synthon_strings)}"
    return AlignedPair(Task.S2R, src, ".".join(parts + rest), product.atoms[root].map_num)


def r2p_root_candidates(rxn: Reaction) -> list[int]:
    """Map numbers of the largest reactant that survive into the product, canonical order."""
    product = _check_product(rxn)
    reactants = _fragments(rxn.reactants)
    shared = [m for m in reactants if any(mp in product.map_index for mp in m.map_index)]
    big = largest(shared)
    ranks = canonical_ranks(big)
    atoms = sorted(range(len(big.atoms)), key=lambda i: ranks[i])
    return [big.atoms[i].map_num for i in atoms if big.atoms[i].map_num in product.map_index]


def align_r2p(rxn: Reaction, reactant_root_map: int | None = None, reagents: tuple = ()) -> AlignedPair:
    """Reactants -> product, rooted at a shared atom of the largest reactant.

    ``reagents`` (already-separated reagent molecules) are appended to the
    source after a ``>`` in canonical form.
    """
    product = _check_product(rxn)
    reactants = _fragments(rxn.reactants)
    candidates = r2p_root_candidates(rxn)
    if reactant_root_map is None:
        reactant_root_map = candidates[0]
    elif reactant_root_map not in candidates:
        if reactant_root_map not in product.map_index:
            raise RootNotShared(f"map number {reactant_root_map} does not occur in the product")
        raise RootNotShared(f"map number {reactant_root_map} is not on the largest reactant")
    p_root = _root_atom(product, reactant_root_map, RootNotShared)
    target, order = write_aligned(product, p_root)
    position = _positions(product, order)
    big_index = next(k for k, m in enumerate(reactants) if reactant_root_map in m.map_index)
    big = reactants[big_index]
    first = write_aligned(big, big.map_index[reactant_root_map])[0]
    others = [m for k, m in enumerate(reactants) if k != big_index]
    rest, _ = _align_targets(others, position)
    source = ".".join([first] + rest)
    if reagents:
        source += ">" + ".".join(sorted(write_canonical(m) for m in _fragments(reagents)))
    return AlignedPair(Task.R2P, source, target, reactant_root_map)


def align(rxn: Reaction, task: Task | str, root_map: int | None = None) -> AlignedPair:
    """Dispatch to the per-task aligner; ``root_map`` None means canonical root."""
    task = Task.coerce(task)
    if task is Task.P2R:
        if root_map is None:
            product = _check_product(rxn)
            root_map = product.atoms[canonical_ranks(product).index(0)].map_num
        return align_p2r(rxn, root_map)
    if task is Task.P2S:
        return align_p2s(rxn, root_map)
    if task is Task.S2R:
        return align_s2r(rxn, root_map)
    return align_r2p(rxn, root_map, rxn.reagents)
