"""Molecular graph model: atoms, bonds, molecules and reactions.

Hydrogens are not graph atoms unless written as explicit ``[H]`` atoms; a
bracket atom's hydrogen count lives on :attr:`Atom.explicit_h` and
unbracketed organic atoms get theirs from the default valence model
(:func:`implicit_h`).

Chirality tags are stored relative to a *reference neighbour order*: the
implicit hydrogen first (when the atom carries one), then the bonded
neighbours in ascending atom index. The parser and the writer translate
between that order and the textual order of a particular SMILES string.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property

import networkx as nx
from networkx.algorithms import isomorphism as nx_iso

# fmt: off
ELEMENTS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga",
    "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd",
    "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm",
    "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os",
    "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa",
    "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg",
    "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)
# fmt: on
ATOMIC_NUMBER = {sym: z for z, sym in enumerate(ELEMENTS, start=1)}

AROMATIC_ELEMENTS = frozenset({"B", "C", "N", "O", "P", "S", "Se", "As", "Te"})
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
ORGANIC_AROMATIC = frozenset({"B", "C", "N", "O", "P", "S"})

DEFAULT_VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}


class Chirality(str, enum.Enum):
    NONE = ""
    ANTICLOCKWISE = "@"
    CLOCKWISE = "@@"

    def flipped(self) -> "Chirality":
        if self is Chirality.ANTICLOCKWISE:
            return Chirality.CLOCKWISE
        if self is Chirality.CLOCKWISE:
            return Chirality.ANTICLOCKWISE
        return self


class BondOrder(enum.IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


class BondStereo(str, enum.Enum):
    NONE = ""
    UP = "/"
    DOWN = "\\"

    def flipped(self) -> "BondStereo":
        if self is BondStereo.UP:
            return BondStereo.DOWN
        if self is BondStereo.DOWN:
            return BondStereo.UP
        return self


class MolGraphError(ValueError):
    pass


class UnmappedProductAtom(MolGraphError):
    """A product atom has no atom-map number."""


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    isotope: int | None = None
    aromatic: bool = False
    explicit_h: int | None = None
    chirality: Chirality = Chirality.NONE
    map_num: int | None = None

    def __post_init__(self):
        if self.element not in ATOMIC_NUMBER:
            raise MolGraphError(f"unknown element {self.element!r}")
        if self.map_num is not None and self.map_num < 1:
            raise MolGraphError(f"atom-map number must be >= 1, got {self.map_num}")
        if self.aromatic and self.element not in AROMATIC_ELEMENTS:
            raise MolGraphError(f"{self.element} cannot be aromatic")
        if self.explicit_h is not None and self.explicit_h < 0:
            raise MolGraphError("negative hydrogen count")

    @property
    def atomic_number(self) -> int:
        return ATOMIC_NUMBER[self.element]


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE
    # direction of a '/' or '\' symbol read from atom a towards atom b
    stereo: BondStereo = BondStereo.NONE

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a

    @property
    def pair(self) -> frozenset:
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...] = ()
    bonds: tuple[Bond, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        n = len(self.atoms)
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise MolGraphError(f"bond {bond.a}-{bond.b} references a missing atom")
            if bond.a == bond.b:
                raise MolGraphError(f"self-bond on atom {bond.a}")
            if bond.pair in seen:
                raise MolGraphError(f"duplicate bond {bond.a}-{bond.b}")
            seen.add(bond.pair)
        maps = [a.map_num for a in self.atoms if a.map_num is not None]
        if len(maps) != len(set(maps)):
            raise MolGraphError("duplicate atom-map numbers within one molecule")

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per atom, ``(neighbour, bond index)`` pairs in bond order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for k, bond in enumerate(self.bonds):
            adj[bond.a].append((bond.b, k))
            adj[bond.b].append((bond.a, k))
        return tuple(tuple(x) for x in adj)

    @cached_property
    def bond_index(self) -> dict[frozenset, int]:
        return {bond.pair: k for k, bond in enumerate(self.bonds)}

    @cached_property
    def map_index(self) -> dict[int, int]:
        return {a.map_num: i for i, a in enumerate(self.atoms) if a.map_num is not None}

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def bond_between(self, i: int, j: int) -> Bond | None:
        k = self.bond_index.get(frozenset((i, j)))
        return None if k is None else self.bonds[k]

    @cached_property
    def total_hs(self) -> tuple[int, ...]:
        return tuple(
            a.explicit_h if a.explicit_h is not None else implicit_h(self, i)
            for i, a in enumerate(self.atoms)
        )

    @cached_property
    def components(self) -> tuple[tuple[int, ...], ...]:
        """Connected components as sorted atom-index tuples, ordered by lowest index."""
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            seen[start] = True
            stack, comp = [start], []
            while stack:
                i = stack.pop()
                comp.append(i)
                for j, _ in self.adjacency[i]:
                    if not seen[j]:
                        seen[j] = True
                        stack.append(j)
            out.append(tuple(sorted(comp)))
        return tuple(out)

    def is_connected(self) -> bool:
        return len(self.components) <= 1

    def submolecule(self, indices) -> "Molecule":
        """Induced subgraph on ``indices`` (kept in ascending order)."""
        indices = sorted(indices)
        remap = {old: new for new, old in enumerate(indices)}
        atoms = [self.atoms[i] for i in indices]
        bonds = [
            replace(b, a=remap[b.a], b=remap[b.b])
            for b in self.bonds
            if b.a in remap and b.b in remap
        ]
        return Molecule(tuple(atoms), tuple(bonds))


@dataclass(frozen=True)
class Reaction:
    reactants: tuple[Molecule, ...]
    reagents: tuple[Molecule, ...] = ()
    products: tuple[Molecule, ...] = ()
    source_id: str | None = None
    class_label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("reactants", "reagents", "products"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def product(self) -> Molecule:
        if len(self.products) != 1:
            raise MolGraphError(f"expected exactly one product, found {len(self.products)}")
        return self.products[0]


def implicit_h(m: Molecule, i: int) -> int:
    """Hydrogens implied for atom ``i`` if it were written without brackets."""
    atom = m.atoms[i]
    valences = DEFAULT_VALENCES.get(atom.element)
    if valences is None or atom.charge or atom.isotope is not None:
        return 0
    total = 0
    for _, k in m.adjacency[i]:
        order = m.bonds[k].order
        total += 1 if order is BondOrder.AROMATIC else int(order)
    if atom.aromatic:
        total += 1
    for v in valences:
        if v >= total:
            return v - total
    return 0


def heavy_atom_count(m: Molecule) -> int:
    return sum(1 for a in m.atoms if a.element != "H")


def split_fragments(m: Molecule) -> list[Molecule]:
    return [m.submolecule(comp) for comp in m.components]


def combine(mols) -> Molecule:
    """Disjoint union, atoms renumbered consecutively in argument order."""
    atoms, bonds, offset = [], [], 0
    for mol in mols:
        atoms.extend(mol.atoms)
        bonds.extend(replace(b, a=b.a + offset, b=b.b + offset) for b in mol.bonds)
        offset += len(mol.atoms)
    return Molecule(tuple(atoms), tuple(bonds))


def strip_maps(m: Molecule) -> Molecule:
    if all(a.map_num is None for a in m.atoms):
        return m
    return Molecule(tuple(replace(a, map_num=None) for a in m.atoms), m.bonds)


def ring_bond_set(m: Molecule) -> set[int]:
    """Indices of bonds lying on at least one cycle (every non-bridge bond)."""
    if not m.bonds:
        return set()
    g = nx.Graph()
    g.add_nodes_from(range(len(m.atoms)))
    g.add_edges_from((b.a, b.b) for b in m.bonds)
    bridges = {frozenset(e) for e in nx.bridges(g)}
    return {k for k, b in enumerate(m.bonds) if b.pair not in bridges}


def permutation_parity(seq, reference) -> int:
    """0 if ``seq`` is an even permutation of ``reference``, else 1."""
    pos = {x: k for k, x in enumerate(reference)}
    perm = [pos[x] for x in seq]
    parity = 0
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity ^= (length - 1) & 1
    return parity


HYDROGEN_SLOT = -1


def reference_order(m: Molecule, i: int) -> list[int]:
    """Reference neighbour order that chirality tags are expressed against."""
    order = [HYDROGEN_SLOT] if m.total_hs[i] == 1 else []
    order.extend(sorted(j for j, _ in m.adjacency[i]))
    return order


def _node_key(atom: Atom, respect_maps: bool):
    key = (atom.element, atom.charge, atom.isotope, atom.aromatic, atom.chirality is not Chirality.NONE)
    if respect_maps:
        key += (atom.map_num,)
    return key


def _chirality_consistent(m1: Molecule, m2: Molecule, mapping: dict[int, int]) -> bool:
    for i, atom in enumerate(m1.atoms):
        if atom.chirality is Chirality.NONE:
            continue
        j = mapping[i]
        ref1 = reference_order(m1, i)
        image = [x if x == HYDROGEN_SLOT else mapping[x] for x in ref1]
        ref2 = reference_order(m2, j)
        if sorted(image) != sorted(ref2):
            return False
        tag = atom.chirality.flipped() if permutation_parity(image, ref2) else atom.chirality
        if tag is not m2.atoms[j].chirality:
            return False
    return True


def _to_nx(m: Molecule, respect_maps: bool) -> nx.Graph:
    g = nx.Graph()
    for i, atom in enumerate(m.atoms):
        g.add_node(i, key=_node_key(atom, respect_maps))
    for b in m.bonds:
        g.add_edge(b.a, b.b, order=int(b.order))
    return g


def is_isomorphic(m1: Molecule, m2: Molecule, respect_maps: bool = False) -> bool:
    """Attribute-preserving graph isomorphism.

    Compared: element, charge, isotope, aromaticity, chirality (with
    neighbour-order parity taken into account) and bond order. Directional
    bond marks and hydrogen counts are ignored.
    """
    if len(m1.atoms) != len(m2.atoms) or len(m1.bonds) != len(m2.bonds):
        return False
    keys1 = sorted(map(repr, (_node_key(a, respect_maps) for a in m1.atoms)))
    keys2 = sorted(map(repr, (_node_key(a, respect_maps) for a in m2.atoms)))
    if keys1 != keys2:
        return False
    matcher = nx_iso.GraphMatcher(
        _to_nx(m1, respect_maps),
        _to_nx(m2, respect_maps),
        node_match=lambda x, y: x["key"] == y["key"],
        edge_match=lambda x, y: x["order"] == y["order"],
    )
    chiral = any(a.chirality is not Chirality.NONE for a in m1.atoms)
    for mapping in matcher.isomorphisms_iter():
        if not chiral or _chirality_consistent(m1, m2, mapping):
            return True
    return False


@dataclass(frozen=True)
class BondDiff:
    broken: frozenset[int]
    formed: frozenset[tuple[int, int]]


def _pair(x: int, y: int) -> tuple[int, int]:
    return (x, y) if x < y else (y, x)


def reactant_bond_table(reactants) -> dict[tuple[int, int], tuple[int, int, BondOrder]]:
    """Mapped bonds across all reactants: map pair -> (reactant idx, bond idx, order)."""
    table = {}
    for r, mol in enumerate(reactants):
        for k, b in enumerate(mol.bonds):
            ma, mb = mol.atoms[b.a].map_num, mol.atoms[b.b].map_num
            if ma is not None and mb is not None:
                table[_pair(ma, mb)] = (r, k, b.order)
    return table


def bond_diff(rxn: Reaction) -> BondDiff:
    """Bonds that differ between the mapped product and the mapped reactants.

    ``broken`` holds product bond indices whose atom pair is unbonded, or
    bonded with another order, across the reactants. ``formed`` holds map
    pairs of reactant bonds between product-mapped atoms that are absent
    from the product or present with another order.
    """
    product = rxn.product
    for i, atom in enumerate(product.atoms):
        if atom.map_num is None:
            raise UnmappedProductAtom(f"product atom {i} ({atom.element}) has no atom map")
    rtable = reactant_bond_table(rxn.reactants)
    ptable = {}
    broken = set()
    for k, b in enumerate(product.bonds):
        pair = _pair(product.atoms[b.a].map_num, product.atoms[b.b].map_num)
        ptable[pair] = b.order
        hit = rtable.get(pair)
        if hit is None or hit[2] != b.order:
            broken.add(k)
    pmaps = set(product.map_index)
    formed = set()
    for pair, (_, _, order) in rtable.items():
        if pair[0] in pmaps and pair[1] in pmaps and ptable.get(pair) != order:
            formed.add(pair)
    return BondDiff(frozenset(broken), frozenset(formed))
