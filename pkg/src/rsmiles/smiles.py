"""SMILES tokenizer, parser and writers.

The writer is a depth-first traversal from a chosen root atom. Children of
every atom are visited in ascending ``neighbor_rank``; every child but the
last is written as a parenthesised branch. Canonical output uses iterative
neighbourhood refinement for the ranks and searches over tie-breaks for the
lexicographically smallest string.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

from .molgraph import (
    AROMATIC_ELEMENTS,
    ATOMIC_NUMBER,
    HYDROGEN_SLOT,
    ORGANIC_AROMATIC,
    ORGANIC_SUBSET,
    Atom,
    Bond,
    BondOrder,
    BondStereo,
    Chirality,
    Molecule,
    implicit_h,
    permutation_parity,
    reference_order,
)

SPLIT_TOKEN = "<split>"
REACTION_ARROW = ">"
RESERVED_TOKENS = frozenset({SPLIT_TOKEN, REACTION_ARROW})

_TOKEN_RE = re.compile(
    r"\[[^\[\]]*\]|Br|Cl|B|C|N|O|P|S|F|I|b|c|n|o|s|p"
    r"|\(|\)|\.|=|#|-|/|\\|:|~|%\d{2}|\d|<split>|>"
)
_BRACKET_RE = re.compile(
    r"\[(?P<isotope>\d+)?"
    r"(?P<symbol>[A-Z][a-z]?|se|as|te|[bcnops])"
    r"(?P<chiral>@@|@TH[12]|@)?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+\+|--|[+-]\d*)?"
    r"(?::(?P<map>\d+))?\]"
)
_BOND_SYMBOLS = {
    "-": (BondOrder.SINGLE, BondStereo.NONE),
    "=": (BondOrder.DOUBLE, BondStereo.NONE),
    "#": (BondOrder.TRIPLE, BondStereo.NONE),
    ":": (BondOrder.AROMATIC, BondStereo.NONE),
    "/": (BondOrder.SINGLE, BondStereo.UP),
    "\\": (BondOrder.SINGLE, BondStereo.DOWN),
}


class SmilesError(ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"{message}{where}")


class TokenizeError(SmilesError):
    pass


class ParseError(SmilesError):
    pass


class InvalidRoot(ValueError):
    pass


TokenSeq = list


def tokenize(s: str) -> list[str]:
    """Split ``s`` into SMILES tokens; the tokens concatenate back to ``s``."""
    tokens = []
    pos = 0
    while pos < len(s):
        m = _TOKEN_RE.match(s, pos)
        if m is None:
            raise TokenizeError(f"unexpected character {s[pos]!r}", pos)
        tokens.append(m.group())
        pos = m.end()
    return tokens


def tokenize_line(text: str) -> list[str]:
    """Tokenize text that may hold several whitespace-separated SMILES chunks."""
    out = []
    for chunk in text.split():
        out.extend(tokenize(chunk))
    return out


def detokenize(tokens: Sequence[str]) -> str:
    parts = []
    for tok in tokens:
        parts.append(f" {tok} " if tok == SPLIT_TOKEN else tok)
    return "".join(parts)


# -- parsing -----------------------------------------------------------------


def _parse_bracket(tok: str, pos: int) -> Atom:
    m = _BRACKET_RE.fullmatch(tok)
    if m is None:
        raise ParseError(f"malformed bracket atom {tok!r}", pos)
    symbol = m["symbol"]
    aromatic = symbol[0].islower()
    element = symbol.capitalize() if aromatic else symbol
    if element not in ATOMIC_NUMBER:
        raise ParseError(f"unknown element {symbol!r}", pos)
    if aromatic and element not in AROMATIC_ELEMENTS:
        raise ParseError(f"{symbol!r} cannot be aromatic", pos)
    chiral = m["chiral"]
    if chiral in ("@", "@TH1"):
        chirality = Chirality.ANTICLOCKWISE
    elif chiral in ("@@", "@TH2"):
        chirality = Chirality.CLOCKWISE
    else:
        chirality = Chirality.NONE
    hcount = m["hcount"]
    explicit_h = 0 if not hcount else (int(hcount[1:]) if len(hcount) > 1 else 1)
    charge_text = m["charge"]
    if not charge_text:
        charge = 0
    elif charge_text in ("++", "--"):
        charge = 2 if charge_text == "++" else -2
    else:
        sign = 1 if charge_text[0] == "+" else -1
        charge = sign * (int(charge_text[1:]) if len(charge_text) > 1 else 1)
    map_num = int(m["map"]) if m["map"] else None
    return Atom(
        element=element,
        charge=charge,
        isotope=int(m["isotope"]) if m["isotope"] else None,
        aromatic=aromatic,
        explicit_h=explicit_h,
        chirality=chirality,
        map_num=map_num or None,
    )


def _organic_atom(tok: str) -> Atom:
    if tok[0].islower():
        return Atom(element=tok.upper(), aromatic=True)
    return Atom(element=tok)


def parse(s: str) -> Molecule:
    """Parse a SMILES string (dot-separated components allowed)."""
    if not s:
        raise ParseError("empty SMILES", 0)
    atoms: list[Atom] = []
    bonds: list[list] = []  # [a, b, order, stereo]
    pairs: set[frozenset] = set()
    nbr_order: list[list[int]] = []
    ring_open: dict[str, tuple[int, str | None, int, int]] = {}
    stack: list[int] = []
    prev: int | None = None
    pending: tuple[str, int] | None = None
    branch_open = False  # a '(' still waits for its first atom

    def add_bond(a: int, b: int, symbol: str | None, pos: int) -> None:
        if a == b:
            raise ParseError("ring closure bonds an atom to itself", pos)
        key = frozenset((a, b))
        if key in pairs:
            raise ParseError("duplicate bond", pos)
        pairs.add(key)
        if symbol is None:
            both_aromatic = atoms[a].aromatic and atoms[b].aromatic
            order, stereo = (BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE), BondStereo.NONE
        else:
            order, stereo = _BOND_SYMBOLS[symbol]
        bonds.append([a, b, order, stereo])

    pos = 0
    for tok in tokenize(s):
        start = pos
        pos += len(tok)
        c = tok[0]
        if c == "[" or tok in ORGANIC_TOKENS:
            atom = _parse_bracket(tok, start) if c == "[" else _organic_atom(tok)
            idx = len(atoms)
            atoms.append(atom)
            nbr_order.append([])
            if prev is not None:
                add_bond(prev, idx, pending[0] if pending else None, start)
                nbr_order[prev].append(idx)
                nbr_order[idx].append(prev)
            elif pending is not None:
                raise ParseError("bond symbol without a preceding atom", pending[1])
            if atom.chirality is not Chirality.NONE and atom.explicit_h == 1:
                nbr_order[idx].append(HYDROGEN_SLOT)
            pending = None
            prev = idx
            branch_open = False
        elif c == "(":
            if prev is None or pending is not None or branch_open:
                raise ParseError("branch without a preceding atom", start)
            stack.append(prev)
            branch_open = True
        elif c == ")":
            if not stack:
                raise ParseError("unbalanced ')'", start)
            if branch_open:
                raise ParseError("empty branch", start)
            if pending is not None:
                raise ParseError("dangling bond symbol", pending[1])
            prev = stack.pop()
        elif c == ".":
            if pending is not None:
                raise ParseError("dangling bond symbol", pending[1])
            if prev is None or branch_open:
                raise ParseError("empty component", start)
            prev = None
        elif tok in _BOND_SYMBOLS or tok == "~":
            if tok == "~":
                raise ParseError("query bond '~' is not supported", start)
            if prev is None or pending is not None:
                raise ParseError(f"misplaced bond symbol {tok!r}", start)
            pending = (tok, start)
        elif c.isdigit() or c == "%":
            if prev is None or branch_open:
                raise ParseError("ring closure without a preceding atom", start)
            digit = tok.lstrip("%")
            symbol = pending[0] if pending else None
            if digit in ring_open:
                other, other_symbol, slot, _ = ring_open.pop(digit)
                if other_symbol is not None and symbol is not None:
                    if _BOND_SYMBOLS[other_symbol][0] != _BOND_SYMBOLS[symbol][0]:
                        raise ParseError(f"conflicting ring-closure bonds for {tok}", start)
                if other_symbol is not None:
                    add_bond(other, prev, other_symbol, start)
                elif symbol is not None:
                    # symbol written at the closing end points from prev to other
                    order, stereo = _BOND_SYMBOLS[symbol]
                    add_bond(other, prev, None, start)
                    bonds[-1][2], bonds[-1][3] = order, stereo.flipped()
                else:
                    add_bond(other, prev, None, start)
                nbr_order[other][slot] = prev
                nbr_order[prev].append(other)
            else:
                nbr_order[prev].append(None)
                ring_open[digit] = (prev, symbol, len(nbr_order[prev]) - 1, start)
            pending = None
        else:
            raise ParseError(f"unexpected token {tok!r}", start)
    if pending is not None:
        raise ParseError("dangling bond symbol", pending[1])
    if prev is None:
        raise ParseError("empty component", len(s))
    if ring_open:
        digit, (_, _, _, where) = min(ring_open.items(), key=lambda kv: kv[1][3])
        raise ParseError(f"unmatched ring closure {digit}", where)
    if stack:
        raise ParseError("unbalanced '('", len(s))
    if not atoms:
        raise ParseError("no atoms", 0)

    mol = Molecule(tuple(atoms), tuple(Bond(a, b, order, stereo) for a, b, order, stereo in bonds))
    if any(a.chirality is not Chirality.NONE for a in atoms):
        fixed = list(atoms)
        for i, atom in enumerate(atoms):
            if atom.chirality is Chirality.NONE:
                continue
            seen = nbr_order[i]
            ref = reference_order(mol, i)
            if sorted(seen) != sorted(ref):
                continue  # hydrogen count and H marker disagree; leave the tag as written
            if permutation_parity(seen, ref):
                fixed[i] = replace(atom, chirality=atom.chirality.flipped())
        mol = Molecule(tuple(fixed), mol.bonds)
    return mol


ORGANIC_TOKENS = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I", "b", "c", "n", "o", "s", "p"})


# -- writing -----------------------------------------------------------------


@dataclass(frozen=True)
class WriteOrder:
    root: int
    neighbor_rank: Sequence[int]


def _atom_text(mol: Molecule, i: int, keep_maps: bool, explicit_hs: bool, chirality: Chirality) -> str:
    atom = mol.atoms[i]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    map_num = atom.map_num if keep_maps else None
    total_h = mol.total_hs[i]
    implied = implicit_h(mol, i)
    organic = (atom.element in ORGANIC_AROMATIC) if atom.aromatic else (atom.element in ORGANIC_SUBSET)
    if (
        organic
        and map_num is None
        and atom.charge == 0
        and atom.isotope is None
        and chirality is Chirality.NONE
        and total_h == implied
    ):
        return symbol
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    parts.append(chirality.value)
    write_h = total_h != implied or explicit_hs or map_num is None or chirality is not Chirality.NONE
    if write_h and total_h:
        parts.append("H" if total_h == 1 else f"H{total_h}")
    if atom.charge:
        sign = "+" if atom.charge > 0 else "-"
        parts.append(sign if abs(atom.charge) == 1 else f"{sign}{abs(atom.charge)}")
    if map_num is not None:
        parts.append(f":{map_num}")
    parts.append("]")
    return "".join(parts)


def _bond_text(mol: Molecule, k: int, frm: int) -> str:
    bond = mol.bonds[k]
    if bond.stereo is not BondStereo.NONE:
        stereo = bond.stereo if bond.a == frm else bond.stereo.flipped()
        return stereo.value
    order = bond.order
    both_aromatic = mol.atoms[bond.a].aromatic and mol.atoms[bond.b].aromatic
    if order is BondOrder.SINGLE:
        return "-" if both_aromatic else ""
    if order is BondOrder.AROMATIC:
        return "" if both_aromatic else ":"
    return "=" if order is BondOrder.DOUBLE else "#"


def _traverse(mol: Molecule, root: int, rank: Sequence[int]):
    """DFS spanning tree from ``root``; returns preorder, children and ring bonds."""
    n = len(mol.atoms)
    visited = [False] * n
    parent_bond = [-1] * n
    children: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    rings: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    ring_seen: set[int] = set()
    order: list[int] = []
    sorted_nbrs = [sorted(mol.adjacency[i], key=lambda jk: rank[jk[0]]) for i in range(n)]

    visited[root] = True
    order.append(root)
    stack = [(root, iter(sorted_nbrs[root]))]
    while stack:
        i, it = stack[-1]
        for j, k in it:
            if k == parent_bond[i]:
                continue
            if visited[j]:
                if k not in ring_seen:
                    ring_seen.add(k)
                    rings[i].append((j, k))
                    rings[j].append((i, k))
                continue
            visited[j] = True
            parent_bond[j] = k
            children[i].append((j, k))
            order.append(j)
            stack.append((j, iter(sorted_nbrs[j])))
            break
        else:
            stack.pop()
    return order, children, rings, parent_bond


def _write_component(
    mol: Molecule,
    root: int,
    rank: Sequence[int],
    keep_maps: bool,
    explicit_hs: bool = False,
) -> tuple[str, list[int]]:
    order, children, rings, parent_bond = _traverse(mol, root, rank)
    position = {atom: p for p, atom in enumerate(order)}
    chiral = any(mol.atoms[i].chirality is not Chirality.NONE for i in order)

    out: list[str] = []
    free_digits: list[int] = []
    next_digit = 1
    open_digit: dict[int, int] = {}  # bond index -> digit

    def take_digit() -> int:
        nonlocal next_digit
        if free_digits:
            free_digits.sort()
            return free_digits.pop(0)
        d = next_digit
        next_digit += 1
        return d

    def digit_text(d: int) -> str:
        return str(d) if d < 10 else f"%{d}"

    # iterative writer: stack holds either atoms to emit or literal text
    work: list = [("atom", root, -1)]
    while work:
        item = work.pop()
        if item[0] == "text":
            out.append(item[1])
            continue
        _, i, via = item
        # ring closures: those closing an earlier opening first, then new openings
        closing = sorted(
            (jk for jk in rings[i] if position[jk[0]] < position[i]),
            key=lambda jk: open_digit[jk[1]],
        )
        opening = sorted(
            (jk for jk in rings[i] if position[jk[0]] > position[i]),
            key=lambda jk: position[jk[0]],
        )
        ring_text = []
        released = []
        written_nbrs: list[int] = []
        if via >= 0:
            written_nbrs.append(mol.bonds[via].other(i))
        if chiral and mol.atoms[i].chirality is not Chirality.NONE and mol.total_hs[i] == 1:
            written_nbrs.append(HYDROGEN_SLOT)
        for j, k in closing:
            d = open_digit.pop(k)
            released.append(d)
            ring_text.append(digit_text(d))
            written_nbrs.append(j)
        for j, k in opening:
            d = take_digit()
            open_digit[k] = d
            ring_text.append(_bond_text(mol, k, i) + digit_text(d))
            written_nbrs.append(j)
        free_digits.extend(released)
        kids = children[i]
        written_nbrs.extend(j for j, _ in kids)

        tag = mol.atoms[i].chirality
        if tag is not Chirality.NONE:
            ref = reference_order(mol, i)
            if sorted(ref) == sorted(written_nbrs) and permutation_parity(written_nbrs, ref):
                tag = tag.flipped()
        out.append(_atom_text(mol, i, keep_maps, explicit_hs, tag))
        out.extend(ring_text)

        # push children in reverse so the first is emitted first
        for n_kid, (j, k) in enumerate(reversed(kids)):
            is_last = n_kid == 0
            if not is_last:
                work.append(("text", ")"))
            work.append(("atom", j, k))
            work.append(("text", _bond_text(mol, k, i)))
            if not is_last:
                work.append(("text", "("))
    return "".join(out), order


def write_rooted(
    m: Molecule,
    order: WriteOrder,
    keep_maps: bool = False,
    explicit_hs: bool = False,
) -> str:
    """Write a connected molecule starting at ``order.root``.

    With ``keep_maps`` the ``:N`` suffixes stay; hydrogen counts implied by the
    default valence model are then left out of mapped bracket atoms unless
    ``explicit_hs`` asks for them (needed for a lossless mapped round trip).
    """
    return write_rooted_with_order(m, order, keep_maps, explicit_hs)[0]


def write_rooted_with_order(
    m: Molecule, order: WriteOrder, keep_maps: bool = False, explicit_hs: bool = False
) -> tuple[str, list[int]]:
    """As :func:`write_rooted`, also returning atom indices in written order."""
    if not 0 <= order.root < len(m.atoms):
        raise InvalidRoot(f"root {order.root} out of range for {len(m.atoms)} atoms")
    if not m.is_connected():
        raise InvalidRoot("write_rooted needs a connected molecule; write fragments separately")
    return _write_component(m, order.root, order.neighbor_rank, keep_maps, explicit_hs)


def write_fragments(m: Molecule, keep_maps: bool = True, explicit_hs: bool = True) -> str:
    """Input-order writer: each component rooted at its lowest atom index."""
    parts = []
    for comp in m.components:
        sub = m.submolecule(comp)
        parts.append(_write_component(sub, 0, range(len(sub.atoms)), keep_maps, explicit_hs)[0])
    return ".".join(parts)


# -- canonical ranking -------------------------------------------------------

_LEAF_BUDGET = 256


def _initial_invariants(m: Molecule) -> list[tuple]:
    hs = m.total_hs
    return [
        (
            m.degree(i),
            a.atomic_number,
            a.isotope or 0,
            a.charge,
            hs[i],
            a.aromatic,
            a.chirality is not Chirality.NONE,
        )
        for i, a in enumerate(m.atoms)
    ]


def _dense_ranks(keys: list) -> list[int]:
    lookup = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [lookup[k] for k in keys]


def _refine(m: Molecule, ranks: list[int]) -> list[int]:
    adj = m.adjacency
    bonds = m.bonds
    n_classes = len(set(ranks))
    while True:
        keys = [
            (ranks[i], tuple(sorted((ranks[j], int(bonds[k].order)) for j, k in adj[i])))
            for i in range(len(ranks))
        ]
        new = _dense_ranks(keys)
        n_new = len(set(new))
        if n_new == n_classes:
            return new
        ranks, n_classes = new, n_new


def _twin_representatives(m: Molecule, members: list[int]) -> list[int]:
    """Drop terminal atoms that are interchangeable with an earlier member.

    Swapping two such atoms cannot change the written string unless a
    stereo mark is involved, so those are never pruned.
    """
    seen = set()
    keep = []
    for i in members:
        if m.degree(i) == 1 and m.atoms[i].chirality is Chirality.NONE:
            j, k = m.adjacency[i][0]
            if m.bonds[k].stereo is BondStereo.NONE and m.atoms[j].chirality is Chirality.NONE:
                sig = (j, m.bonds[k].order)
                if sig in seen:
                    continue
                seen.add(sig)
        keep.append(i)
    return keep


def _canonical_connected(m: Molecule) -> tuple[str, tuple[int, ...]]:
    n = len(m.atoms)
    if n == 1:
        return _write_component(m, 0, (0,), False)[0], (0,)
    start = _refine(m, _dense_ranks(_initial_invariants(m)))
    best: list = [None, None]
    leaves = [0]

    def search(ranks: list[int]) -> None:
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = [r for r, c in counts.items() if c > 1]
        if not tied:
            leaves[0] += 1
            root = ranks.index(0)
            s = _write_component(m, root, ranks, False)[0]
            if best[0] is None or s < best[0]:
                best[0], best[1] = s, tuple(ranks)
            return
        target = min(tied)
        members = _twin_representatives(m, [i for i in range(n) if ranks[i] == target])
        for pos, a in enumerate(members):
            if pos and leaves[0] >= _LEAF_BUDGET:
                break
            doubled = [2 * r for r in ranks]
            doubled[a] -= 1
            search(_refine(m, _dense_ranks(doubled)))

    search(start)
    return best[0], best[1]


@dataclass(frozen=True)
class Canonical:
    smiles: str
    ranks: tuple[int, ...]


@lru_cache(maxsize=65536)
def canonical(m: Molecule) -> Canonical:
    """Canonical string (maps stripped) and a total canonical atom ranking."""
    if not m.atoms:
        return Canonical("", ())
    pieces = []
    for comp in m.components:
        sub = m.submolecule(comp)
        s, ranks = _canonical_connected(sub)
        pieces.append((s, comp, ranks))
    pieces.sort(key=lambda p: p[0])
    ranks = [0] * len(m.atoms)
    offset = 0
    for _, comp, sub_ranks in pieces:
        for local, atom in enumerate(comp):
            ranks[atom] = offset + sub_ranks[local]
        offset += len(comp)
    return Canonical(".".join(p[0] for p in pieces), tuple(ranks))


def write_canonical(m: Molecule) -> str:
    return canonical(m).smiles


def canonical_ranks(m: Molecule) -> tuple[int, ...]:
    return canonical(m).ranks


def canonical_root(m: Molecule) -> int:
    return canonical_ranks(m).index(0)


def write_aligned(m: Molecule, root: int, keep_maps: bool = False) -> tuple[str, list[int]]:
    """Rooted write with canonical neighbour ranks; used by root alignment."""
    return write_rooted_with_order(m, WriteOrder(root, canonical_ranks(m)), keep_maps)


def canonicalize(s: str) -> str | None:
    """Canonical form of a SMILES string, or None if it does not parse."""
    try:
        return write_canonical(parse(s))
    except SmilesError:
        return None


# -- random enumeration -------------------------------------------------------


def random_smiles(m: Molecule, rng: random.Random, root: int | None = None) -> str:
    """One randomized SMILES: random root per fragment and random branch order."""
    parts = []
    for comp in m.components:
        sub = m.submolecule(comp) if len(m.components) > 1 else m
        n = len(sub.atoms)
        r = rng.randrange(n) if root is None or len(m.components) > 1 else root
        rank = list(range(n))
        rng.shuffle(rank)
        parts.append(_write_component(sub, r, rank, False)[0])
    return ".".join(parts)


def enumerate_random(m: Molecule, count: int, seed: int) -> list[str]:
    """Up to ``count`` distinct randomized SMILES of a connected molecule.

    Roots are drawn without replacement while atoms remain, then with
    replacement; duplicates are dropped.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    n = len(m.atoms)
    roots = list(range(n))
    rng.shuffle(roots)
    out: list[str] = []
    seen = set()
    for k in range(count):
        root = roots[k] if k < n else rng.randrange(n)
        s = random_smiles(m, rng, root)
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out
