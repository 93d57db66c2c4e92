import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ACRYLATE_PRODUCT, corpus
from rsmiles.molgraph import Atom, Bond, Molecule, is_isomorphic
from rsmiles.smiles import (
    InvalidRoot,
    ParseError,
    TokenizeError,
    WriteOrder,
    canonical_ranks,
    canonicalize,
    detokenize,
    enumerate_random,
    parse,
    random_smiles,
    tokenize,
    tokenize_line,
    write_aligned,
    write_canonical,
    write_rooted,
)
from strategies import molecules

CORPUS = corpus()


def _same_hs(m1: Molecule, m2: Molecule) -> bool:
    return sorted(m1.total_hs) == sorted(m2.total_hs)


# -- tokenizer -------------------------------------------------------------------------


def test_tokenize_acrylate_source():
    assert tokenize("ClC(Cl)(Cl)COC(=O)C=C") == [
        "Cl", "C", "(", "Cl", ")", "(", "Cl", ")", "C", "O", "C", "(", "=", "O", ")", "C", "=", "C",
    ]


def test_tokenize_examples():
    assert tokenize("[Cl:8]") == ["[Cl:8]"]
    assert tokenize("C%12CC%12") == ["C", "%12", "C", "C", "%12"]
    assert tokenize("Brc1ccccc1") == ["Br", "c", "1", "c", "c", "c", "c", "c", "1"]
    assert tokenize_line("CC <split> C.O") == ["C", "C", "<split>", "C", ".", "O"]


@pytest.mark.parametrize("bad, pos", [("CCX", 2), ("C$C", 1), ("A", 0)])
def test_tokenize_rejects(bad, pos):
    with pytest.raises(TokenizeError) as exc:
        tokenize(bad)
    assert exc.value.position == pos


# classes: bracket, organic, bond, branch, dot, ring digit, %NN, reserved
_CLASSES = [
    r"\[[^\[\]]*\]", r"Br|Cl|[BCNOPSFI]|[bcnosp]", r"[-=#/\\:~]", r"[()]", r"\.", r"\d", r"%\d\d", r"<split>|>",
]


@pytest.mark.parametrize("smiles", CORPUS)
def test_tokens_partition_and_classify(smiles):
    tokens = tokenize(smiles)
    assert "".join(tokens) == smiles
    for tok in tokens:
        assert sum(bool(re.fullmatch(c, tok)) for c in _CLASSES) == 1, tok


@given(st.lists(st.sampled_from(["C", "Cl", "(", ")", "=", "1", "%10", "[NH4+]", "c", ".", "Br", "B", "/"]), max_size=30))
def test_concat_tokenize_identity(tokens):
    assert tokenize("".join(tokens)) == tokens


def test_detokenize_split_token():
    line = "CC(=O)O <split> CC=O.O"
    assert detokenize(tokenize_line(line)) == line


# -- parser ----------------------------------------------------------------------------


def test_parse_examples():
    m = parse("ClC(Cl)(Cl)CO.C(=O)(Cl)C=C")
    assert len(m.atoms) == 11 and len(m.components) == 2
    ring = parse("C1CC1")
    assert len(ring.atoms) == 3 and len(ring.bonds) == 3


@pytest.mark.parametrize(
    "bad",
    ["C1CC", "C(C", "CC)", "C=", "C=.C", "[C", "[Xx]", "[C:]", "C~C", "(C)C", "C((C))", "C11", ".C", "C..C", "C=1CC-1"],
)
def test_parse_errors(bad):
    with pytest.raises((ParseError, TokenizeError)):
        parse(bad)


def test_parse_error_reports_ring_digit():
    with pytest.raises(ParseError) as exc:
        parse("C1CC")
    assert "1" in str(exc.value)


def test_bracket_atom_fields():
    atom = parse("[13CH3+:7]").atoms[0]
    assert (atom.element, atom.isotope, atom.explicit_h, atom.charge, atom.map_num) == ("C", 13, 3, 1, 7)
    assert parse("[O-2]").atoms[0].charge == -2
    assert parse("[Fe++]").atoms[0].charge == 2
    assert parse("[nH]1cccc1").atoms[0].aromatic


def test_implicit_hydrogens():
    assert parse("CCO").total_hs == (3, 2, 1)
    assert parse("c1ccccc1").total_hs == (1,) * 6
    assert parse("c1cc[nH]c1").total_hs == (1, 1, 1, 1, 1)
    assert parse("CS(=O)(=O)Cl").total_hs[1] == 0
    assert parse("[CH2]").total_hs == (2,)


# -- writers -----------------------------------------------------------------------------


def _rooted(m, root, keep_maps=False):
    return write_rooted(m, WriteOrder(root, canonical_ranks(m)), keep_maps)


def test_acrylate_rooted_writes():
    p = parse(ACRYLATE_PRODUCT)
    root = p.map_index[8]
    assert _rooted(p, root, True) == "[Cl:8][C:7]([Cl:9])([Cl:10])[C:6][O:5][C:1](=[O:4])[C:2]=[C:3]"
    assert _rooted(p, root) == "ClC(Cl)(Cl)COC(=O)C=C"


def test_single_atom_write():
    assert _rooted(parse("O"), 0) == "O"


def test_invalid_root():
    with pytest.raises(InvalidRoot):
        write_rooted(parse("CC"), WriteOrder(5, (0, 1)))
    with pytest.raises(InvalidRoot):
        write_rooted(parse("C.C"), WriteOrder(0, (0, 1)))


def test_ring_closure_digits():
    assert _rooted(parse("C%10CC%10"), 0) == "C1CC1"
    s = write_canonical(parse("C12C3C4C1C5C2C3C45"))
    assert is_isomorphic(parse(s), parse("C12C3C4C1C5C2C3C45"))


def test_many_open_rings_use_percent_digits():
    # eleven three-membered rings fused around one hub atom
    atoms = [Atom("C")] + [Atom("C") for _ in range(22)]
    bonds = []
    for k in range(11):
        a, b = 1 + 2 * k, 2 + 2 * k
        bonds += [Bond(0, a), Bond(0, b), Bond(a, b)]
    m = Molecule(tuple(atoms), tuple(bonds))
    s = _rooted(m, 0)
    assert "%10" in s or "%11" in s
    assert is_isomorphic(parse(s), m)


@pytest.mark.parametrize("smiles", CORPUS)
def test_round_trip_every_root(smiles):
    m = parse(smiles)
    for comp in m.components:
        sub = m.submolecule(comp)
        for root in range(len(sub.atoms)):
            for keep in (True, False):
                back = parse(_rooted(sub, root, keep))
                assert is_isomorphic(back, sub), (smiles, root)
                assert _same_hs(back, sub)


@pytest.mark.parametrize("smiles", CORPUS)
def test_canonical_constant_over_roots(smiles):
    m = parse(smiles)
    canon = write_canonical(m)
    assert write_canonical(parse(canon)) == canon
    for comp in m.components:
        sub = m.submolecule(comp)
        sub_canon = write_canonical(sub)
        for root in range(len(sub.atoms)):
            assert write_canonical(parse(_rooted(sub, root))) == sub_canon


@pytest.mark.parametrize("smiles", CORPUS)
def test_canonical_constant_over_random_enumerations(smiles):
    m = parse(smiles)
    canon = write_canonical(m)
    rng = random.Random(7)
    for _ in range(20):
        assert canonicalize(random_smiles(m, rng)) == canon


def test_canonical_examples():
    assert write_canonical(parse("OCC")) == write_canonical(parse("CCO"))
    p = parse(ACRYLATE_PRODUCT)
    forms = {write_canonical(parse(_rooted(p, r))) for r in range(len(p.atoms))}
    assert len(forms) == 1
    assert canonicalize("not a smiles") is None
    assert canonicalize("C1CC") is None


def test_canonical_distinguishes_stereo():
    assert canonicalize("F/C=C/F") != canonicalize("F/C=C\\F")
    assert canonicalize("C[C@H](N)O") != canonicalize("C[C@@H](N)O")
    assert canonicalize("C[C@H](N)O") == canonicalize("N[C@@H](C)O")


def test_maps_never_in_mapless_output():
    p = parse(ACRYLATE_PRODUCT)
    for r in range(len(p.atoms)):
        assert ":" not in _rooted(p, r)
    assert ":" not in write_canonical(p)


def test_write_aligned_order_covers_atoms():
    p = parse(ACRYLATE_PRODUCT)
    s, order = write_aligned(p, 3)
    assert sorted(order) == list(range(len(p.atoms)))
    assert order[0] == 3


@given(molecules(max_atoms=12))
@settings(max_examples=200, deadline=None)
def test_round_trip_random_graphs(m):
    for root in range(len(m.atoms)):
        for keep in (False, True):
            s = _rooted(m, root, keep)
            back = parse(s)
            assert is_isomorphic(back, m), s
            assert _same_hs(back, m), s


@given(molecules(max_atoms=10, mapped=True))
@settings(max_examples=100, deadline=None)
def test_round_trip_respects_maps(m):
    for root in range(len(m.atoms)):
        back = parse(write_rooted(m, WriteOrder(root, canonical_ranks(m)), keep_maps=True, explicit_hs=True))
        assert is_isomorphic(back, m, respect_maps=True)
        assert back.total_hs == tuple(m.total_hs[m.map_index[a.map_num]] for a in back.atoms)


@given(molecules(max_atoms=10), st.integers(0, 2**32))
@settings(max_examples=100, deadline=None)
def test_canonical_invariant_under_random_writes(m, seed):
    canon = write_canonical(m)
    rng = random.Random(seed)
    for _ in range(3):
        assert canonicalize(random_smiles(m, rng)) == canon


# -- enumeration ---------------------------------------------------------------------------------


def test_enumerate_random_examples():
    m = parse("C(COC(C=C)=O)(Cl)(Cl)Cl")
    out = enumerate_random(m, 3, seed=1)
    assert len(out) == 3 and len(set(out)) == 3
    assert {canonicalize(s) for s in out} == {write_canonical(m)}
    assert enumerate_random(parse("C"), 1, seed=0) == ["C"]


def test_enumerate_random_deterministic():
    m = parse("CC(C)(C)OC(=O)N1CCC(CC1)C(=O)O")
    assert enumerate_random(m, 10, 42) == enumerate_random(m, 10, 42)
    assert len(enumerate_random(parse("CC"), 5, 0)) <= 5


def test_enumerate_reaches_known_variants():
    """Two hand-written variants of the product are reachable random writes."""
    m = parse("C(COC(C=C)=O)(Cl)(Cl)Cl")
    seen = set(enumerate_random(m, 400, seed=0))
    assert "O(C(=O)C=C)CC(Cl)(Cl)Cl" in seen
    assert "O=C(C=C)OCC(Cl)(Cl)Cl" in seen
