#!/usr/bin/env python3
"""Build the bundled synthetic reaction sample and its frozen statistics.

The sample imitates an atom-mapped patent dataset: ten common reaction
types applied to drug-like building blocks. Reactant atoms that end up in
the product carry map numbers; leaving-group atoms are unmapped.

Building blocks mark leaving atoms with maps >= 2 and the reacting atom with
map 1 (or, when absent, the reacting atom is the one bonded to map 2). The
marks are replaced by random map numbers on output.

Usage: python3 scripts/build_fixture.py [--n 1000] [--seed 2022]
"""
from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from dataclasses import replace
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from rsmiles.augment import AugmentConfig, augment_training  # noqa: E402
from rsmiles.dataio import clean, read_dataset  # noqa: E402
from rsmiles.metrics import plain_pairs  # noqa: E402
from rsmiles.molgraph import Bond, Molecule, combine, split_fragments  # noqa: E402
from rsmiles.smiles import parse, write_fragments  # noqa: E402

ARYL = [
    "c1ccc({})cc1", "Cc1ccc({})cc1", "COc1ccc({})cc1", "Fc1ccc({})cc1", "Clc1ccc({})cc1",
    "FC(F)(F)c1ccc({})cc1", "N#Cc1ccc({})cc1", "Cc1cccc({})c1", "COc1cc({})cc(OC)c1",
    "Fc1ccc({})c(F)c1", "c1ccc2cc({})ccc2c1", "c1ccc({})nc1", "Cc1ncc({})s1",
    "O=C(OC)c1ccc({})cc1", "CC(C)(C)c1ccc({})cc1", "Clc1cccc(Cl)c1{}", "c1cnc2ccc({})cc2c1",
]

ACYL = [f.format("[C:1](=O)[Cl:2]") for f in ARYL[:9]] + [
    "CC(C)[C:1](=O)[Cl:2]", "C1CCC(CC1)[C:1](=O)[Cl:2]", "CCOC(=O)CC[C:1](=O)[Cl:2]",
]
ACID = [f.format("[C:1](=O)[OH:2]") for f in ARYL] + [
    "CC(C)(C)OC(=O)N1CCC(CC1)[C:1](=O)[OH:2]",
    "CC(C)(C)OC(=O)N[C@@H](Cc1ccccc1)[C:1](=O)[OH:2]",
    "CC(C)(C)OC(=O)N[C@@H](C)[C:1](=O)[OH:2]",
    "O=C(Cc1ccccc1)N[C@H](C)[C:1](=O)[OH:2]",
    "C1CC1[C:1](=O)[OH:2]", "CCCC[C:1](=O)[OH:2]", "O=c1ccn(C[C:1](=O)[OH:2])cc1",
]
AMINE = [
    "[NH2:1]Cc1ccccc1", "[NH:1]1CCOCC1", "[NH:1]1CCN(C)CC1", "[NH:1]1CCCCC1", "C[NH:1]C",
    "[NH2:1]c1ccc(F)cc1", "[NH2:1]C1CCCCC1", "CC(C)(C)OC(=O)N1CCC([NH2:1])CC1",
    "CC(C)(C)OC(=O)N1CC[NH:1]CC1", "[NH2:1]Cc1ccc(OC)cc1", "COC(=O)[C@@H]([NH2:1])Cc1ccccc1",
    "[NH2:1]c1ccccn1", "[NH:1]1CCC(CC1)C(=O)OCC", "C[NH:1]Cc1ccccc1", "[NH2:1]CCN1CCOCC1",
    "[NH2:1]c1cccc(C(F)(F)F)c1", "OC1CC[NH:1]CC1", "[NH2:1]C[C@H]1CCCO1",
]
ALCOHOL = ["C[OH:1]", "CC[OH:1]", "CC(C)(C)[OH:1]", "[OH:1]Cc1ccccc1", "[OH:1]CCN1CCOCC1", "[OH:1]c1ccc(Cl)cc1"]
SULFONYL = [f.format("[S:1](=O)(=O)[Cl:2]") for f in ARYL[:8]] + ["C[S:1](=O)(=O)[Cl:2]"]
ALKYL_HALIDE = [
    "[Br:2][CH2:1]c1ccccc1", "[Br:2][CH2:1]c1ccc(F)cc1", "[CH3:1][I:2]",
    "[Br:2][CH2:1]C(=O)OCC", "[Cl:2][CH2:1]c1ccc(cc1)C#N", "[Br:2][CH2:1]CCCl",
    "[Br:2][CH2:1]c1cccc(OC)c1", "[Br:2][CH2:1]C1CC1", "C[CH2:1][Br:2]",
]
PHENOL = [f.format("[OH:1]") for f in ARYL[:12]]
HET_HALIDE = [
    "[F:2][c:1]1ccc(cc1)[N+](=O)[O-]", "[Cl:2][c:1]1ncccn1", "[Cl:2][c:1]1ccc(nn1)Cl",
    "[Cl:2][c:1]1nc2ccccc2[nH]1", "[F:2][c:1]1ccc(cc1F)C#N", "[Cl:2][c:1]1ccnc2ccccc12",
    "[Cl:2][c:1]1nc(C)cc(n1)C", "[F:2][c:1]1ncccc1C(F)(F)F",
]
ARYL_BROMIDE = [f.format("[Br:2]") for f in ARYL]
BORONIC = [f.format("[B:2](O)O") for f in ARYL[:10]]
BOC = [
    "CC(C)(C)O[C:2](=O)[NH:1]c1ccc(cc1)C(=O)OC", "CC(C)(C)O[C:2](=O)[N:1]1CCC(CC1)c1ccccc1",
    "CC(C)(C)O[C:2](=O)[N:1]1CCN(CC1)c1ccc(F)cc1", "CC(C)(C)O[C:2](=O)[NH:1]Cc1ccc(Cl)cc1",
    "CC(C)(C)O[C:2](=O)[NH:1][C@@H](C)C(=O)Nc1ccccc1", "CC(C)(C)O[C:2](=O)[N:1]1CCC[C@H]1C(=O)OC",
    "CC(C)(C)O[C:2](=O)[N:1]1CCOC(C1)c1ccccc1",
]
METHYL_ESTER = [f.format("C(=O)[O:1][CH3:2]") for f in ARYL] + [
    "CC(C)(C)OC(=O)N1CCC(CC1)C(=O)[O:1][CH3:2]", "c1ccc(cc1)OCC(=O)[O:1][CH2:2]C",
]
NITRO = [f.format("[N+:1](=[O:2])[O-:3]") for f in ARYL]
ALDEHYDE = [f.format("[CH:1]=[O:2]") for f in ARYL[:12]] + ["CC(C)C[CH:1]=[O:2]", "O=C1CCC(CC1)[CH:1]=[O:2]"]


# (class label, name, first block list, second block list or None)
TEMPLATES = [
    (2, "amide_acid", ACID, AMINE),
    (2, "amide_acyl_chloride", ACYL, AMINE),
    (2, "ester", ACYL, ALCOHOL),
    (2, "sulfonamide", SULFONYL, AMINE),
    (1, "n_alkylation", ALKYL_HALIDE, AMINE),
    (1, "o_alkylation", ALKYL_HALIDE, PHENOL),
    (1, "snar", HET_HALIDE, AMINE),
    (3, "suzuki", ARYL_BROMIDE, BORONIC),
    (6, "boc_deprotection", BOC, None),
    (6, "ester_hydrolysis", METHYL_ESTER, None),
    (7, "nitro_reduction", NITRO, None),
    (1, "reductive_amination", ALDEHYDE, AMINE),
]


def _site(m: Molecule) -> tuple[int, set[int]]:
    """Reacting atom and the atoms that leave with it."""
    marks = [i for i, a in enumerate(m.atoms) if a.map_num is not None and a.map_num >= 2]
    site = m.map_index.get(1)
    if site is None:
        site = m.adjacency[m.map_index[2]][0][0]
    cut = Molecule(m.atoms, tuple(b for b in m.bonds if not (site in (b.a, b.b) and (b.a in marks or b.b in marks))))
    leaving = set()
    for comp in cut.components:
        if any(i in marks for i in comp):
            leaving.update(comp)
    return site, leaving


def _with_hs(m: Molecule) -> Molecule:
    return Molecule(tuple(replace(a, explicit_h=h) for a, h in zip(m.atoms, m.total_hs)), m.bonds)


def build_reaction(blocks: list[str], rng: random.Random) -> str:
    mols = [_with_hs(parse(b)) for b in blocks]
    sites = [_site(m) for m in mols]
    both = combine(Molecule(tuple(replace(a, map_num=None) for a in m.atoms), m.bonds) for m in mols)
    offsets = [0]
    for m in mols[:-1]:
        offsets.append(offsets[-1] + len(m.atoms))
    site_atoms = [off + s for off, (s, _) in zip(offsets, sites)]
    leaving = {off + i for off, (_, lv) in zip(offsets, sites) for i in lv}

    kept = [i for i in range(len(both.atoms)) if i not in leaving]
    labels = list(range(1, len(kept) + 1))
    rng.shuffle(labels)
    new_map = dict(zip(kept, labels))

    r_atoms = [replace(a, map_num=new_map.get(i)) for i, a in enumerate(both.atoms)]
    reactants = Molecule(tuple(r_atoms), both.bonds)

    p_atoms = list(r_atoms)
    for s in site_atoms:
        p_atoms[s] = replace(p_atoms[s], explicit_h=None, charge=0)
    p_bonds = [b for b in both.bonds if b.a not in leaving and b.b not in leaving]
    if len(site_atoms) == 2:
        p_bonds.append(Bond(site_atoms[0], site_atoms[1]))
    product = Molecule(tuple(p_atoms), tuple(p_bonds)).submolecule(kept)
    product = _with_hs(product)
    if not product.is_connected():
        raise ValueError(f"disconnected product from {blocks}")
    frags = split_fragments(reactants)
    rng.shuffle(frags)
    r_text = ".".join(write_fragments(f) for f in frags)
    return f"{r_text}>>{write_fragments(product)}"


def build(n: int, seed: int) -> list[dict]:
    rng = random.Random(seed)
    rows, seen = [], set()
    while len(rows) < n:
        label, name, first, second = rng.choice(TEMPLATES)
        blocks = [rng.choice(first)] + ([rng.choice(second)] if second else [])
        rxn = build_reaction(blocks, rng)
        key = tuple(blocks)
        if key in seen:
            continue
        seen.add(key)
        rows.append({"id": f"SYN{len(rows) + 1:05d}", "class": label, "reaction_smiles": rxn})
    return rows


def _dp_distance(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def oracle_stats(path: Path, factor: int, seed: int) -> dict:
    """Means recomputed with a plain dynamic-programming edit distance."""
    rxns, _ = clean(read_dataset(path, "csv"))
    n = plain = aligned = p_len = r_len = 0
    for i, rxn in enumerate(rxns):
        for p, r in plain_pairs(rxn, factor, seed, i):
            plain += _dp_distance(p, r)
            p_len += len(p)
            r_len += len(r)
            n += 1
        for pair in augment_training(rxn, AugmentConfig(factor, seed), i):
            aligned += _dp_distance(pair.source, pair.target)
    return {
        "factor": factor,
        "seed": seed,
        "n_records": n,
        "sum_product_len": p_len,
        "sum_reactant_len": r_len,
        "sum_edit_distance_plain": plain,
        "sum_edit_distance_aligned": aligned,
        "mean_edit_distance_plain": plain / n,
        "mean_edit_distance_aligned": aligned / n,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=2022)
    ap.add_argument("--out", type=Path, default=ROOT / "tests" / "data")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / "uspto_sample_1k.csv"
    rows = build(args.n, args.seed)
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["id", "class", "reaction_smiles"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    stats = [oracle_stats(csv_path, f, 0) for f in (1, 5)]
    (args.out / "uspto_sample_1k_stats.json").write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    for s in stats:
        print(
            f"x{s['factor']}: plain {s['mean_edit_distance_plain']:.2f}  aligned {s['mean_edit_distance_aligned']:.2f}"
        )


if __name__ == "__main__":
    main()
