"""Acceptance criteria. Each test records one PASS/FAIL/SKIP line, printed in
the terminal summary, and then asserts on the same condition."""
import json
import os
import random
import time
from pathlib import Path

import pytest

from conftest import ACCEPTANCE_LINES, ACRYLATE, DATA, corpus
from rsmiles.align import Task, align
from rsmiles.augment import MaskConfig, mask_corpus
from rsmiles.cli import main
from rsmiles.dataio import clean, read_dataset
from rsmiles.metrics import RingChange, classify_reaction, edit_distance, maxfrag_accuracy, table2_stats, topk_accuracy
from rsmiles.molgraph import Reaction, is_isomorphic
from rsmiles.scoring import BeamOutputs, ScoringConfig, aggregate, aggregate_scores
from rsmiles.smiles import WriteOrder, canonical_ranks, canonicalize, parse, random_smiles, write_canonical, write_rooted
from test_metrics import oracle_distance
from test_scoring import BEAM_VARIANTS, direct_reciprocal, random_outputs

FULL_DATASET_ENV = "RSMILES_USPTO50K"


def record(number: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_acrylate_alignment(tmp_path):
    path = tmp_path / "rxn.txt"
    path.write_text(ACRYLATE + "\n")
    start = time.perf_counter()
    code = main(["align", str(path), str(tmp_path / "out"), "--task", "p2r", "--root-map", "8", "-q"])
    elapsed = time.perf_counter() - start
    pair = align(clean(read_dataset(path))[0][0], Task.P2R, 8)
    src = (tmp_path / "out" / "src.txt").read_text()
    tgt = (tmp_path / "out" / "tgt.txt").read_text()
    ok = (
        code == 0
        and pair.source == "ClC(Cl)(Cl)COC(=O)C=C"
        and pair.target == "ClC(Cl)(Cl)CO.C(=O)(Cl)C=C"
        and src == "Cl C ( Cl ) ( Cl ) C O C ( = O ) C = C\n"
        and tgt == "Cl C ( Cl ) ( Cl ) C O . C ( = O ) ( Cl ) C = C\n"
        and elapsed < 1.0
    )
    record("1", ok, f"source={pair.source} target={pair.target} runtime={elapsed:.3f}s")


def test_criterion_2_sample(sample_reactions):
    frozen = {e["factor"]: e for e in json.loads((DATA / "uspto_sample_1k_stats.json").read_text())}[1]
    stats = table2_stats(sample_reactions, 1, 0)
    n = frozen["n_records"]
    plain, aligned = frozen["sum_edit_distance_plain"] / n, frozen["sum_edit_distance_aligned"] / n
    ok = (
        stats.mean_edit_distance_plain == plain
        and stats.mean_edit_distance_aligned == aligned
        and stats.reduction >= 0.15
    )
    record(
        "2 (1k sample)",
        ok,
        f"plain={stats.mean_edit_distance_plain:.3f} aligned={stats.mean_edit_distance_aligned:.3f} "
        f"reduction={100 * stats.reduction:.1f}% (oracle plain={plain:.3f} aligned={aligned:.3f}, need >=15%)",
    )


def test_criterion_2_full_dataset():
    path = os.environ.get(FULL_DATASET_ENV)
    if not path or not Path(path).is_file():
        line = f"[SKIP] criterion 2 (USPTO-50K): set {FULL_DATASET_ENV} to the dataset file to run"
        ACCEPTANCE_LINES.append(line)
        pytest.skip(line)
    fmt = "csv" if path.endswith(".csv") else "lines"
    start = time.perf_counter()
    rxns, _ = clean(read_dataset(path, fmt))
    x1 = table2_stats(rxns, 1, 0)
    x20 = table2_stats(rxns, 20, 0)
    elapsed = time.perf_counter() - start
    ok = (
        abs(x1.mean_edit_distance_plain - 17.9) <= 1.5
        and abs(x1.mean_edit_distance_aligned - 14.1) <= 1.5
        and x1.reduction >= 0.15
        and abs(x20.mean_edit_distance_aligned - x1.mean_edit_distance_aligned) <= 0.5
        and x20.mean_edit_distance_plain > 27
        and elapsed < 600
    )
    record(
        "2 (USPTO-50K)",
        ok,
        f"x1 plain={x1.mean_edit_distance_plain:.2f} aligned={x1.mean_edit_distance_aligned:.2f} "
        f"({100 * x1.reduction:.1f}%); x20 plain={x20.mean_edit_distance_plain:.2f} "
        f"aligned={x20.mean_edit_distance_aligned:.2f}; runtime={elapsed:.0f}s",
    )


def test_criterion_3_scoring():
    ranked = aggregate(BeamOutputs(BEAM_VARIANTS, beam=5), ScoringConfig(alpha=1.0))
    top = ranked[0]
    rng = random.Random(2022)
    identical = all(
        aggregate_scores(out, 1.0) == direct_reciprocal(out) for out in (random_outputs(rng) for _ in range(1000))
    )
    ok = top.canonical == canonicalize("C=CC(=O)Cl.OCC(Cl)(Cl)Cl") and top.score == 2.0 and identical
    record("3", ok, f"rank1={top.canonical} score={top.score!r}; alpha=1 bit-identical on 1000 outputs: {identical}")


def test_criterion_4_masking():
    rng = random.Random(0)
    vocab = ["C", "c", "O", "N", "(", ")", "=", "1", "2", "Cl", "[nH]", "."]
    lines = [[rng.choice(vocab) for _ in range(100)] for _ in range(1000)]
    masked = mask_corpus(lines, MaskConfig(seed=0))
    n_tokens = sum(len(x) for x in lines)
    kinds = [k for m in masked for k in m.kinds]
    frac = len(kinds) / n_tokens
    split = {k: kinds.count(k) / len(kinds) for k in ("unknown", "random", "keep")}
    ok = (
        n_tokens == 100_000
        and 0.145 <= frac <= 0.155
        and abs(split["unknown"] - 0.80) <= 0.01
        and abs(split["random"] - 0.10) <= 0.01
        and abs(split["keep"] - 0.10) <= 0.01
    )
    record("4", ok, f"masked={frac:.4f} unknown={split['unknown']:.4f} random={split['random']:.4f} "
                    f"keep={split['keep']:.4f} over {n_tokens} tokens")


def test_criterion_5_properties(tmp_path):
    results = {}
    mols = [parse(s) for s in corpus()]

    round_trip = True
    for m in mols:
        for comp in m.components:
            sub = m.submolecule(comp)
            ranks = canonical_ranks(sub)
            for root in range(len(sub.atoms)):
                back = parse(write_rooted(sub, WriteOrder(root, ranks)))
                round_trip &= is_isomorphic(back, sub)
    results["a round-trip"] = round_trip

    rng = random.Random(1)
    results["b canonical"] = all(
        canonicalize(random_smiles(m, rng)) == write_canonical(m) for m in mols for _ in range(20)
    )

    alphabet = "CO()=1cN"
    results["c edit-distance"] = all(
        edit_distance(a, b) == oracle_distance(a, b)
        for a, b in (
            ("".join(rng.choice(alphabet) for _ in range(rng.randint(0, 7))),
             "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 7))))
            for _ in range(10_000)
        )
    )

    pool = ["CCO", "OCC", "CCO.N", "N.CCO", "CCO.Cl", "CCN", "C(", "c1ccccc1O.C"]
    maxfrag_ok = True
    for _ in range(300):
        n = rng.randint(1, 6)
        preds = [[rng.choice(pool) for _ in range(rng.randint(0, 5))] for _ in range(n)]
        truths = [rng.choice(pool) for _ in range(n)]
        top, mf = topk_accuracy(preds, truths, (1, 3, 5)), maxfrag_accuracy(preds, truths, (1, 3, 5))
        maxfrag_ok &= all(mf[k] >= top[k] for k in top)
    results["d maxfrag>=topk"] = maxfrag_ok

    results["e determinism"] = _cli_is_deterministic(tmp_path)
    ok = all(results.values())
    record("5", ok, " ".join(f"({k})={'ok' if v else 'FAILED'}" for k, v in results.items()))


def _cli_is_deterministic(tmp_path: Path) -> bool:
    sample = tmp_path / "sample.csv"
    sample.write_text("\n".join((DATA / "uspto_sample_1k.csv").read_text().splitlines()[:61]) + "\n")
    preds = tmp_path / "preds.txt"
    preds.write_text("# augmentation=3 beam=5\n" + "\n".join(p for v in BEAM_VARIANTS for p in v) + "\n")
    snapshots = []
    for run, threads in enumerate(("1", "1", "3")):
        base = tmp_path / f"run{run}"
        align_dir = base / "align"
        codes = [
            main(["align", str(sample), str(align_dir), "--format", "csv", "--factor", "4", "--seed", "7",
                  "--threads", threads, "-q"]),
            main(["stats", str(sample), str(base / "stats"), "--format", "csv", "--factor", "2",
                  "--threads", threads, "-q"]),
            main(["mask", str(align_dir / "src.txt"), str(base / "mask"), "--seed", "7", "--threads", threads, "-q"]),
            main(["score", str(preds), "-o", str(base / "score.tsv"), "--threads", threads, "-q"]),
            main(["eval", str(align_dir / "tgt.txt"), str(align_dir / "tgt.txt"), "--beam", "1",
                  "-o", str(base / "eval"), "--threads", threads, "-q"]),
        ]
        if any(codes):
            return False
        snapshots.append({str(p.relative_to(base)): p.read_bytes() for p in sorted(base.rglob("*")) if p.is_file()})
    return snapshots[0] == snapshots[1] == snapshots[2]


def test_criterion_6_ring_classification(ring_opening):
    label = classify_reaction(ring_opening)
    product = ring_opening.product
    identity = classify_reaction(Reaction((product,), (), (product,)))
    ok = (
        label.kind is RingChange.RING_OPENING
        and identity.kind is RingChange.NON_RING
        and identity.new_atom_count == 0
    )
    record("6", ok, f"ring-opening reaction={label.kind.value}; map-identical={identity.kind.value} "
                    f"new_atoms={identity.new_atom_count}")
