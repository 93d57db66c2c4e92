"""Command-line entry point: ``rsmiles {align,score,stats,eval,mask}``.

Exit codes: 0 success, 1 usage error, 2 input/output or format error,
3 internal invariant violation. All randomness comes from ``--seed``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

from .align import AlignedPair, Task, align
from .augment import AugmentConfig, MaskConfig, augment_training, mask_corpus
from .dataio import (
    FormatError,
    clean,
    read_dataset,
    read_token_lines,
    write_masked,
    write_pairs,
)
from .metrics import (
    LengthMismatch,
    cohort_report,
    maxfrag_accuracy,
    merge_stats,
    record_stats,
    topk_accuracy,
)
from .molgraph import MolGraphError, Reaction
from .scoring import BeamOutputs, ScoringConfig, aggregate
from .smiles import SmilesError

log = logging.getLogger("rsmiles")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3
THREADS_ENV = "RSMILES_THREADS"


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    inputs: tuple[str, ...] = ()
    output: str | None = None
    task: str = "P2R"
    factor: int = 1
    seed: int = 0
    root_map: int | None = None
    alpha: float = 1.0
    augmentation: int | None = None
    beam: int | None = None
    topk: int | None = None
    topk_out: int = 10
    ks: tuple[int, ...] = (1, 3, 5, 10)
    format: str = "lines"
    mode: str = "separated"
    rate: float = 0.15
    unknown_token: str = "<unk>"
    threads: int = 1


# -- parallel helpers ----------------------------------------------------------------


def parallel_map(fn: Callable, items: Sequence, threads: int) -> list:
    """Order-preserving map; results never depend on ``threads``."""
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (threads * 8))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


@dataclass(frozen=True)
class _AlignJob:
    task: Task
    factor: int
    seed: int
    root_map: int | None

    def __call__(self, item: tuple[int, Reaction]):
        index, rxn = item
        try:
            if self.root_map is not None:
                pair = align(rxn, self.task, self.root_map)
                return [replace(pair, seed=self.seed)], None
            return augment_training(rxn, AugmentConfig(self.factor, self.seed, self.task), index), None
        except (MolGraphError, SmilesError, ValueError) as exc:
            return [], f"record {index}: {type(exc).__name__}: {exc}"


@dataclass(frozen=True)
class _StatsJob:
    factor: int
    seed: int

    def __call__(self, item: tuple[int, Reaction]):
        index, rxn = item
        try:
            return record_stats(rxn, self.factor, self.seed, index), None
        except (MolGraphError, SmilesError, ValueError) as exc:
            return None, f"record {index}: {type(exc).__name__}: {exc}"


# -- io helpers --------------------------------------------------------------------------


def _load_reactions(cfg: RunConfig) -> tuple[list[Reaction], dict]:
    path = Path(cfg.inputs[0])
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    records = read_dataset(path, cfg.format)
    rxns, report = clean(records, cfg.mode)
    log.info("read %d records, kept %d reactions", len(records), len(rxns))
    return rxns, {"records": len(records), **report.as_dict()}


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_tsv(path: Path, header: Sequence[str], rows) -> None:
    lines = ["\t".join(header)] + ["\t".join(str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(x) -> str:
    return f"{x:.6f}" if isinstance(x, float) else str(x)


def _report_errors(errors: list[str]) -> None:
    for err in errors[:20]:
        log.warning(err)
    if len(errors) > 20:
        log.warning("... %d more record errors", len(errors) - 20)


# -- subcommands ---------------------------------------------------------------------------


def cmd_align(cfg: RunConfig) -> int:
    if cfg.root_map is not None and cfg.factor != 1:
        raise UsageError("--root-map requires --factor 1")
    rxns, clean_report = _load_reactions(cfg)
    job = _AlignJob(Task.coerce(cfg.task), cfg.factor, cfg.seed, cfg.root_map)
    results = parallel_map(job, list(enumerate(rxns)), cfg.threads)
    pairs: list[AlignedPair] = [p for ps, _ in results for p in ps]
    errors = [e for _, e in results if e]
    _report_errors(errors)
    out = _out_dir(cfg)
    write_pairs(pairs, out / "src.txt", out / "tgt.txt")
    _write_tsv(
        out / "pairs.tsv",
        ["record", "aug_index", "root_map", "source", "target"],
        [(i, p.aug_index, p.root_map, p.source, p.target) for i, (ps, _) in enumerate(results) for p in ps],
    )
    _write_json(
        out / "report.json",
        {
            "clean": clean_report,
            "alignment_errors": len(errors),
            "pairs": len(pairs),
            "task": job.task.value,
            "factor": cfg.factor,
            "seed": cfg.seed,
        },
    )
    log.info("wrote %d pairs to %s", len(pairs), out)
    return EXIT_OK


def _read_predictions(path: Path) -> tuple[list[str], dict]:
    """Prediction lines plus settings from optional ``# key=value`` header lines."""
    if not path.is_file():
        raise InputError(f"prediction file not found: {path}")
    lines, header = [], {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            for item in line[1:].split():
                key, _, value = item.partition("=")
                header[key.strip()] = value.strip()
        else:
            lines.append(line.strip())
    return lines, header


def cmd_score(cfg: RunConfig) -> int:
    lines, header = _read_predictions(Path(cfg.inputs[0]))
    try:
        aug = cfg.augmentation or int(header["augmentation"])
        beam = cfg.beam or int(header["beam"])
    except (KeyError, ValueError):
        raise UsageError("augmentation and beam must be given as flags or in the file header") from None
    block = aug * beam
    if not lines or len(lines) % block:
        raise InputError(f"{len(lines)} prediction lines do not fit {aug} variants x beam {beam}")
    scoring = ScoringConfig(cfg.alpha, cfg.topk_out)
    n_records = len(lines) // block
    rows = []
    for r in range(n_records):
        outputs = BeamOutputs.from_flat(lines[r * block:(r + 1) * block], aug, beam, cfg.topk)
        for cand in aggregate(outputs, scoring):
            row = (cand.final_rank, repr(cand.score), cand.canonical)
            rows.append((r, *row) if n_records > 1 else row)
    header_cols = ["rank", "score", "canonical"]
    if n_records > 1:
        header_cols = ["record"] + header_cols
    text = "\n".join(["\t".join(header_cols)] + ["\t".join(str(c) for c in row) for row in rows]) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_stats(cfg: RunConfig) -> int:
    rxns, clean_report = _load_reactions(cfg)
    job = _StatsJob(cfg.factor, cfg.seed)
    results = parallel_map(job, list(enumerate(rxns)), cfg.threads)
    errors = [e for _, e in results if e]
    _report_errors(errors)
    stats = merge_stats([s for s, _ in results if s is not None])
    report = {**stats.as_dict(), "factor": cfg.factor, "seed": cfg.seed, "errors": len(errors), "clean": clean_report}
    rows = [(k, _fmt(v)) for k, v in stats.as_dict().items()]
    rows.append(("reduction_percent", f"{100 * stats.reduction:.2f}"))
    if cfg.output:
        out = _out_dir(cfg)
        _write_json(out / "report.json", report)
        _write_tsv(out / "report.tsv", ["metric", "value"], rows)
    sys.stdout.write("".join(f"{k}\t{v}\n" for k, v in rows))
    return EXIT_OK


def _eval_rows(name: str, acc: dict[int, float]):
    return [(name, k, _fmt(v)) for k, v in sorted(acc.items())]


def cmd_eval(cfg: RunConfig) -> int:
    pred_path, truth_path = (Path(p) for p in cfg.inputs[:2])
    for p in (pred_path, truth_path):
        if not p.is_file():
            raise InputError(f"input file not found: {p}")
    truths = ["".join(t) for t in read_token_lines(truth_path)]
    flat, header = _read_predictions(pred_path)
    beam = cfg.beam or int(header.get("beam", 0))
    if beam < 1:
        raise UsageError("--beam is required")
    if len(flat) != beam * len(truths):
        raise InputError(f"{len(flat)} prediction lines for {len(truths)} truths x beam {beam}")
    preds = [flat[i * beam:(i + 1) * beam] for i in range(len(truths))]
    top = topk_accuracy(preds, truths, cfg.ks)
    frag = maxfrag_accuracy(preds, truths, cfg.ks)
    report = {"n": len(truths), "topk": top, "maxfrag": frag}
    rows = _eval_rows("exact", top) + _eval_rows("maxfrag", frag)
    if len(cfg.inputs) > 2:
        dataset_cfg = replace(cfg, inputs=cfg.inputs[2:])
        rxns, _ = _load_reactions(dataset_cfg)
        if len(rxns) != len(truths):
            raise InputError(f"dataset has {len(rxns)} reactions for {len(truths)} truths")
        task = Task.coerce(cfg.task)
        pairs = [align(r, task) for r in rxns]
        pairs = [replace(p, target=t) for p, t in zip(pairs, truths)]
        report["cohorts"] = cohort_report(rxns, pairs, preds, cfg.ks)
    if cfg.output:
        out = _out_dir(cfg)
        _write_json(out / "eval.json", report)
        _write_tsv(out / "eval.tsv", ["metric", "k", "accuracy"], rows)
        if "cohorts" in report:
            keys = sorted({k for row in report["cohorts"].values() for k in row})
            _write_tsv(
                out / "cohorts.tsv",
                ["cohort"] + keys,
                [[name] + [_fmt(row.get(k, "")) for k in keys] for name, row in report["cohorts"].items()],
            )
    sys.stdout.write("".join("\t".join(str(c) for c in row) + "\n" for row in rows))
    return EXIT_OK


def cmd_mask(cfg: RunConfig) -> int:
    path = Path(cfg.inputs[0])
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    lines = read_token_lines(path)
    masked = mask_corpus(lines, MaskConfig(mask_rate=cfg.rate, unknown_token=cfg.unknown_token, seed=cfg.seed))
    out = _out_dir(cfg)
    write_masked(masked, out / "masked.txt", out / "labels.tsv")
    n_tokens = sum(len(x) for x in lines)
    n_masked = sum(len(m.positions) for m in masked)
    _write_json(out / "report.json", {"tokens": n_tokens, "masked": n_masked, "rate": cfg.rate, "seed": cfg.seed})
    return EXIT_OK


COMMANDS = {"align": cmd_align, "score": cmd_score, "stats": cmd_stats, "eval": cmd_eval, "mask": cmd_mask}


# -- argument parsing ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _ks(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(sorted({int(k) for k in text.split(",")}))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None
    if not ks or ks[0] < 1:
        raise argparse.ArgumentTypeError("k values must be >= 1")
    return ks


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rsmiles", description="Root-aligned SMILES toolkit.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(p, dataset=True, seeded=True):
        p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        p.add_argument("-q", "--quiet", action="store_true", help="warnings only")
        if seeded:
            p.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
        p.add_argument("--threads", type=_positive, default=None, help=f"worker processes (env {THREADS_ENV}, default 1)")
        if dataset:
            p.add_argument("--format", choices=("lines", "csv"), default="lines")
            p.add_argument("--mode", choices=("separated", "mixed"), default="separated", help="reagent handling")

    p = sub.add_parser("align", help="clean, augment and root-align a reaction dataset")
    p.add_argument("input")
    p.add_argument("output", help="output directory")
    p.add_argument("--task", type=str.upper, choices=[t.value for t in Task], default="P2R")
    p.add_argument("--factor", type=_positive, default=1)
    p.add_argument("--root-map", type=int, default=None, help="force this root map number (factor 1 only)")
    common(p)

    p = sub.add_parser("score", help="aggregate beam outputs of augmented inputs")
    p.add_argument("input", help="prediction lines, variant-major; optional '# augmentation=A beam=B' header")
    p.add_argument("-o", "--output", default=None, help="TSV path (default stdout)")
    p.add_argument("--augmentation", type=_positive, default=None)
    p.add_argument("--beam", type=_positive, default=None)
    p.add_argument("--topk", type=_positive, default=None, help="ranks used per variant (default beam)")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--topk-out", type=_positive, default=10)
    common(p, dataset=False, seeded=False)

    p = sub.add_parser("stats", help="edit-distance statistics with and without alignment")
    p.add_argument("input")
    p.add_argument("output", nargs="?", default=None, help="directory for report.json / report.tsv")
    p.add_argument("--factor", type=_positive, default=1)
    common(p)

    p = sub.add_parser("eval", help="top-k and MaxFrag accuracy, optional cohorts")
    p.add_argument("predictions", help="beam lines per record, record-major")
    p.add_argument("truths", help="one tokenized truth per line")
    p.add_argument("--dataset", default=None, help="reaction dataset for cohort breakdown")
    p.add_argument("-o", "--output", default=None, help="directory for eval.json / eval.tsv")
    p.add_argument("--beam", type=_positive, default=None)
    p.add_argument("--ks", type=_ks, default=(1, 3, 5, 10))
    p.add_argument("--task", type=str.upper, choices=[t.value for t in Task], default="P2R")
    common(p, seeded=False)

    p = sub.add_parser("mask", help="masked-token corpus for pretraining")
    p.add_argument("input", help="tokenized lines")
    p.add_argument("output", help="output directory")
    p.add_argument("--rate", type=float, default=0.15)
    p.add_argument("--unknown-token", default="<unk>")
    common(p, dataset=False)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    threads = args.threads
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if threads < 1:
            raise UsageError(f"{THREADS_ENV} must be >= 1")
    if args.subcommand == "eval":
        inputs = (args.predictions, args.truths) + ((args.dataset,) if args.dataset else ())
    else:
        inputs = (args.input,)
    known = {f for f in RunConfig.__dataclass_fields__} - {"subcommand", "inputs", "threads"}
    values = {k: v for k, v in vars(args).items() if k in known and v is not None}
    cfg = RunConfig(subcommand=args.subcommand, inputs=inputs, threads=threads, **values)
    if args.subcommand == "mask" and not 0.0 <= cfg.rate <= 1.0:
        raise UsageError("--rate must be within [0, 1]")
    if args.subcommand == "score" and cfg.alpha < 0:
        raise UsageError("--alpha must be non-negative")
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
        cfg = config_from_args(args)
        log.info("config %s", json.dumps(asdict(cfg), sort_keys=True))
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, FormatError, OSError, UnicodeDecodeError, LengthMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
