"""Reading reaction datasets, cleaning them, and writing token files."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .align import AlignedPair
from .augment import MaskedLine
from .molgraph import Molecule, Reaction, combine, heavy_atom_count, split_fragments
from .smiles import SmilesError, parse, tokenize_line, write_fragments


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class RawRecord:
    line_no: int
    reaction_smiles: str
    class_label: str | None = None
    id: str | None = None


# header names accepted for each CSV column, lower-cased
_CSV_COLUMNS = {
    "reaction_smiles": ("reaction_smiles", "reactants>reagents>production", "rxn_smiles", "reaction", "smiles"),
    "id": ("id", "reaction_id", "source_id"),
    "class": ("class", "class_label", "reaction_class"),
}


def split_reaction(text: str) -> tuple[str, str, str]:
    """Split ``reactants>reagents>products`` on the two top-level ``>``."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == ">" and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    if len(parts) != 3:
        raise FormatError(f"expected 2 '>' separators, found {len(parts) - 1}")
    return parts[0], parts[1], parts[2]


def _check_record(text: str, line_no: int) -> None:
    try:
        split_reaction(text)
    except FormatError as exc:
        raise FormatError(str(exc), line_no) from None


def read_dataset(path, format: str = "lines") -> list[RawRecord]:
    """Load raw records from a line file or a CSV with a header row.

    Line files hold one reaction per line, optionally followed by whitespace
    and an id; blank lines are skipped. CSV columns are located by header name.
    """
    path = Path(path)
    records = []
    with path.open(encoding="utf-8", newline="") as fh:
        if format == "lines":
            for line_no, line in enumerate(fh, start=1):
                fields = line.split()
                if not fields:
                    continue
                _check_record(fields[0], line_no)
                records.append(RawRecord(line_no, fields[0], id=fields[1] if len(fields) > 1 else None))
        elif format == "csv":
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                return []
            names = [h.strip().lower() for h in header]
            cols = {}
            for key, aliases in _CSV_COLUMNS.items():
                cols[key] = next((names.index(a) for a in aliases if a in names), None)
            if cols["reaction_smiles"] is None:
                raise FormatError("no reaction SMILES column in header", 1)
            for line_no, row in enumerate(reader, start=2):
                if not any(cell.strip() for cell in row):
                    continue
                if len(row) != len(header):
                    raise FormatError(f"{len(row)} fields for {len(header)} columns", line_no)

                def cell(key):
                    k = cols[key]
                    return row[k].strip() or None if k is not None else None

                text = cell("reaction_smiles") or ""
                _check_record(text, line_no)
                records.append(RawRecord(line_no, text, cell("class"), cell("id")))
        else:
            raise ValueError(f"unknown dataset format {format!r}")
    return records


# -- cleaning ---------------------------------------------------------------------


@dataclass
class CleanReport:
    kept: int = 0
    duplicated_multiproduct: int = 0
    dropped_no_product: int = 0
    dropped_single_ion: int = 0
    dropped_parse_error: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_no_product + self.dropped_single_ion + self.dropped_parse_error

    def as_dict(self) -> dict:
        return asdict(self)


def _parse_side(text: str) -> list[Molecule]:
    return split_fragments(parse(text)) if text else []


def is_single_ion(reactants: Sequence[Molecule]) -> bool:
    """One fragment made of a single charged heavy atom."""
    return (
        len(reactants) == 1
        and heavy_atom_count(reactants[0]) == 1
        and any(a.charge for a in reactants[0].atoms)
    )


def clean(records: Iterable[RawRecord], mode: str = "separated") -> tuple[list[Reaction], CleanReport]:
    """Parse records into single-product reactions and count what was dropped.

    Records with an empty reactant side are counted as parse errors. In
    ``mixed`` mode reagents are merged into the reactants.
    """
    if mode not in ("separated", "mixed"):
        raise ValueError(f"unknown reagent mode {mode!r}")
    report = CleanReport()
    out = []
    for rec in records:
        try:
            r_txt, g_txt, p_txt = split_reaction(rec.reaction_smiles)
            reactants = _parse_side(r_txt)
            reagents = _parse_side(g_txt)
            products = _parse_side(p_txt)
        except (FormatError, SmilesError, ValueError):
            report.dropped_parse_error += 1
            continue
        if not products:
            report.dropped_no_product += 1
            continue
        if mode == "mixed":
            reactants, reagents = reactants + reagents, []
        if not reactants:
            # nothing to align against; counted with malformed records
            report.dropped_parse_error += 1
            continue
        if is_single_ion(reactants):
            report.dropped_single_ion += 1
            continue
        report.duplicated_multiproduct += len(products) - 1
        for product in products:
            out.append(Reaction(tuple(reactants), tuple(reagents), (product,), rec.id, rec.class_label))
            report.kept += 1
    return out, report


def _side_text(mols: Sequence[Molecule]) -> str:
    return write_fragments(combine(mols)) if mols else ""


def reaction_to_smiles(rxn: Reaction) -> str:
    """Lossless ``reactants>reagents>products`` text, maps and H counts kept."""
    return ">".join(_side_text(side) for side in (rxn.reactants, rxn.reagents, rxn.products))


def reactions_to_records(rxns: Sequence[Reaction]) -> list[RawRecord]:
    return [
        RawRecord(i + 1, reaction_to_smiles(r), r.class_label, r.source_id) for i, r in enumerate(rxns)
    ]


# -- writing ----------------------------------------------------------------------


def _write_lines(path, lines: Sequence[str]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def write_pairs(pairs: Sequence[AlignedPair], src_path, tgt_path) -> None:
    """Space-separated token lines, one pair per line, src and tgt in step."""
    _write_lines(src_path, [" ".join(tokenize_line(p.source)) for p in pairs])
    _write_lines(tgt_path, [" ".join(tokenize_line(p.target)) for p in pairs])


def read_token_lines(path) -> list[list[str]]:
    with Path(path).open(encoding="utf-8") as fh:
        return [line.split() for line in fh.read().splitlines()]


def write_masked(masked: Sequence[MaskedLine], text_path, labels_path) -> None:
    """Masked token lines plus a ``line<TAB>position<TAB>original`` sidecar."""
    _write_lines(text_path, [" ".join(m.tokens) for m in masked])
    _write_lines(
        labels_path,
        [f"{i}\t{p}\t{tok}" for i, m in enumerate(masked) for p, tok in zip(m.positions, m.originals)],
    )
