from pathlib import Path

import pytest

from rsmiles.dataio import RawRecord, clean, read_dataset

DATA = Path(__file__).parent / "data"

ACRYLATE_REACTANTS = (
    "[C:1]([CH:2]=[CH2:3])(=[O:4])[Cl:11].[OH:5][CH2:6][C:7]([Cl:8])([Cl:9])[Cl:10]"
)
ACRYLATE_PRODUCT = "[C:1]([CH:2]=[CH2:3])(=[O:4])[O:5][CH2:6][C:7]([Cl:8])([Cl:9])[Cl:10]"
ACRYLATE = f"{ACRYLATE_REACTANTS}>>{ACRYLATE_PRODUCT}"

# oxolane hemiacetal opening to an open-chain hydroxy aldehyde
RING_OPENING = (
    "[CH2:1]1[CH:2]([NH2:3])[CH:4]([OH:5])[O:6][CH2:7]1"
    ">>[OH:6][CH2:7][CH2:1][CH:2]([NH2:3])[CH:4]=[O:5]"
)


def reaction(text: str, mode: str = "separated"):
    rxns, report = clean([RawRecord(1, text)], mode)
    assert len(rxns) == 1, report
    return rxns[0]


def corpus() -> list[str]:
    return [line.strip() for line in (DATA / "molecules.smi").read_text().splitlines() if line.strip()]


@pytest.fixture
def acrylate():
    return reaction(ACRYLATE)


@pytest.fixture
def ring_opening():
    return reaction(RING_OPENING)


@pytest.fixture(scope="session")
def sample_reactions():
    rxns, _ = clean(read_dataset(DATA / "uspto_sample_1k.csv", "csv"))
    return rxns


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
