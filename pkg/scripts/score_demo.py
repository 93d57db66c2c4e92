"""Aggregate three augmented beam outputs for one product and print the
ranking for a few values of alpha."""
from rsmiles.scoring import BeamOutputs, ScoringConfig, aggregate

# three rooted writes of C=CC(=O)OCC(Cl)(Cl)Cl, beam size 5; ranks below the
# first are made up for the demo and include one invalid string
VARIANTS = (
    (
        "C=CC(=O)OCC(Cl)C(Cl)(Cl)Cl",
        "C=CC(=O)O.OCC(Cl)(Cl)Cl",
        "C=CC(=O)Cl.OC(Cl)C(Cl)(Cl)Cl",
        "C=CC(=O)Cl.OCC(Cl)Cl",
        "C=CC(=O)OC(=O)C=C.OCC(Cl)(Cl)Cl",
    ),
    (
        "C=CC(=O)Cl.OCC(Cl)(Cl)Cl",
        "C=CC(=O)O.OCC(Cl)(Cl)Cl",
        "C=CC(=O)Br.OCC(Cl)(Cl)Cl",
        "C=CC(=O",
        "C=CC(=O)OC.OCC(Cl)(Cl)Cl",
    ),
    (
        "ClC(Cl)(Cl)CO.C(=O)(Cl)C=C",
        "C=CC(=O)OC(=O)C=C.OCC(Cl)(Cl)Cl",
        "OCC(Cl)(Cl)Cl.C=CC(=O)O",
        "C=CC(=O)Cl.OCC(Cl)(Cl)Br",
        "C1CC1(",
    ),
)


def main() -> None:
    outputs = BeamOutputs(VARIANTS, beam=5)
    for alpha in (0.0, 1.0, 3.0):
        print(f"alpha={alpha}")
        for cand in aggregate(outputs, ScoringConfig(alpha, topk_out=5)):
            print(f"  {cand.final_rank}\t{cand.score:.4f}\t{cand.canonical}")


if __name__ == "__main__":
    main()
