"""Root-aligned SMILES: alignment, augmentation, scoring and dataset tooling."""
from .align import AlignedPair, Task, align, align_p2r, align_p2s, align_r2p, align_s2r, extract_synthons
from .augment import AugmentConfig, MaskConfig, augment_test, augment_training, mask_corpus
from .metrics import classify_reaction, edit_distance, maxfrag_accuracy, table2_stats, topk_accuracy
from .molgraph import Atom, Bond, Molecule, Reaction, bond_diff, is_isomorphic
from .scoring import BeamOutputs, ScoringConfig, aggregate
from .smiles import canonicalize, parse, tokenize, write_canonical, write_rooted

__version__ = "0.1.0"
