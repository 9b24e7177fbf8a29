"""Counter-based seed derivation.

Child streams depend only on (master, index path), never on draw order,
so suite element #57 is bit-identical whether the suite is generated
serially, in parallel, or one dataset at a time.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(master: int, *path: int) -> int:
    """Fold a master seed and an index path into a 64-bit child seed."""
    ss = np.random.SeedSequence([int(master) & _MASK64] + [int(p) & _MASK64 for p in path])
    return int(ss.generate_state(1, np.uint64)[0])


def rng_for(master: int, *path: int) -> np.random.Generator:
    """Generator seeded from derive_seed(master, *path)."""
    return np.random.default_rng(derive_seed(master, *path))
