"""
Seed derivation for usr-rl.

All randomness flows from one root seed. Each component gets its own
``numpy.random.Generator`` keyed by ``(root seed, label, index)`` so that the
number of workers or the order they run in can never change a result.
"""

import zlib

import numpy as np


def derive_seed_sequence(root_seed: int, label: str, index: int = 0) -> np.random.SeedSequence:
    """Build the seed sequence for one component stream.

    Args:
        root_seed: Run-level seed (``train.seed`` / ``--seed``).
        label: Component label, e.g. ``"sweep"`` or ``"env"``.
        index: Instance index within the component (sweep point, episode...).

    Returns:
        A ``SeedSequence`` whose spawn key encodes label and index.
    """
    if root_seed < 0 or index < 0:
        raise ValueError(f"seed and index must be non-negative, got {root_seed}, {index}")
    return np.random.SeedSequence(
        entropy=int(root_seed),
        spawn_key=(zlib.crc32(label.encode("utf-8")), int(index)),
    )


def derive_rng(root_seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Return an independent PCG64 generator for ``(root_seed, label, index)``."""
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(root_seed, label, index)))


def child_seed(rng: np.random.Generator) -> int:
    """Draw a fresh 63-bit seed from ``rng`` for a nested component."""
    return int(rng.integers(0, 2**63 - 1))
