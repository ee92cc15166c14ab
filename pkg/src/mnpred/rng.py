"""Deterministic, addressable random-number streams.

Every stochastic routine in the package draws from a stream addressed by
(master seed, path of child indices).  Identical addresses reproduce
identical draws, and distinct addresses give statistically independent
substreams, so simulation iterations can be re-run or reordered without
changing any result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Address of an independent PCG64 substream."""

    seed: int
    path: tuple[int, ...] = ()

    def child(self, *indices: int) -> "RngStream":
        """Derive a substream; ``child(i).child(j)`` equals ``child(i, j)``."""
        return RngStream(self.seed, self.path + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng: "RngStream | np.random.Generator | int") -> np.random.Generator:
    """Accept a stream, a generator, or a bare seed; return a Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
