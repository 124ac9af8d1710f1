"""Reproducible random-number streams.

A stream is addressed by (seed, stream_index). Distinct addresses give
statistically independent generators (SeedSequence spawning guarantees),
identical addresses reproduce bit-identical draw sequences. Ensemble code
assigns stream_index by fixed-size batch, so results do not depend on how
batches are scheduled across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RngStream"]

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not (-(2**63) <= self.seed < _U64):
            raise ValueError("seed must fit in 64 bits")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence((self.seed % _U64, self.stream_index))
        )

    def child(self, offset: int) -> "RngStream":
        """A stream addressed relative to this one (same seed, shifted index)."""
        return RngStream(self.seed, self.stream_index + offset)
