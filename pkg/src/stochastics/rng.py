"""
Reproducible random streams.

A stream is identified by a 64-bit seed and a stream id; child streams
extend the spawn key so that per-worker sub-streams never overlap.
"""

from typing import Any, Dict, Sequence, Tuple

import numpy as np


class RngStream:
    """
    Seeded wrapper around a numpy ``Generator`` (PCG64).

    Identical (seed, stream id, call sequence) triples yield identical
    variate sequences. A single stream must not be shared between
    concurrent workers; use :meth:`child` to derive independent ones.
    """

    def __init__(self, seed: int, stream_id: int = 0, path: Sequence[int] = ()):
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path: Tuple[int, ...] = (self.stream_id, *[int(p) for p in path])
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self._path)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def child(self, index: int) -> "RngStream":
        """Derive an independent sub-stream (e.g. one per worker or chain)."""
        return RngStream(self.seed, self.stream_id, path=(*self._path[1:], index))

    def children(self, count: int) -> list:
        return [self.child(i) for i in range(count)]

    def integer_seed(self) -> int:
        """Draw a 32-bit seed for libraries that take ``random_state`` integers."""
        return int(self.generator.integers(0, 2**31 - 1))

    def get_state(self) -> Dict[str, Any]:
        """Serializable snapshot (JSON-safe) of the bit generator state."""
        return {
            "seed": self.seed,
            "stream_id": self.stream_id,
            "path": list(self._path[1:]),
            "bit_generator": self.generator.bit_generator.state,
        }

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "RngStream":
        stream = cls(state["seed"], state["stream_id"], path=state.get("path", ()))
        stream.generator.bit_generator.state = state["bit_generator"]
        return stream

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self._path})"
