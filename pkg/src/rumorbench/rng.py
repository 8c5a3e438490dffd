"""Seedable random streams with hierarchical derivation.

Every stochastic quantity in a benchmark run is drawn from a stream that is
derived from a master seed through a path of (purpose, index) steps, e.g.
``RandomSource(seed).derive("start", run)``.  Two streams with different
derivation paths are statistically independent, and the same path always
reproduces the same stream.  This is what makes experiment results
independent of execution order and worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["RandomSource", "fold_seed"]


def _purpose_tag(purpose: str) -> int:
    """Stable 64-bit tag for a purpose string (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def fold_seed(seed: int, *parts: object) -> int:
    """Fold extra labels into a seed, returning a new nonnegative 63-bit seed.

    Used where a sub-experiment needs its own integer master seed (e.g. one
    seed per permutation in a discrepancy sweep).
    """
    material = repr((int(seed),) + tuple(str(p) for p in parts)).encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big") >> 1


class RandomSource:
    """A deterministic random stream addressable by a derivation path.

    Wraps a PCG64 generator keyed by ``(master_seed, tag_1, idx_1, ...)``.
    The underlying :class:`numpy.random.Generator` is exposed as ``gen`` for
    vectorized draws.
    """

    __slots__ = ("key", "_gen")

    def __init__(self, seed: int, _key: tuple[int, ...] | None = None):
        if _key is not None:
            self.key = _key
        else:
            if seed < 0:
                raise ValueError(f"master seed must be nonnegative, got {seed}")
            self.key = (int(seed),)
        self._gen: np.random.Generator | None = None

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence(list(self.key)))
            )
        return self._gen

    def derive(self, purpose: str, index: int = 0) -> "RandomSource":
        """Child stream for (purpose, index); independent of this stream."""
        if index < 0:
            raise ValueError(f"derivation index must be nonnegative, got {index}")
        return RandomSource(0, _key=self.key + (_purpose_tag(purpose), int(index)))

    # Thin conveniences for scalar draws; vectorized callers use .gen directly.

    def random(self) -> float:
        return float(self.gen.random())

    def integers(self, low: int, high: int | None = None) -> int:
        return int(self.gen.integers(low, high))

    def __repr__(self) -> str:  # pragma: no cover
        return f"RandomSource(key={self.key})"
