"""Seeded random variate generation on counter-based streams.

Every sampler in this package receives an explicit :class:`RngStream`;
nothing reads global RNG state. A stream is a Philox counter-based
generator keyed by (seed, stream_id): a fixed pair reproduces the same
sequence on every run and platform, and distinct stream ids give
statistically independent sequences. Substreams are derived with
:func:`split` (or :func:`tap` for labelled substreams), so parallel or
reordered work never perturbs another consumer's draws.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(value: int) -> int:
    # Bijective 64-bit mix (splitmix64 finalizer); used only to derive ids.
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by a 64-bit (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def generator(self) -> np.random.Generator:
        """Instantiate the numpy Generator backing this stream."""
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def split(rng: RngStream, k: int) -> list[RngStream]:
    """Derive ``k`` substreams of ``rng``, deterministically.

    Children keep the parent's seed and get stream ids mixed from the
    parent's id, so the same (parent, k) always yields the same children
    and the children's sequences are independent of the parent's.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    base = _splitmix64(rng.stream_id ^ _splitmix64(rng.seed))
    return [RngStream(rng.seed, _splitmix64(base + i + 1)) for i in range(k)]


def tap(rng: RngStream, label: str) -> RngStream:
    """Derive one labelled substream; stable across runs and platforms."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    salt = int.from_bytes(digest, "little")
    return RngStream(rng.seed, _splitmix64(rng.stream_id ^ salt))


@dataclass(frozen=True)
class DistSpec:
    """A distribution family plus validated parameters for :func:`draw`."""

    family: str
    params: tuple

    @staticmethod
    def uniform01() -> "DistSpec":
        return DistSpec("uniform01", ())

    @staticmethod
    def bernoulli(p: float) -> "DistSpec":
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"bernoulli p must be in [0, 1], got {p}")
        return DistSpec("bernoulli", (float(p),))

    @staticmethod
    def beta(a: float, b: float) -> "DistSpec":
        if a <= 0 or b <= 0:
            raise ValueError(f"beta shapes must be positive, got ({a}, {b})")
        return DistSpec("beta", (float(a), float(b)))

    @staticmethod
    def gamma(shape: float, rate: float) -> "DistSpec":
        # Shape-rate convention, frozen package-wide.
        if shape <= 0 or rate <= 0:
            raise ValueError(f"gamma shape/rate must be positive, got ({shape}, {rate})")
        return DistSpec("gamma", (float(shape), float(rate)))

    @staticmethod
    def dirichlet(conc) -> "DistSpec":
        conc = np.asarray(conc, dtype=float)
        if conc.ndim != 1 or conc.size < 2 or np.any(conc <= 0):
            raise ValueError("dirichlet needs a vector of positive concentrations")
        return DistSpec("dirichlet", (tuple(conc.tolist()),))

    @staticmethod
    def normal(mean: float, sd: float) -> "DistSpec":
        if sd <= 0:
            raise ValueError(f"normal sd must be positive, got {sd}")
        return DistSpec("normal", (float(mean), float(sd)))

    @staticmethod
    def poisson(rate: float) -> "DistSpec":
        if rate <= 0:
            raise ValueError(f"poisson rate must be positive, got {rate}")
        return DistSpec("poisson", (float(rate),))

    @staticmethod
    def categorical(probs) -> "DistSpec":
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1 or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("categorical needs non-negative probabilities summing to 1")
        return DistSpec("categorical", (tuple(probs.tolist()),))


def draw(spec: DistSpec, rng: RngStream):
    """Draw one variate from ``spec`` using ``rng``.

    Dirichlet variates are built as normalized Gamma(a_i, 1) draws, so the
    output always lies on the simplex to within rounding.
    """
    g = rng.generator()
    fam = spec.family
    if fam == "uniform01":
        return g.random()
    if fam == "bernoulli":
        return int(g.random() < spec.params[0])
    if fam == "beta":
        return g.beta(*spec.params)
    if fam == "gamma":
        shape, rate = spec.params
        return g.gamma(shape, 1.0 / rate)
    if fam == "dirichlet":
        conc = np.asarray(spec.params[0])
        parts = g.standard_gamma(conc)
        total = parts.sum()
        if total <= 0.0:
            raise ArithmeticError("dirichlet gamma draws underflowed to zero")
        return parts / total
    if fam == "normal":
        return g.normal(*spec.params)
    if fam == "poisson":
        return int(g.poisson(spec.params[0]))
    if fam == "categorical":
        cdf = np.cumsum(spec.params[0])
        return int(np.searchsorted(cdf, g.random(), side="right"))
    raise ValueError(f"unknown distribution family: {fam}")
