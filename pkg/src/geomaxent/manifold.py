"""Points of CP^{D-1}, probability+phase coordinates and Fubini-Study uniform sampling.

In probability+phase coordinates ``Z^a = sqrt(p_a) exp(i nu_a)`` the
Fubini-Study volume element is ``prod_{a>=1} dp_a dnu_a / 2``, so the uniform
measure is a flat density on the probability simplex times independent
uniform phases.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidSimplexPoint, ZeroVector

NORM_TOL = 1e-12
SIMPLEX_TOL = 1e-10
# amplitudes below this modulus count as vanishing for the global-phase gauge
VANISHING = 1e-14
TWO_PI = 2.0 * math.pi


def _gauge_fix(z: np.ndarray) -> np.ndarray:
    """Normalize and rotate so the first non-vanishing amplitude is real and >= 0.

    Works on a single vector (D,) or a batch (n, D).
    """
    z = np.asarray(z, dtype=complex)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    norms = np.linalg.norm(z, axis=1)
    if np.any(norms == 0):
        raise ZeroVector("zero vector has no projective class")
    z = z / norms[:, None]
    first = np.argmax(np.abs(z) > VANISHING, axis=1)
    lead = z[np.arange(len(z)), first]
    z = z * (np.abs(lead) / lead)[:, None]
    z[np.arange(len(z)), first] = np.abs(lead)
    z[np.abs(z) <= VANISHING] = 0.0
    return z[0] if single else z


@dataclass(frozen=True)
class PurePoint:
    """A gauge-fixed unit vector representing a ray of the Hilbert space."""

    amplitudes: np.ndarray

    def __post_init__(self):
        z = np.array(self.amplitudes, dtype=complex, copy=True)
        if z.ndim != 1 or len(z) < 1:
            raise DimensionMismatch(f"amplitudes must be a nonempty vector, got shape {z.shape}")
        n = np.linalg.norm(z)
        if abs(n - 1.0) > NORM_TOL:
            raise InvalidSimplexPoint(f"amplitudes have norm {n!r}", abs(n - 1.0))
        z.setflags(write=False)
        object.__setattr__(self, "amplitudes", z)

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    @property
    def probs(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def phases(self) -> np.ndarray:
        """Phases of components 1..D-1 in [0, 2 pi); zero-amplitude components get 0."""
        z = self.amplitudes[1:]
        nu = np.mod(np.angle(z), TWO_PI)
        nu[np.abs(z) <= VANISHING] = 0.0
        return nu

    def to_json(self) -> dict:
        return {"probs": self.probs.tolist(), "phases": self.phases.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "PurePoint":
        return to_homogeneous(obj["probs"], obj.get("phases", []))


def to_homogeneous(probs: Sequence[float], phases: Sequence[float] = ()) -> PurePoint:
    """Map probability+phase coordinates to gauge-fixed homogeneous coordinates.

    An empty ``phases`` means all phases are zero.
    """
    p = np.asarray(probs, dtype=float)
    nu = np.asarray(phases, dtype=float)
    if nu.size == 0 and p.ndim == 1:
        nu = np.zeros(max(len(p) - 1, 0))
    if p.ndim != 1 or len(p) < 1:
        raise InvalidSimplexPoint("probs must be a nonempty vector")
    if len(nu) != len(p) - 1:
        raise DimensionMismatch(f"expected {len(p) - 1} phases, got {len(nu)}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > SIMPLEX_TOL:
        raise InvalidSimplexPoint(f"not a simplex point: min {p.min()!r}, sum {p.sum()!r}",
                                  abs(p.sum() - 1.0))
    if not np.all(np.isfinite(nu)):
        raise InvalidSimplexPoint("phases must be finite")
    p = p / p.sum()
    z = np.sqrt(p).astype(complex)
    z[1:] *= np.exp(1j * nu)
    return PurePoint(_gauge_fix(z))


def from_homogeneous(z: Sequence[complex]) -> PurePoint:
    """Canonical representative of the projective class of a nonzero vector."""
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {z.shape}")
    return PurePoint(_gauge_fix(z))


def fs_total_volume(D: int) -> float:
    """Fubini-Study volume of CP^{D-1}: pi^{D-1} / (D-1)!."""
    if D < 1:
        raise ValueError("D must be >= 1")
    return math.pi ** (D - 1) / math.factorial(D - 1)


def log_fs_total_volume(D: int) -> float:
    if D < 1:
        raise ValueError("D must be >= 1")
    return (D - 1) * math.log(math.pi) - math.lgamma(D)


@dataclass
class PointBatch:
    """A batch of points stored as coordinate arrays.

    ``probs`` has shape (n, D) and ``phases`` shape (n, D-1). Indexing and
    iteration yield :class:`PurePoint` objects.
    """

    probs: np.ndarray
    phases: np.ndarray

    @property
    def dim(self) -> int:
        return self.probs.shape[1]

    @property
    def amplitudes(self) -> np.ndarray:
        z = np.sqrt(self.probs).astype(complex)
        z[:, 1:] *= np.exp(1j * self.phases)
        return z

    @classmethod
    def from_amplitudes(cls, z: np.ndarray) -> "PointBatch":
        z = _gauge_fix(np.atleast_2d(z))
        probs = np.abs(z) ** 2
        nu = np.mod(np.angle(z[:, 1:]), TWO_PI)
        nu[np.abs(z[:, 1:]) <= VANISHING] = 0.0
        return cls(probs, nu)

    def __len__(self) -> int:
        return self.probs.shape[0]

    def __getitem__(self, i) -> PurePoint:
        return PurePoint(_gauge_fix(self.amplitudes[i]))

    def __iter__(self) -> Iterator[PurePoint]:
        for z in _gauge_fix(self.amplitudes):
            yield PurePoint(z)

    def to_csv(self, comments: Sequence[str] = ()) -> str:
        """CSV with columns p_0..p_{D-1}, nu_1..nu_{D-1}, optional '#' comment lines first."""
        buf = io.StringIO()
        for c in comments:
            buf.write(f"# {c}\n")
        w = csv.writer(buf, lineterminator="\n")
        D = self.dim
        w.writerow([f"p_{a}" for a in range(D)] + [f"nu_{a}" for a in range(1, D)])
        for p, nu in zip(self.probs, self.phases):
            w.writerow([repr(float(x)) for x in p] + [repr(float(x)) for x in nu])
        return buf.getvalue()


def stream_seed(seed: int, stream: int = 0) -> np.random.SeedSequence:
    """Seed sequence for sub-stream ``stream`` of ``seed``.

    Derived as ``SeedSequence(entropy=seed, spawn_key=(stream,))``, numpy's
    documented hash-based derivation, so sub-streams are independent.
    """
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))


class UniformSampler:
    """Reproducible stream of Fubini-Study uniform points.

    Each point consumes ``2D - 1`` uniforms in row-major order, so the stream
    is the same regardless of how draws are chunked.
    """

    def __init__(self, dim: int, seed: int = 0, stream: int = 0):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        self.seed = int(seed)
        self.stream = int(stream)
        self.counter = 0
        self._rng = np.random.Generator(np.random.PCG64(stream_seed(seed, stream)))

    def draw(self, n: int) -> PointBatch:
        if n < 0:
            raise ValueError("n must be >= 0")
        D = self.dim
        u = self._rng.random((n, 2 * D - 1))
        e = -np.log1p(-u[:, :D])
        probs = e / e.sum(axis=1, keepdims=True)
        phases = TWO_PI * u[:, D:]
        self.counter += n
        return PointBatch(probs, phases)


def sample_uniform(s: UniformSampler, n: int) -> PointBatch:
    """Draw ``n`` uniform points: flat Dirichlet probabilities, uniform phases."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return s.draw(n)
