"""Simulated POVM measurements and linear-inversion state reconstruction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .core import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix,
    HermitianMatrix,
    matrix_from_json,
    matrix_to_json,
    traceless_hermitian_basis,
)
from .errors import DimensionMismatch, NotInformationallyComplete, ValidationError
from .manifold import stream_seed

POVM_TOL = 1e-10
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class Povm:
    """PSD effects summing to the identity."""

    effects: tuple

    def __post_init__(self):
        effs = tuple(e if isinstance(e, HermitianMatrix) else HermitianMatrix(np.asarray(e, dtype=complex))
                     for e in self.effects)
        if not effs:
            raise ValidationError("a POVM needs at least one effect")
        D = effs[0].dim
        if any(e.dim != D for e in effs):
            raise DimensionMismatch("effects have mixed dimensions")
        for j, e in enumerate(effs):
            lo = float(np.linalg.eigvalsh(e.data)[0])
            if lo < -POVM_TOL:
                raise ValidationError(f"effect {j} is not PSD (eigenvalue {lo:.3e})", lo)
        dev = float(np.max(np.abs(sum(e.data for e in effs) - np.eye(D))))
        if dev > POVM_TOL:
            raise ValidationError(f"effects do not sum to the identity (deviation {dev:.3e})", dev)
        object.__setattr__(self, "effects", effs)

    @property
    def dim(self) -> int:
        return self.effects[0].dim

    def __len__(self) -> int:
        return len(self.effects)

    def to_json(self) -> dict:
        return {"effects": [matrix_to_json(e.data) for e in self.effects]}

    @classmethod
    def from_json(cls, obj: dict) -> "Povm":
        try:
            effects = obj["effects"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed POVM JSON: {exc}") from exc
        return cls(tuple(HermitianMatrix(matrix_from_json(e)) for e in effects))


@dataclass(frozen=True)
class CountRecord:
    counts: tuple
    shots: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValidationError("counts must be nonnegative")
        if sum(counts) != int(self.shots):
            raise ValidationError(f"counts sum to {sum(counts)}, expected {self.shots} shots")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "shots", int(self.shots))

    @property
    def frequencies(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.shots

    def to_json(self) -> dict:
        return {"counts": list(self.counts), "shots": self.shots}

    @classmethod
    def from_json(cls, obj: dict) -> "CountRecord":
        try:
            return cls(tuple(obj["counts"]), int(obj["shots"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed count record JSON: {exc}") from exc


def _projective(basis_vectors) -> Povm:
    return Povm(tuple(HermitianMatrix.symmetrized(np.outer(v, np.conj(v))) for v in basis_vectors))


def pauli_povm(axis: str) -> Povm:
    """Two-outcome projective measurement of Pauli X, Y or Z (+1 outcome first)."""
    ops = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}
    try:
        op = ops[axis.lower()]
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None
    return Povm((HermitianMatrix.symmetrized((np.eye(2) + op) / 2),
                 HermitianMatrix.symmetrized((np.eye(2) - op) / 2)))


def pauli_povms() -> list:
    return [pauli_povm(a) for a in "xyz"]


def outcome_probabilities(rho: DensityMatrix, m: Povm) -> np.ndarray:
    """Born probabilities ``Tr(E_j rho)``."""
    if rho.dim != m.dim:
        raise DimensionMismatch(f"density has dim {rho.dim}, POVM has dim {m.dim}")
    return np.array([np.einsum("ij,ji->", e.data, rho.data).real for e in m.effects])


def simulate_counts(rho: DensityMatrix, m: Povm, shots: int, seed: int = 0, stream: int = 0) -> CountRecord:
    """Multinomial finite-shot sample of the Born probabilities."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.clip(outcome_probabilities(rho, m), 0.0, None)
    p = p / p.sum()
    rng = np.random.Generator(np.random.PCG64(stream_seed(seed, stream)))
    return CountRecord(tuple(rng.multinomial(shots, p)), shots)


def project_psd(h) -> DensityMatrix:
    """Closest density matrix in spectrum: clip negatives, spread the deficit evenly.

    Eigenvalues are visited smallest first; each one that would go negative
    after receiving its share of the accumulated deficit is zeroed and its
    mass added to the deficit. The remaining eigenvalues absorb the deficit
    uniformly. A valid density matrix is returned unchanged.
    """
    a = np.asarray(h, dtype=complex)
    a = 0.5 * (a + a.conj().T)
    a = a / np.trace(a).real
    w, v = np.linalg.eigh(a)
    if w[0] >= 0:
        return DensityMatrix(a)
    mu = w[::-1].copy()
    vec = v[:, ::-1]
    acc = 0.0
    i = len(mu)
    while i > 0 and mu[i - 1] + acc / i < 0:
        acc += mu[i - 1]
        mu[i - 1] = 0.0
        i -= 1
    mu[:i] += acc / i
    return DensityMatrix((vec * mu) @ vec.conj().T)


def trace_distance(a, b) -> float:
    d = np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))).sum())


Record = tuple  # (Povm, CountRecord | sequence of frequencies)


def _frequencies(obs: Union[CountRecord, Sequence[float]], m: Povm) -> np.ndarray:
    f = obs.frequencies if isinstance(obs, CountRecord) else np.asarray(obs, dtype=float)
    if len(f) != len(m):
        raise DimensionMismatch(f"{len(f)} outcomes recorded for a {len(m)}-effect POVM")
    return f


def linear_inversion(records: Iterable[Record]) -> DensityMatrix:
    """Least-squares density matrix from measured frequencies, projected to the PSD cone.

    ``records`` pairs each POVM with a :class:`CountRecord` or with exact
    outcome probabilities. The unit trace is imposed by writing
    ``rho = I/D + sum_k c_k B_k`` over a traceless orthonormal basis.

    Raises NotInformationallyComplete when the stacked effects do not span
    the D^2-dimensional space of Hermitian matrices.
    """
    records = list(records)
    if not records:
        raise NotInformationallyComplete("no measurement records", 0, None)
    D = records[0][0].dim
    if any(m.dim != D for m, _ in records):
        raise DimensionMismatch("POVMs have mixed dimensions")
    B = traceless_hermitian_basis(D)
    full = np.concatenate([np.eye(D)[None] / np.sqrt(D), B])
    effects = [e.data for m, _ in records for e in m.effects]
    freqs = np.concatenate([_frequencies(obs, m) for m, obs in records])

    coords = np.array([[np.einsum("ij,ji->", e, b).real for b in full] for e in effects])
    sv = np.linalg.svd(coords, compute_uv=False)
    rank = int(np.sum(sv > RANK_RTOL * sv[0]))
    if rank < D * D:
        raise NotInformationallyComplete(
            f"effects span a {rank}-dimensional space; {D * D} needed", rank, D * D
        )
    traces = np.array([np.trace(e).real for e in effects])
    c, *_ = np.linalg.lstsq(coords[:, 1:], freqs - traces / D, rcond=None)
    rho = np.eye(D) / D + np.einsum("k,kij->ij", c, B)
    return project_psd(rho)
