"""Dense Hermitian and density-matrix types, eigendecomposition, Born-rule values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    NotHermitian,
    NotPSD,
    TraceNotOne,
    ValidationError,
)
from .manifold import PurePoint

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_FLOOR = 1e-12
# components below this modulus are skipped when fixing eigenvector phases
PHASE_FIX_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HermitianMatrix:
    """An immutable D x D complex Hermitian matrix.

    Construction from raw data checks Hermiticity to ``HERMITIAN_TOL``
    (relative to the largest entry when that exceeds 1) and then stores the
    exactly Hermitian part ``(A + A^H) / 2``.
    """

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        dev = float(np.max(np.abs(a - a.conj().T)))
        scale = max(1.0, float(np.max(np.abs(a))))
        if dev > HERMITIAN_TOL * scale:
            raise NotHermitian(f"matrix is not Hermitian: max |A - A^H| = {dev:.3e}", dev)
        object.__setattr__(self, "data", _frozen(0.5 * (a + a.conj().T)))

    @classmethod
    def symmetrized(cls, a) -> "HermitianMatrix":
        """Build from ``a`` by taking its Hermitian part, without the tolerance check."""
        a = np.asarray(a, dtype=complex)
        return cls(0.5 * (a + a.conj().T))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def pair(self, other: "HermitianMatrix") -> float:
        """Real pairing Tr(A B) of two Hermitian matrices."""
        if other.dim != self.dim:
            raise DimensionMismatch(f"dimensions differ: {self.dim} vs {other.dim}")
        return float(np.einsum("ij,ji->", self.data, other.data).real)

    def shifted(self, c: float) -> "HermitianMatrix":
        """Return ``A + c I``."""
        return HermitianMatrix.symmetrized(self.data + c * np.eye(self.dim))

    def traceless(self) -> "HermitianMatrix":
        return self.shifted(-self.trace() / self.dim)

    def to_json(self) -> dict:
        return matrix_to_json(self.data)

    @classmethod
    def from_json(cls, obj: dict) -> "HermitianMatrix":
        return cls(matrix_from_json(obj))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)


@dataclass(frozen=True)
class DensityMatrix(HermitianMatrix):
    """A Hermitian, positive semidefinite, unit-trace matrix."""

    def __post_init__(self):
        super().__post_init__()
        tr = np.trace(self.data).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise TraceNotOne(f"trace is {tr!r}, deviation {abs(tr - 1.0):.3e}", abs(tr - 1.0))
        lo = float(np.linalg.eigvalsh(self.data)[0])
        if lo < -PSD_FLOOR:
            raise NotPSD(f"matrix has negative eigenvalue {lo:.6g}", lo)

    @classmethod
    def from_json(cls, obj: dict) -> "DensityMatrix":
        return cls(matrix_from_json(obj))


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues ``values`` and a unitary ``basis`` whose rows are eigenvectors.

    ``basis @ A @ basis^H == diag(values)``.
    """

    values: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "basis", _frozen(self.basis))

    @property
    def dim(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        """Return ``U^H diag(values) U``."""
        u = self.basis
        return (u.conj().T * self.values) @ u


@dataclass(frozen=True)
class DiscreteEnsemble:
    """Finite convex mixture of pure states, a sum of Dirac deltas on the manifold."""

    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple((float(w), p) for w, p in self.components)
        if not comps:
            raise ValidationError("ensemble needs at least one component")
        dims = {p.dim for _, p in comps}
        if len(dims) != 1:
            raise DimensionMismatch(f"components have mixed dimensions {sorted(dims)}")
        weights = np.array([w for w, _ in comps])
        if np.any(weights < 0) or np.any(weights > 1):
            raise ValidationError("weights must lie in [0, 1]")
        dev = abs(weights.sum() - 1.0)
        if dev > 1e-12:
            raise ValidationError(f"weights sum to {weights.sum()!r}", dev)
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return self.components[0][1].dim


def validate_density(matrix) -> DensityMatrix:
    """Check a raw square complex array and return it as a :class:`DensityMatrix`.

    Raises NotHermitian, TraceNotOne or NotPSD with the measured deviation.
    """
    return DensityMatrix(np.asarray(matrix, dtype=complex))


def eigh(h: HermitianMatrix) -> EigenSystem:
    """Eigendecomposition with ascending values and a deterministic phase convention.

    Each eigenvector is multiplied by a phase making its first component of
    modulus above ``PHASE_FIX_TOL`` real and positive.
    """
    a = h.data if isinstance(h, HermitianMatrix) else np.asarray(h, dtype=complex)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        finite = bool(np.all(np.isfinite(a)))
        norm = float(np.linalg.norm(a)) if finite else float("nan")
        raise ConvergenceFailure(
            f"eigh failed ({exc}); finite entries: {finite}, Frobenius norm {norm:.3e}"
        ) from exc
    for k in range(v.shape[1]):
        col = v[:, k]
        idx = int(np.argmax(np.abs(col) > PHASE_FIX_TOL))
        c = col[idx]
        v[:, k] = col * (abs(c) / c)
    return EigenSystem(w, v.conj().T)


def observable_value(o: HermitianMatrix, z: PurePoint) -> float:
    """Born-rule value <psi|O|psi> of the quadratic function of O at point ``z``."""
    amps = z.amplitudes
    if o.dim != len(amps):
        raise DimensionMismatch(f"observable has dim {o.dim}, point has dim {len(amps)}")
    val = np.vdot(amps, o.data @ amps)
    assert abs(val.imag) <= 1e-12 * max(1.0, abs(val.real)), val
    return float(val.real)


def ensemble_density(e: DiscreteEnsemble) -> DensityMatrix:
    rho = np.zeros((e.dim, e.dim), dtype=complex)
    for w, p in e.components:
        z = p.amplitudes
        rho += w * np.outer(z, z.conj())
    return validate_density(rho)


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"dim": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix JSON: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise DimensionMismatch(f"matrix JSON declares dim {dim} but arrays are {re.shape}, {im.shape}")
    return re + 1j * im


def pure_projector(z: Sequence[complex]) -> HermitianMatrix:
    z = np.asarray(z, dtype=complex)
    z = z / np.linalg.norm(z)
    return HermitianMatrix.symmetrized(np.outer(z, z.conj()))


def traceless_hermitian_basis(D: int) -> np.ndarray:
    """Orthonormal basis (Tr(B_i B_j) = delta_ij) of traceless Hermitian D x D matrices."""
    basis = []
    for a in range(D):
        for b in range(a + 1, D):
            m = np.zeros((D, D), dtype=complex)
            m[a, b] = m[b, a] = 1 / math.sqrt(2)
            basis.append(m)
            m = np.zeros((D, D), dtype=complex)
            m[a, b] = -1j / math.sqrt(2)
            m[b, a] = 1j / math.sqrt(2)
            basis.append(m)
    for k in range(1, D):
        d = np.zeros(D)
        d[:k] = 1.0
        d[k] = -k
        basis.append(np.diag(d / math.sqrt(k * (k + 1))).astype(complex))
    return np.array(basis).reshape(len(basis), D, D)


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
