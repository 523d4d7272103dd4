"""Closed-form partition function of the exponential family on CP^{D-1}.

After rotating to the eigenframe of the multiplier matrix, the partition
function is ``pi^{D-1}`` times the simplex integral

    I(l) = int_{simplex} exp(-sum_a l_a q_a) dq_1 ... dq_{D-1}
         = sum_k exp(-l_k) / prod_{j != k} (l_j - l_k),

which is the divided difference of ``exp`` at the nodes ``-l``. The
partial-fraction sum is useless when nodes collide, so it is evaluated
through Opitz' formula instead: the divided differences of ``f`` at
``x_0..x_n`` are the first row of ``f(A)`` for the bidiagonal matrix with
``x`` on the diagonal and ones above it. ``exp(A)`` is formed by a Taylor
series of ``A / 2^s`` followed by ``s`` squarings. With the nodes shifted so
that the largest is 0, ``A`` is a Metzler matrix, every intermediate entry is
positive and no cancellation occurs in the squaring phase; repeated nodes
need no special treatment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EigenSystem, HermitianMatrix, DensityMatrix, eigh

# extra Taylor terms past the first one reaching the top-right corner; with
# the scaled norm <= 1 the truncation error is below 1/20! relative.
_TAYLOR_EXTRA = 20


def _log_dd_exp(x: np.ndarray) -> np.ndarray:
    """Log of the divided difference of ``exp`` at each row of ``x`` (shape (B, N))."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    B, N = x.shape
    if not np.all(np.isfinite(x)):
        raise ValueError("nodes must be finite")
    shift = x.max(axis=1)
    y = x - shift[:, None]
    if N == 1:
        return shift.copy()
    spread = -y.min(axis=1)
    # superdiagonal scale keeps the corner entry O(1) for wide spreads;
    # divided differences are recovered by dividing by eta^(N-1)
    eta = np.maximum(1.0, spread)
    norm = float(np.max(spread + eta))
    s = max(0, math.ceil(math.log2(norm)))
    scale = 2.0 ** -s

    A = np.zeros((B, N, N))
    idx = np.arange(N)
    A[:, idx, idx] = y * scale
    A[:, idx[:-1], idx[1:]] = (eta * scale)[:, None]

    S = np.broadcast_to(np.eye(N), (B, N, N)).copy()
    T = S.copy()
    for k in range(1, N + _TAYLOR_EXTRA):
        T = T @ A / k
        S += T
    for _ in range(s):
        S = S @ S
    corner = S[:, 0, N - 1]
    if np.any(corner <= 0) or not np.all(np.isfinite(corner)):
        raise FloatingPointError(f"divided difference lost range: {corner}")
    return np.log(corner) - (N - 1) * np.log(eta) + shift


def log_divided_diff_exp(nodes) -> float:
    """Log of the simplex integral of ``exp(-l . q)``; see :func:`divided_diff_exp`."""
    l = np.asarray(nodes, dtype=float).ravel()
    if l.size < 1:
        raise ValueError("need at least one node")
    return float(_log_dd_exp(-l[None, :])[0])


def divided_diff_exp(nodes) -> float:
    """Simplex integral ``I(l) = sum_k e^{-l_k} / prod_{j!=k} (l_j - l_k)``.

    Stable for confluent and clustered nodes (the confluent limit is
    returned exactly, e.g. ``I(c, c) = e^{-c}``, ``I(c, c, c) = e^{-c}/2``).
    The result may underflow for huge node values; use
    :func:`log_divided_diff_exp` there.
    """
    return math.exp(log_divided_diff_exp(nodes))


@dataclass(frozen=True)
class PartitionValue:
    """``logZ`` of the normalized exponential family and the eigensystem it came from."""

    logZ: float
    nodes: EigenSystem

    @property
    def Z(self) -> float:
        return math.exp(self.logZ)

    def to_json(self) -> dict:
        return {"logZ": self.logZ, "eigenvalues": self.nodes.values.tolist()}


@dataclass(frozen=True)
class MomentVector:
    """Eigenframe moments ``E[q_a]``: positive, summing to one."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def log_partition_nodes(nodes) -> float:
    l = np.asarray(nodes, dtype=float).ravel()
    return (len(l) - 1) * math.log(math.pi) + log_divided_diff_exp(l)


def log_partition(lam: HermitianMatrix) -> PartitionValue:
    """Log of ``int exp(-Z^H lam Z) dV_FS`` including the pi^{D-1} prefactor."""
    es = eigh(lam)
    return PartitionValue(log_partition_nodes(es.values), es)


def moments_eigenbasis(nodes) -> MomentVector:
    """``E[q_a] = -d log I / d l_a`` as a ratio of divided differences.

    The l_a-derivative of the divided difference is the divided difference
    with node a repeated, so ``E[q_a] = g[x, x_a] / g[x]`` at ``x = -l``.
    """
    x = -np.asarray(nodes, dtype=float).ravel()
    D = len(x)
    if D == 1:
        return MomentVector(np.ones(1))
    base = _log_dd_exp(x[None, :])[0]
    ext = np.concatenate([np.broadcast_to(x, (D, D)), x[:, None]], axis=1)
    m = np.exp(_log_dd_exp(ext) - base)
    # the largest moment carries the largest absolute error; take it from the others
    k = int(np.argmax(m))
    m[k] = 1.0 - (m.sum() - m[k])
    return MomentVector(m)


def second_moments_eigenbasis(nodes) -> np.ndarray:
    """``E[q_a q_b] = (1 + delta_ab) g[x, x_a, x_b] / g[x]`` at ``x = -l``."""
    x = -np.asarray(nodes, dtype=float).ravel()
    D = len(x)
    base = _log_dd_exp(x[None, :])[0]
    a, b = np.triu_indices(D)
    ext = np.concatenate(
        [np.broadcast_to(x, (len(a), D)), x[a][:, None], x[b][:, None]], axis=1
    )
    vals = np.exp(_log_dd_exp(ext) - base) * np.where(a == b, 2.0, 1.0)
    out = np.empty((D, D))
    out[a, b] = vals
    out[b, a] = vals
    return out


def covariance_eigenbasis(nodes) -> np.ndarray:
    """Covariance of ``q`` under the eigenframe density; the Hessian of log I in l."""
    m = moments_eigenbasis(nodes).values
    return second_moments_eigenbasis(nodes) - np.outer(m, m)


def moments_matrix(lam: HermitianMatrix) -> DensityMatrix:
    """Second-moment matrix ``E[Z Z^H]`` of the state proportional to exp(-Z^H lam Z).

    Phases are uniform in the eigenframe of ``lam``, so the moment matrix is
    diagonal there: ``U^H diag(E[q]) U``.
    """
    es = eigh(lam)
    return moments_from_eigensystem(es)


def moments_from_eigensystem(es: EigenSystem) -> DensityMatrix:
    m = moments_eigenbasis(es.values).values
    u = es.basis
    rho = (u.conj().T * m) @ u
    return DensityMatrix(0.5 * (rho + rho.conj().T))
