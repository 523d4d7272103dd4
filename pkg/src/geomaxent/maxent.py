"""Maximum geometric-entropy estimation from a density matrix.

The estimate is ``q(Z) = exp(-Z^H lam Z) / Z(lam)`` with the multiplier matrix
``lam`` fixed by moment matching ``E_q[Z Z^H] = rho``. Moment matching is the
stationarity condition of the convex dual

    Gamma(lam) = Tr(lam rho) + log Z(lam),

whose gradient is ``rho - E_lam[Z Z^H]`` and whose Hessian is the covariance
of the monomials ``Z^a conj(Z^b)``. ``lam -> lam + c I`` leaves ``q`` unchanged
because ``|Z|^2 = 1``; solutions are reported in the trace-zero gauge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EigenSystem, HermitianMatrix, DensityMatrix, eigh, matrix_to_json, matrix_from_json
from .errors import DimensionMismatch, MaxIterationsExceeded, SingularDensity
from .partition import (
    covariance_eigenbasis,
    log_partition_nodes,
    moments_eigenbasis,
    moments_from_eigensystem,
)

RANK_TOL = 1e-10
GAUGE = "trace-zero"


@dataclass(frozen=True)
class MaxEntState:
    """Exponential-family geometric state with trace-zero multipliers."""

    multipliers: HermitianMatrix
    eigsys: EigenSystem
    logZ: float
    gauge: str = GAUGE

    @classmethod
    def from_multipliers(cls, lam) -> "MaxEntState":
        if not isinstance(lam, HermitianMatrix):
            lam = HermitianMatrix(np.asarray(lam, dtype=complex))
        lam = lam.traceless()
        es = eigh(lam)
        return cls(lam, es, log_partition_nodes(es.values))

    @property
    def dim(self) -> int:
        return self.multipliers.dim

    def energy(self, amplitudes: np.ndarray) -> np.ndarray:
        """``Z^H lam Z`` for a batch of amplitude rows."""
        z = np.atleast_2d(amplitudes)
        return np.einsum("ni,ij,nj->n", z.conj(), self.multipliers.data, z).real

    def log_density(self, amplitudes: np.ndarray) -> np.ndarray:
        return -self.energy(amplitudes) - self.logZ

    def density(self, amplitudes: np.ndarray) -> np.ndarray:
        return np.exp(self.log_density(amplitudes))

    def moments(self) -> DensityMatrix:
        return moments_from_eigensystem(self.eigsys)


@dataclass(frozen=True)
class SolveReport:
    state: MaxEntState
    residual: float
    iterations: int
    entropy: float
    dualValue: float

    def to_json(self) -> dict:
        return {
            "multipliers": matrix_to_json(self.state.multipliers.data),
            "eigenvalues": self.state.eigsys.values.tolist(),
            "logZ": self.state.logZ,
            "residual": self.residual,
            "iterations": self.iterations,
            "entropy": self.entropy,
            "dualValue": self.dualValue,
            "gauge": self.state.gauge,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SolveReport":
        state = MaxEntState.from_multipliers(matrix_from_json(obj["multipliers"]))
        return cls(
            state,
            float(obj.get("residual", float("nan"))),
            int(obj.get("iterations", 0)),
            float(obj.get("entropy", float("nan"))),
            float(obj.get("dualValue", float("nan"))),
        )


def gamma_objective(lam: HermitianMatrix, rho: DensityMatrix):
    """Dual value ``Tr(lam rho) + log Z(lam)`` and its gradient ``rho - moments(lam)``."""
    if lam.dim != rho.dim:
        raise DimensionMismatch(f"multipliers have dim {lam.dim}, density has dim {rho.dim}")
    es = eigh(lam)
    value = lam.pair(rho) + log_partition_nodes(es.values)
    grad = HermitianMatrix.symmetrized(rho.data - moments_from_eigensystem(es).data)
    return value, grad


def geometric_entropy(s: MaxEntState, rho: DensityMatrix) -> float:
    """Closed-form geometric entropy ``-int q log q dV_FS`` (nats) of a moment-matched state."""
    return s.multipliers.pair(rho) + s.logZ


def regularize(rho: DensityMatrix, eps: float) -> DensityMatrix:
    """Mix with the maximally mixed state: ``(1 - eps) rho + eps I / D``."""
    if not 0 < eps < 1:
        raise ValueError("regularization epsilon must lie in (0, 1)")
    D = rho.dim
    return DensityMatrix((1 - eps) * rho.data + eps * np.eye(D) / D)


def _full_rank_eig(rho: DensityMatrix) -> EigenSystem:
    es = eigh(rho)
    if es.values[0] < RANK_TOL:
        raise SingularDensity(
            f"density matrix is singular: smallest eigenvalue {es.values[0]:.3e} "
            f"below rank tolerance {RANK_TOL:g}",
            float(es.values[0]),
        )
    return es


def _report(rho: DensityMatrix, lam: HermitianMatrix, iterations: int) -> SolveReport:
    state = MaxEntState.from_multipliers(lam)
    residual = float(np.max(np.abs(rho.data - state.moments().data)))
    entropy = geometric_entropy(state, rho)
    dual, _ = gamma_objective(state.multipliers, rho)
    return SolveReport(state, residual, iterations, entropy, dual)


def _dual_nodes(l: np.ndarray, r: np.ndarray) -> float:
    return float(l @ r) + log_partition_nodes(l)


def _newton_nodes(r: np.ndarray, tol: float, max_iter: int):
    """Minimize ``l . r + log I(l)`` over ``sum(l) = 0``; returns (l, iterations, converged)."""
    D = len(r)
    l = 1.0 / r
    l -= l.mean()
    ones = np.ones((D, D)) / D
    best = (np.inf, l)
    for it in range(max_iter + 1):
        g = r - moments_eigenbasis(l).values
        res = float(np.max(np.abs(g)))
        if res < best[0]:
            best = (res, l)
        if res <= 0.01 * tol:
            return l, it, True
        if it == max_iter:
            break
        H = covariance_eigenbasis(l)
        # H annihilates the gauge direction; adding the projector onto it
        # makes the system regular and keeps the step in sum(l) = 0
        try:
            step = -np.linalg.solve(H + ones, g)
        except np.linalg.LinAlgError:
            step = -g
        step -= step.mean()
        f0 = _dual_nodes(l, r)
        slope = float(g @ step)
        t = 1.0
        while t > 1e-12:
            trial = l + t * step
            f1 = _dual_nodes(trial, r)
            if f1 <= f0 + 1e-4 * t * slope:
                break
            # at tiny residuals the dual is flat to rounding; accept on gradient decrease
            if res < 1e-6:
                g1 = r - moments_eigenbasis(trial).values
                if np.max(np.abs(g1)) < res:
                    break
            t *= 0.5
        l = l + t * step
        l -= l.mean()
    res, l = best
    return l, max_iter, res <= tol


def solve_multipliers(rho: DensityMatrix, tol: float = 1e-10, max_iter: int = 200) -> SolveReport:
    """Fast co-diagonal solve: Newton on the D eigenframe multipliers.

    ``lam`` shares the eigenvectors of ``rho``; its eigenvalues solve
    ``E_l[q_a] = r_a`` by Newton's method on the convex dual with Armijo
    backtracking, in the gauge ``sum(l) = 0``.

    Raises SingularDensity when rho is rank deficient and
    MaxIterationsExceeded (with the best report attached) when the residual
    target is not reached.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    es = _full_rank_eig(rho)
    l, iterations, _ = _newton_nodes(es.values, tol, max_iter)
    u = es.basis
    lam = HermitianMatrix.symmetrized((u.conj().T * l) @ u)
    report = _report(rho, lam, iterations)
    if report.residual > tol:
        raise MaxIterationsExceeded(
            f"residual {report.residual:.3e} above tolerance {tol:g} after {iterations} iterations",
            report,
        )
    return report


def solve_multipliers_reference(
    rho: DensityMatrix, tol: float = 1e-10, max_iter: int = 100_000
) -> SolveReport:
    """Gradient descent on Gamma over the full trace-zero Hermitian space.

    Used as an independent check of :func:`solve_multipliers`: it makes no
    use of the co-diagonal structure. Steps are Barzilai-Borwein lengths
    safeguarded by Armijo backtracking while the gradient is large enough
    for dual decreases to be resolvable in floating point.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _full_rank_eig(rho)
    D = rho.dim
    lam = np.zeros((D, D), dtype=complex)

    def objective(a):
        v, g = gamma_objective(HermitianMatrix.symmetrized(a), rho)
        gd = g.data - np.trace(g.data).real / D * np.eye(D)
        return v, gd

    f, g = objective(lam)
    t = 1.0
    prev = None
    for it in range(1, max_iter + 1):
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= tol:
            return _report(rho, HermitianMatrix.symmetrized(lam), it - 1)
        if prev is not None:
            ds, dg = lam - prev[0], g - prev[1]
            sy = float(np.vdot(ds, dg).real)
            if sy > 0:
                t = float(np.vdot(ds, ds).real) / sy
        t = min(max(t, 1e-8), 1e8)
        sq = float(np.vdot(g, g).real)
        if gnorm > 1e-6:
            while True:
                trial = lam - t * g
                f1, g1 = objective(trial)
                if f1 <= f - 1e-4 * t * sq or t < 1e-12:
                    break
                t *= 0.5
        else:
            trial = lam - t * g
            f1, g1 = objective(trial)
        prev = (lam, g)
        lam, f, g = trial, f1, g1
    report = _report(rho, HermitianMatrix.symmetrized(lam), max_iter)
    raise MaxIterationsExceeded(f"gradient descent stopped at residual {report.residual:.3e}", report)


def gaussian_ansatz(rho: DensityMatrix) -> MaxEntState:
    """State with multipliers ``rho^{-1} / 2`` (zero mean, covariance rho), trace-zero gauged."""
    es = _full_rank_eig(rho)
    u = es.basis
    raw = (u.conj().T * (0.5 / es.values)) @ u
    return MaxEntState.from_multipliers(HermitianMatrix.symmetrized(raw))


@dataclass(frozen=True)
class AuditReport:
    """Gap between the zero-mean Gaussian shortcut and the moment-matched solution."""

    delta: float
    multiplierDistance: float
    ansatzEigenvalues: list
    maxentEigenvalues: list
    ansatzEntropy: float
    maxentEntropy: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def ansatz_audit(rho: DensityMatrix, tol: float = 1e-12) -> AuditReport:
    """Measure how far ``moments(rho^{-1}/2)`` is from ``rho``; nothing is asserted."""
    ans = gaussian_ansatz(rho)
    moments = ans.moments()
    delta = float(np.max(np.abs(rho.data - moments.data)))
    solved = solve_multipliers(rho, tol=tol)
    dist = float(np.max(np.abs(ans.multipliers.data - solved.state.multipliers.data)))
    return AuditReport(
        delta=delta,
        multiplierDistance=dist,
        ansatzEigenvalues=ans.eigsys.values.tolist(),
        maxentEigenvalues=solved.state.eigsys.values.tolist(),
        ansatzEntropy=geometric_entropy(ans, moments),
        maxentEntropy=solved.entropy,
    )

