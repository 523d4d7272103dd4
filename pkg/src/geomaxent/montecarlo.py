"""Monte Carlo checks of exponential-family geometric states.

Estimates use self-normalized importance sampling with the Fubini-Study
uniform proposal, whose weights are ``exp(-(Z^H lam Z - l_min))``; the
constant ``l_min`` (smallest multiplier eigenvalue) caps weights at 1 and
cancels in every ratio. Exact draws come from rejection sampling in the
eigenframe of ``lam``.

Work is split over independently seeded sub-streams (see
:func:`geomaxent.manifold.stream_seed`). Streams are pooled by adding their
weighted sums in stream order, so results depend only on ``(seed, streams)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import HermitianMatrix, matrix_to_json, traceless_hermitian_basis
from .errors import DegenerateWeights, DimensionMismatch
from .manifold import PointBatch, UniformSampler, log_fs_total_volume
from .maxent import MaxEntState

ESS_FLOOR = 100
CHUNK = 1 << 16
MIN_SAMPLES = 1000


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo estimate with standard error and effective sample size.

    For matrix-valued estimates ``stdError`` is complex: its real (imaginary)
    part is the standard error of the real (imaginary) part of ``value``.
    """

    value: object
    stdError: object
    nSamples: int
    ess: float
    acceptanceRate: Optional[float] = None

    def to_json(self) -> dict:
        def enc(v):
            v = np.asarray(v)
            if v.ndim == 2:
                return matrix_to_json(v)
            return float(v) if v.ndim == 0 else v.tolist()

        out = {
            "value": enc(self.value),
            "stdError": enc(self.stdError),
            "nSamples": self.nSamples,
            "ess": self.ess,
        }
        if self.acceptanceRate is not None:
            out["acceptanceRate"] = self.acceptanceRate
        return out


@dataclass
class _Sums:
    sw: float = 0.0
    sw2: float = 0.0
    swf: np.ndarray = 0.0
    sw2f: np.ndarray = 0.0
    sw2f2: np.ndarray = 0.0
    n: int = 0

    def add(self, w, f):
        self.sw += float(w.sum())
        self.sw2 += float((w * w).sum())
        self.swf = self.swf + w @ f
        self.sw2f = self.sw2f + (w * w) @ f
        self.sw2f2 = self.sw2f2 + (w * w) @ (f * f)
        self.n += len(w)

    def merge(self, other: "_Sums"):
        self.sw += other.sw
        self.sw2 += other.sw2
        self.swf = self.swf + other.swf
        self.sw2f = self.sw2f + other.sw2f
        self.sw2f2 = self.sw2f2 + other.sw2f2
        self.n += other.n

    @property
    def ess(self) -> float:
        return self.sw ** 2 / self.sw2 if self.sw2 > 0 else 0.0

    def ratio(self):
        """Self-normalized mean and its delta-method standard error."""
        est = self.swf / self.sw
        var = (self.sw2f2 - 2 * est * self.sw2f + est * est * self.sw2) / self.sw ** 2
        return est, np.sqrt(np.maximum(var, 0.0))


def _split(n: int, streams: int) -> list:
    base, extra = divmod(n, streams)
    return [base + (1 if k < extra else 0) for k in range(streams)]


def _importance_sums(
    state: MaxEntState,
    n: int,
    seed: int,
    features: Callable[[np.ndarray], np.ndarray],
    streams: int = 1,
) -> _Sums:
    if n < 1:
        raise ValueError("n must be >= 1")
    streams = max(1, int(streams))
    lmin = float(state.eigsys.values[0])

    def run(k, count):
        sampler = UniformSampler(state.dim, seed, stream=k)
        sums = _Sums()
        left = count
        while left > 0:
            m = min(CHUNK, left)
            z = sampler.draw(m).amplitudes
            w = np.exp(-(state.energy(z) - lmin))
            sums.add(w, features(z))
            left -= m
        return sums

    counts = _split(n, streams)
    if streams == 1:
        parts = [run(0, counts[0])]
    else:
        with ThreadPoolExecutor(max_workers=streams) as pool:
            parts = list(pool.map(run, range(streams), counts))
    total = _Sums()
    for p in parts:
        total.merge(p)
    return total


def _check(n: int, sums: _Sums):
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    if sums.ess < ESS_FLOOR:
        raise DegenerateWeights(
            f"effective sample size {sums.ess:.1f} below {ESS_FLOOR}; increase the sample "
            "count or use rejection sampling",
            sums.ess,
        )


def _monomials(z: np.ndarray) -> np.ndarray:
    n, D = z.shape
    zz = np.einsum("na,nb->nab", z, z.conj()).reshape(n, D * D)
    return np.concatenate([zz.real, zz.imag], axis=1)


def estimate_density_matrix(state: MaxEntState, n: int, seed: int = 0, streams: int = 1) -> McEstimate:
    """Importance-sampled ``E_q[Z Z^H]`` with per-entry standard errors."""
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    D = state.dim
    sums = _importance_sums(state, n, seed, _monomials, streams)
    _check(n, sums)
    est, se = sums.ratio()
    k = D * D
    value = (est[:k] + 1j * est[k:]).reshape(D, D)
    err = (se[:k] + 1j * se[k:]).reshape(D, D)
    return McEstimate(value, err, sums.n, sums.ess)


def estimate_entropy(state: MaxEntState, n: int, seed: int = 0, streams: int = 1) -> McEstimate:
    """Importance-sampled ``-E_q[log q] = E_q[Z^H lam Z] + log Z``."""
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    sums = _importance_sums(state, n, seed, lambda z: state.energy(z)[:, None], streams)
    _check(n, sums)
    est, se = sums.ratio()
    return McEstimate(float(est[0]) + state.logZ, float(se[0]), sums.n, sums.ess)


def estimate_observable(
    state: MaxEntState, o: HermitianMatrix, n: int, seed: int = 0, streams: int = 1
) -> McEstimate:
    """Importance-sampled ``E_q[<Z|O|Z>]``."""
    if o.dim != state.dim:
        raise DimensionMismatch(f"observable has dim {o.dim}, state has dim {state.dim}")
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")

    def feat(z):
        return np.einsum("ni,ij,nj->n", z.conj(), o.data, z).real[:, None]

    sums = _importance_sums(state, n, seed, feat, streams)
    _check(n, sums)
    est, se = sums.ratio()
    return McEstimate(float(est[0]), float(se[0]), sums.n, sums.ess)


def _plain_mean_weight(state: MaxEntState, n: int, seed: int, streams: int):
    """Mean and standard error of the capped weight under the uniform proposal."""
    sums = _importance_sums(state, n, seed, lambda z: np.zeros((len(z), 0)), streams)
    mean = sums.sw / sums.n
    var = max(sums.sw2 / sums.n - mean * mean, 0.0) * sums.n / max(sums.n - 1, 1)
    return mean, math.sqrt(var / sums.n), sums


def estimate_partition(lam: HermitianMatrix, n: int, seed: int = 0, streams: int = 1) -> McEstimate:
    """Monte Carlo ``int exp(-Z^H lam Z) dV_FS`` as volume times mean integrand."""
    state = MaxEntState.from_multipliers(lam)
    # from_multipliers gauges to trace zero; undo the shift for the raw integral
    shift = lam.trace() / lam.dim
    mean, se, sums = _plain_mean_weight(state, n, seed, streams)
    scale = math.exp(log_fs_total_volume(state.dim) - float(state.eigsys.values[0]) - shift)
    return McEstimate(scale * mean, scale * se, sums.n, sums.ess)


def estimate_normalization(state: MaxEntState, n: int, seed: int = 0, streams: int = 1) -> McEstimate:
    """Monte Carlo ``int q dV_FS``; equals 1 for a correctly normalized state."""
    mean, se, sums = _plain_mean_weight(state, n, seed, streams)
    scale = math.exp(log_fs_total_volume(state.dim) - float(state.eigsys.values[0]) - state.logZ)
    return McEstimate(scale * mean, scale * se, sums.n, sums.ess)


@dataclass(frozen=True)
class CovarianceEstimate:
    """Weighted covariance of the traceless monomial coordinates ``<Z|B_i|Z>``.

    This is the Hessian of the dual in the trace-zero gauge.
    """

    covariance: np.ndarray
    minEigenvalue: float
    minEigenvalueStdError: float
    ess: float
    nSamples: int


def estimate_monomial_covariance(
    state: MaxEntState, n: int, seed: int = 0, batches: int = 20
) -> CovarianceEstimate:
    """Hessian of the dual as a Monte Carlo covariance; batch means give the error on its minimum eigenvalue."""
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    B = traceless_hermitian_basis(state.dim)
    sampler = UniformSampler(state.dim, seed)
    lmin = float(state.eigsys.values[0])
    z = sampler.draw(n).amplitudes
    w = np.exp(-(state.energy(z) - lmin))
    c = np.einsum("ni,kij,nj->nk", z.conj(), B, z).real

    def wcov(wb, cb):
        mu = wb @ cb / wb.sum()
        d = cb - mu
        return (d * wb[:, None]).T @ d / wb.sum()

    cov = wcov(w, c)
    lo = float(np.linalg.eigvalsh(cov)[0])
    mins = [float(np.linalg.eigvalsh(wcov(wb, cb))[0])
            for wb, cb in zip(np.array_split(w, batches), np.array_split(c, batches))]
    se = float(np.std(mins, ddof=1) / math.sqrt(batches))
    ess = float(w.sum() ** 2 / (w * w).sum())
    if ess < ESS_FLOOR:
        raise DegenerateWeights(f"effective sample size {ess:.1f} below {ESS_FLOOR}", ess)
    return CovarianceEstimate(cov, lo, se, ess, n)


@dataclass(frozen=True)
class RejectionSample:
    points: PointBatch
    acceptanceRate: float
    nProposed: int


def sample_maxent(state: MaxEntState, n: int, seed: int = 0, stream: int = 0) -> RejectionSample:
    """Exact draws from ``q`` by rejection from the uniform proposal in the eigenframe.

    A proposal with eigenframe probabilities ``p`` is accepted with
    probability ``exp(-(l . p - l_min))``; the bound is attained at the
    vertex of the smallest multiplier eigenvalue.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    l = state.eigsys.values
    lmin = float(l[0])
    u = state.eigsys.basis
    sampler = UniformSampler(state.dim, seed, stream=stream)
    accept_rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), 1)))
    )
    kept = []
    accepted = proposed = 0
    rate = 1.0
    while accepted < n:
        m = int(min(CHUNK * 4, max(256, 1.2 * (n - accepted) / max(rate, 1e-6))))
        batch = sampler.draw(m)
        ok = accept_rng.random(m) < np.exp(-(batch.probs @ l - lmin))
        proposed += m
        x = batch.amplitudes[ok]
        kept.append(x)
        accepted += len(x)
        rate = max(accepted / proposed, 1e-6)
    x = np.concatenate(kept)[:n]
    # X = U Z in the eigenframe, so Z = U^H X
    z = x @ u.conj()
    return RejectionSample(PointBatch.from_amplitudes(z), accepted / proposed, proposed)


def empirical_density(points: PointBatch) -> McEstimate:
    """Sample mean of ``Z Z^H`` over unweighted points, with standard errors."""
    f = _monomials(points.amplitudes)
    n = len(f)
    D = points.dim
    mean = f.mean(axis=0)
    se = f.std(axis=0, ddof=1) / math.sqrt(n)
    k = D * D
    return McEstimate((mean[:k] + 1j * mean[k:]).reshape(D, D),
                      (se[:k] + 1j * se[k:]).reshape(D, D), n, float(n))
