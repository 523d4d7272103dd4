"""Command-line pipeline: estimate, verify, sample, entropy, grid, tomo, partition, audit.

Exit codes: 0 success, 1 verification outside 3 sigma, 2 singular density,
3 input/parse error, 4 solver did not converge (report still written),
5 degenerate importance weights, 6 grid requested for D != 2,
7 POVM set not informationally complete.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .core import DensityMatrix, HermitianMatrix, matrix_to_json
from .errors import (
    DegenerateWeights,
    MaxIterationsExceeded,
    NotInformationallyComplete,
    SingularDensity,
    ValidationError,
)
from .maxent import MaxEntState, SolveReport, ansatz_audit, regularize, solve_multipliers
from .montecarlo import estimate_density_matrix, estimate_entropy, sample_maxent
from .partition import log_partition, moments_from_eigensystem
from .tomography import (
    CountRecord,
    Povm,
    linear_inversion,
    outcome_probabilities,
    pauli_povm,
    simulate_counts,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_SINGULAR = 2
EXIT_PARSE = 3
EXIT_NOT_CONVERGED = 4
EXIT_DEGENERATE = 5
EXIT_NOT_QUBIT = 6
EXIT_NOT_COMPLETE = 7

DEFAULT_TOL = 1e-10
DEFAULT_SAMPLES = 10 ** 6
DEFAULT_GRID = 200


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: Optional[str] = None
    report: Optional[str] = None
    output: Optional[str] = None
    seed: int = 0
    nSamples: int = DEFAULT_SAMPLES
    tol: float = DEFAULT_TOL
    shots: int = 10 ** 5
    povm: list = field(default_factory=list)
    counts: list = field(default_factory=list)
    truth: Optional[str] = None
    gridSize: int = DEFAULT_GRID
    regularize: Optional[float] = None
    streams: int = 1

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("--tol must be positive")
        if self.command in ("verify", "entropy") and self.nSamples < 1000:
            raise InputError("--samples must be at least 1000 for estimation commands")
        if self.nSamples < 1:
            raise InputError("--samples must be positive")
        if self.regularize is not None and not 0 < self.regularize < 1:
            raise InputError("--regularize must lie in (0, 1)")
        if self.gridSize < 2:
            raise InputError("--grid-size must be at least 2")


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def write_atomic(path: Optional[str], text: str):
    """Write via a temp file in the target directory and rename; stdout when path is None."""
    if path is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def load_density(path) -> DensityMatrix:
    obj = _read_json(path)
    try:
        return DensityMatrix.from_json(obj)
    except ValidationError as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_report(path) -> SolveReport:
    obj = _read_json(path)
    try:
        return SolveReport.from_json(obj)
    except (KeyError, TypeError, ValidationError) as exc:
        raise InputError(f"{path}: not a solve report ({exc})") from exc


def load_povm(name: str) -> Povm:
    if name.lower() in ("pauli-x", "pauli-y", "pauli-z"):
        return pauli_povm(name[-1])
    try:
        return Povm.from_json(_read_json(name))
    except ValidationError as exc:
        raise InputError(f"{name}: {exc}") from exc


def cmd_estimate(cfg: RunConfig) -> int:
    rho = load_density(cfg.input)
    if cfg.regularize is not None:
        rho = regularize(rho, cfg.regularize)
    try:
        report = solve_multipliers(rho, tol=cfg.tol)
    except MaxIterationsExceeded as exc:
        write_atomic(cfg.output, _dump(exc.report.to_json()))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    write_atomic(cfg.output, _dump(report.to_json()))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    report = load_report(cfg.report)
    rho = load_density(cfg.input)
    if rho.dim != report.state.dim:
        raise InputError("report and density have different dimensions")
    state = report.state
    dm = estimate_density_matrix(state, cfg.nSamples, cfg.seed, cfg.streams)
    ent = estimate_entropy(state, cfg.nSamples, cfg.seed + 1, cfg.streams)
    dev = dm.value - rho.data
    within = bool(
        np.all(np.abs(dev.real) <= 3 * dm.stdError.real + 1e-15)
        and np.all(np.abs(dev.imag) <= 3 * dm.stdError.imag + 1e-15)
    )
    closed = state.multipliers.pair(rho) + state.logZ
    out = {
        "densityEstimate": dm.to_json(),
        "entropyEstimate": ent.to_json(),
        "closedFormEntropy": closed,
        "maxDeviation": float(np.max(np.abs(dev))),
        "withinThreeSigma": within,
        "seed": cfg.seed,
        "streams": cfg.streams,
    }
    write_atomic(cfg.output, _dump(out))
    return EXIT_OK if within else EXIT_VERIFY_FAILED


def cmd_entropy(cfg: RunConfig) -> int:
    report = load_report(cfg.report)
    state = report.state
    rho = load_density(cfg.input) if cfg.input else state.moments()
    ent = estimate_entropy(state, cfg.nSamples, cfg.seed, cfg.streams)
    closed = state.multipliers.pair(rho) + state.logZ
    out = {"closedForm": closed, "monteCarlo": ent.to_json(),
           "zScore": (ent.value - closed) / ent.stdError if ent.stdError > 0 else 0.0}
    write_atomic(cfg.output, _dump(out))
    return EXIT_OK


def qubit_grid(state: MaxEntState, size: int = DEFAULT_GRID):
    """Density on a (p, phi) grid with Z = (sqrt(1 - p), sqrt(p) e^{i phi}).

    ``p`` runs over [0, 1] inclusive, ``phi`` over [0, 2 pi) exclusive.
    Returns arrays ``p`` (size,), ``phi`` (size,), ``q`` (size, size).
    """
    if state.dim != 2:
        raise ValueError("grid export needs a qubit state")
    p = np.linspace(0.0, 1.0, size)
    phi = np.linspace(0.0, 2 * math.pi, size, endpoint=False)
    P, F = np.meshgrid(p, phi, indexing="ij")
    z = np.stack([np.sqrt(1 - P), np.sqrt(P) * np.exp(1j * F)], axis=-1).reshape(-1, 2)
    q = state.density(z).reshape(size, size)
    return p, phi, q


def grid_integral(p, phi, q) -> float:
    """Trapezoid in p, periodic rectangle rule in phi, volume weight 1/2."""
    dphi = phi[1] - phi[0]
    inner = q.sum(axis=1) * dphi
    return 0.5 * float(np.trapezoid(inner, p) if hasattr(np, "trapezoid") else np.trapz(inner, p))


def cmd_grid(cfg: RunConfig) -> int:
    report = load_report(cfg.report)
    if report.state.dim != 2:
        print(f"error: grid export needs D = 2, report has D = {report.state.dim}", file=sys.stderr)
        return EXIT_NOT_QUBIT
    p, phi, q = qubit_grid(report.state, cfg.gridSize)
    lines = ["p,phi,q"]
    for i, pi_ in enumerate(p):
        for j, f in enumerate(phi):
            lines.append(f"{float(pi_)!r},{float(f)!r},{float(q[i, j])!r}")
    write_atomic(cfg.output, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sample(cfg: RunConfig) -> int:
    report = load_report(cfg.report)
    res = sample_maxent(report.state, cfg.nSamples, cfg.seed)
    text = res.points.to_csv([f"seed={cfg.seed}", f"acceptance={res.acceptanceRate!r}",
                              f"proposed={res.nProposed}"])
    write_atomic(cfg.output, text)
    return EXIT_OK


def cmd_tomo(cfg: RunConfig) -> int:
    if not cfg.povm:
        raise InputError("at least one --povm is required")
    povms = [load_povm(s) for s in cfg.povm]
    if cfg.truth:
        truth = load_density(cfg.truth)
        records = []
        for k, m in enumerate(povms):
            if cfg.shots == 0:
                records.append((m, outcome_probabilities(truth, m)))
            else:
                records.append((m, simulate_counts(truth, m, cfg.shots, cfg.seed, stream=k)))
    elif cfg.counts:
        if len(cfg.counts) != len(povms):
            raise InputError("need one --counts file per --povm")
        try:
            records = [(m, CountRecord.from_json(_read_json(c))) for m, c in zip(povms, cfg.counts)]
        except ValidationError as exc:
            raise InputError(str(exc)) from exc
    else:
        raise InputError("tomo needs --truth or --counts")
    rho = linear_inversion(records)
    write_atomic(cfg.output, _dump(matrix_to_json(rho.data)))
    return EXIT_OK


def cmd_partition(cfg: RunConfig) -> int:
    try:
        lam = HermitianMatrix.from_json(_read_json(cfg.input))
    except ValidationError as exc:
        raise InputError(str(exc)) from exc
    pv = log_partition(lam)
    out = pv.to_json()
    out["moments"] = matrix_to_json(moments_from_eigensystem(pv.nodes).data)
    write_atomic(cfg.output, _dump(out))
    return EXIT_OK


def cmd_audit(cfg: RunConfig) -> int:
    rho = load_density(cfg.input)
    write_atomic(cfg.output, _dump(ansatz_audit(rho).to_json()))
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "verify": cmd_verify,
    "entropy": cmd_entropy,
    "grid": cmd_grid,
    "sample": cmd_sample,
    "tomo": cmd_tomo,
    "partition": cmd_partition,
    "audit": cmd_audit,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geomaxent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, report=False, samples=False):
        p.add_argument("--output", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, default=0)
        if report:
            p.add_argument("--report", required=True, help="SolveReport JSON from `estimate`")
        if samples:
            p.add_argument("--samples", dest="nSamples", type=int, default=DEFAULT_SAMPLES)
            p.add_argument("--streams", type=int, default=1, help="independent sub-streams")

    p = sub.add_parser("estimate", help="solve for the max-entropy multipliers")
    p.add_argument("--input", required=True, help="density matrix JSON")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--regularize", type=float, metavar="EPS",
                   help="mix with I/D: (1-EPS) rho + EPS I/D before solving")
    common(p)

    p = sub.add_parser("verify", help="Monte Carlo check of a solve report")
    p.add_argument("--input", required=True, help="target density matrix JSON")
    common(p, report=True, samples=True)

    p = sub.add_parser("entropy", help="closed-form and Monte Carlo geometric entropy")
    p.add_argument("--input", help="density matrix JSON (default: the state's own moments)")
    common(p, report=True, samples=True)

    p = sub.add_parser("grid", help="qubit density on a (p, phi) grid as CSV")
    p.add_argument("--grid-size", dest="gridSize", type=int, default=DEFAULT_GRID)
    common(p, report=True)

    p = sub.add_parser("sample", help="exact samples from the estimated state as CSV")
    common(p, report=True, samples=True)

    p = sub.add_parser("tomo", help="simulate POVM counts and reconstruct a density matrix")
    p.add_argument("--povm", action="append", default=[],
                   help="POVM JSON file or pauli-x|pauli-y|pauli-z (repeatable)")
    p.add_argument("--truth", help="true density matrix JSON to simulate from")
    p.add_argument("--counts", action="append", default=[],
                   help="count record JSON, one per --povm (repeatable)")
    p.add_argument("--shots", type=int, default=10 ** 5, help="shots per POVM; 0 = exact frequencies")
    common(p)

    p = sub.add_parser("partition", help="log partition function of a multiplier matrix")
    p.add_argument("--input", required=True, help="Hermitian matrix JSON")
    common(p)

    p = sub.add_parser("audit", help="compare the rho^-1/2 shortcut with the exact solution")
    p.add_argument("--input", required=True, help="density matrix JSON")
    common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**vars(args))
        return COMMANDS[cfg.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SingularDensity as exc:
        print(f"error: {exc}; pass --regularize EPS to solve (1-EPS) rho + EPS I/D", file=sys.stderr)
        return EXIT_SINGULAR
    except DegenerateWeights as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NotInformationallyComplete as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_COMPLETE


if __name__ == "__main__":
    sys.exit(main())
