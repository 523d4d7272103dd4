"""Acceptance criteria, each printed as one PASS/FAIL line.

Run alone with ``python3 -m pytest tests/test_acceptance.py -v``; the lines
below are printed whether or not output capture is on.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy import integrate

from geomaxent.cli import grid_integral, main
from geomaxent.core import DiscreteEnsemble, HermitianMatrix, ensemble_density, matrix_from_json, matrix_to_json
from geomaxent.core import validate_density
from geomaxent.errors import SingularDensity
from geomaxent.manifold import from_homogeneous
from geomaxent.maxent import MaxEntState, ansatz_audit, solve_multipliers, solve_multipliers_reference
from geomaxent.montecarlo import estimate_monomial_covariance, estimate_partition
from geomaxent.partition import divided_diff_exp, log_partition
from geomaxent.tomography import linear_inversion, outcome_probabilities, pauli_povms, simulate_counts, trace_distance

from conftest import BENCH, random_density, random_hermitian

# max-norm gap between rho and the moments of rho^{-1}/2 for the benchmark
# matrix; frozen from the first audit run and confirmed in mpmath
BENCH_AUDIT_DELTA = 0.13820298974245859


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read(path):
    with open(path) as fh:
        return json.load(fh)


def test_criterion_01_maximally_mixed(tmp_path, report):
    src = write(tmp_path / "mixed.json", matrix_to_json(np.eye(2) / 2))
    out = str(tmp_path / "report.json")
    t0 = time.perf_counter()
    code = main(["estimate", "--input", src, "--output", out])
    elapsed = time.perf_counter() - t0
    rep = read(out)
    lam = np.max(np.abs(matrix_from_json(rep["multipliers"])))
    ent_err = abs(rep["entropy"] - math.log(math.pi))
    ok = code == 0 and lam <= 1e-10 and ent_err <= 1e-9 and elapsed < 1.0
    report(1, ok, f"|lam|={lam:.1e} entropy error={ent_err:.1e} time={elapsed:.2f}s")


def test_criterion_02_bench(tmp_path, report):
    t0 = time.perf_counter()
    src = write(tmp_path / "bench.json", matrix_to_json(BENCH))
    rep_path, ver_path, grid_path = (str(tmp_path / n) for n in ("report.json", "verify.json", "grid.csv"))
    codes = [main(["estimate", "--input", src, "--output", rep_path])]
    codes.append(main(["verify", "--report", rep_path, "--input", src, "--samples", "1000000",
                       "--output", ver_path]))
    codes.append(main(["grid", "--report", rep_path, "--output", grid_path]))
    elapsed = time.perf_counter() - t0

    residual = read(rep_path)["residual"]
    ver = read(ver_path)
    data = np.loadtxt(grid_path, delimiter=",", skiprows=1)
    size = int(round(math.sqrt(len(data))))
    p, phi = data[::size, 0], data[:size, 1]
    mass = grid_integral(p, phi, data[:, 2].reshape(size, size))
    ok = (codes == [0, 0, 0] and residual <= 1e-10 and ver["withinThreeSigma"]
          and ver["maxDeviation"] <= 5e-3 and abs(mass - 1) <= 1e-3 and elapsed < 30)
    report(2, ok, f"residual={residual:.1e} maxDev={ver['maxDeviation']:.1e} "
                  f"within3se={ver['withinThreeSigma']} grid mass={mass:.6f} time={elapsed:.1f}s")


def test_criterion_03_closed_form_vs_monte_carlo(report):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    zs = []
    for k in range(50):
        D = (2, 3, 4)[k % 3]
        lam = HermitianMatrix.symmetrized(random_hermitian(rng, D, spread=20 * rng.random(),
                                                           offset=rng.uniform(-5, 5)))
        est = estimate_partition(lam, 10 ** 6, seed=1000 + k)
        zs.append((est.value - log_partition(lam).Z) / est.stdError)
    elapsed = time.perf_counter() - t0
    zs = np.abs(zs)
    hits = int(np.sum(zs <= 3))
    ok = hits == 50 and elapsed < 120
    report(3, ok, f"{hits}/50 within 3 se (max |z|={zs.max():.2f}) time={elapsed:.1f}s")


def test_criterion_04_confluence(report):
    eps = 1e-8
    pair_err = abs(divided_diff_exp([0.0, eps]) - (1 - eps / 2))
    worst = 0.0
    for c in (-2.0, 0.0, 0.5, 3.0):
        quad, _ = integrate.dblquad(lambda y, x: math.exp(-c), 0, 1, 0, lambda x: 1 - x)
        want = math.exp(-c) / 2
        assert quad == pytest.approx(want, rel=1e-12)
        worst = max(worst, abs(divided_diff_exp([c, c, c]) / want - 1))
    ok = pair_err <= 1e-9 and worst <= 1e-12
    report(4, ok, f"(0,1e-8) error={pair_err:.1e}  (c,c,c) worst rel error={worst:.1e}")


def test_criterion_05_convexity(report):
    rng = np.random.default_rng(5)
    worst = math.inf
    fails = 0
    for k in range(100):
        D = 2 + k % 2
        s = MaxEntState.from_multipliers(random_hermitian(rng, D, spread=10 * rng.random()))
        c = estimate_monomial_covariance(s, 20000, seed=k)
        score = c.minEigenvalue / c.minEigenvalueStdError
        worst = min(worst, score)
        fails += c.minEigenvalue < -5 * c.minEigenvalueStdError
    report(5, fails == 0, f"{100 - fails}/100 with min eigenvalue >= -5 se (worst ratio {worst:.1f})")


def test_criterion_06_structural_cross_validation(report):
    rng = np.random.default_rng(6)
    gap = comm = 0.0
    for k in range(25):
        rho = random_density(rng, 2 + k % 2)
        fast = solve_multipliers(rho).state.multipliers.data
        # multiplier error is the moment residual over the smallest Hessian
        # eigenvalue, so the oracle is converged past the default tolerance
        ref = solve_multipliers_reference(rho, tol=1e-12).state.multipliers.data
        gap = max(gap, float(np.max(np.abs(fast - ref))))
        comm = max(comm, float(np.linalg.norm(ref @ rho.data - rho.data @ ref)))
    report(6, gap <= 1e-8 and comm <= 1e-6, f"max |fast-ref|={gap:.1e} max commutator={comm:.1e}")


def test_criterion_07_singularity(tmp_path, report):
    src = write(tmp_path / "pure.json", matrix_to_json(np.diag([1.0, 0.0])))
    try:
        solve_multipliers(validate_density(np.diag([1.0, 0.0])))
        raised = False
    except SingularDensity:
        raised = True
    bare = main(["estimate", "--input", src, "--output", str(tmp_path / "a.json")])
    reg = main(["estimate", "--input", src, "--regularize", "1e-3", "--output", str(tmp_path / "b.json")])
    ok = raised and bare == 2 and reg == 0
    report(7, ok, f"SingularDensity raised={raised} exit={bare}, with --regularize exit={reg}")


def test_criterion_08_tomography(report):
    rho = validate_density(BENCH)
    hits = 0
    for trial in range(100):
        recs = [(m, simulate_counts(rho, m, 10 ** 5, seed=trial, stream=k)) for k, m in enumerate(pauli_povms())]
        hits += trace_distance(linear_inversion(recs).data, BENCH) <= 0.02
    exact = linear_inversion([(m, outcome_probabilities(rho, m)) for m in pauli_povms()])
    err = float(np.max(np.abs(exact.data - BENCH)))
    report(8, hits >= 95 and err <= 1e-10, f"{hits}/100 within trace distance 0.02, exact error={err:.1e}")


def test_criterion_09_ansatz_audit(report):
    mixed = ansatz_audit(validate_density(np.eye(2) / 2)).delta
    bench = ansatz_audit(validate_density(BENCH)).delta
    ok = mixed <= 1e-10 and abs(bench - BENCH_AUDIT_DELTA) <= 1e-8
    report(9, ok, f"identity/2 delta={mixed:.1e}  benchmark delta={bench:.10f} (baseline {BENCH_AUDIT_DELTA:.10f})")


def test_criterion_10_ensemble_degeneracy(report):
    s = 1 / math.sqrt(2)
    a = ensemble_density(DiscreteEnsemble(((0.5, from_homogeneous([1, 0])), (0.5, from_homogeneous([0, 1])))))
    b = ensemble_density(DiscreteEnsemble(((0.5, from_homogeneous([s, s])), (0.5, from_homogeneous([s, -s])))))
    gap = max(float(np.max(np.abs(outcome_probabilities(a, m) - outcome_probabilities(b, m))))
              for m in pauli_povms())
    report(10, gap <= 1e-12, f"max probability gap over Pauli POVMs={gap:.1e}")
