"""Acceptance checks, runnable from the CLI (``validate``) and from pytest.

Each check returns a :class:`CheckResult`; a check passes only if its
numerical condition holds and it finishes inside its time budget.
"""
from __future__ import annotations

import io
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import bounds, designs, measures, montecarlo as mc, oracle
from .numerics import RngStream, haar_unitary, kron, kron_all, unitarity_residual
from .process import ProcessChoi, ProcessDims, build_process_choi

SEED = 20200601


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} ({self.seconds:.2f}s): {self.detail}"


@dataclass(frozen=True)
class Options:
    """Test hooks for exercising failure paths."""
    corrupt_phases: bool = False


@dataclass(frozen=True)
class Check:
    name: str
    budget: float
    func: Callable[[Options], tuple[bool, str]]


# -- individual criteria -----------------------------------------------------

def _design_bound_premise(opts: Options) -> tuple[bool, str]:
    p = bounds.BoundParams(d_S=2, log2_dE=60, k=2, t=10, epsilon=1e-12, delta=0.1)
    m, br = bounds.optimize_m(p)
    return br.total_clamped <= 0.01, f"m*={m:.6g}, B_nu={br.total_clamped:.3e} (<= 0.01)"


def _repetitions(opts: Options) -> tuple[bool, str]:
    ells = {n: designs.min_repetitions(10, 1e-12, n) for n in range(35, 61)}
    worst = max(ells.values())
    two_q, _ = designs.gate_count(designs.CircuitSpec.for_target(35, 10, 1e-12))
    ok = worst <= 12 and 1e4 <= two_q <= 2e4
    return ok, f"max ell over n in [35,60] = {worst} (<= 12); two-qubit gates at n=35 = {two_q}"


def _bound_curve_shape(opts: Options) -> tuple[bool, str]:
    vals = {}
    for k in range(5):
        for t in range(2, 11):
            for lde in range(10, 61):
                p = bounds.BoundParams(2, lde, k, t, 1e-12, 0.1)
                vals[k, t, lde] = bounds.optimize_m(p)[1].total_clamped
    rises = [(k, t, lde) for k in range(5) for t in range(2, 11) for lde in range(11, 61)
             if vals[k, t, lde] > vals[k, t, lde - 1]]
    t_viol = [(k, lde) for k in range(5) for lde in range(10, 61)
              if vals[k, 10, lde] > vals[k, 2, lde]]
    ok = not rises and not t_viol
    return ok, (f"{len(vals)} curve points; increases: {rises[:3] or 'none'}; "
                f"t=10 above t=2: {t_viol[:3] or 'none'}")


def _haar_purity(opts: Options) -> tuple[bool, str]:
    parts, ok = [], True
    for d_E, k in ((4, 1), (2, 0)):
        spec = mc.EnsembleSpec("haar", ProcessDims(d_E, 2, k), 2000, base_seed=SEED)
        mean, se = mc.estimate_mean_purity(spec)
        target = float(bounds.expected_purity_haar(d_E, 2, k))
        good = abs(mean - target) <= 3 * se
        ok &= good
        parts.append(f"d_E={d_E},k={k}: mean={mean:.6f} target={target:.6f} z={(mean - target) / se:+.2f}")
    return ok, "; ".join(parts)


def _moment_bound(opts: Options) -> tuple[bool, str]:
    spec = mc.EnsembleSpec("haar", ProcessDims(256, 2, 1), 200, base_seed=SEED)
    sq = [r.n2id ** 2 for r in mc.run_ensemble(spec)]
    mean, se = mc.mean_stderr(sq)
    moment = bounds.haar_moment_bound(1.0, 256, 2, 1)
    exact = 0.25 * (float(bounds.expected_purity_haar(256, 2, 1)) - 1 / 8)
    ok = mean <= moment and mean <= exact + 3 * se
    return ok, (f"mean N2^2={mean:.6g} (se {se:.2g}); moment bound={moment:.6g}; "
                f"analytic={exact:.6g}")


def _markov_null(opts: Options) -> tuple[bool, str]:
    rng = RngStream(SEED, 1)
    worst_n1 = 0.0
    for d_E, k in ((2, 1), (3, 2)):
        dims = ProcessDims(d_E, 2, k)
        rho_e = _random_state(d_E, rng)
        rho_s = _random_state(2, rng)
        ups = build_process_choi(kron(rho_e, rho_s), [np.eye(dims.d_ES)] * (k + 1), dims)
        worst_n1 = max(worst_n1, measures.nm_one_marginal(ups))
    mixed = ProcessChoi(ProcessDims(2, 2, 2), np.eye(32) / 32)
    n2 = measures.nm_two_identity(mixed)
    ok = worst_n1 <= 1e-12 and n2 <= 1e-12
    return ok, f"identity-dynamics N1={worst_n1:.2e}; maximally mixed N2={n2:.2e}"


def five_matrix_oracle(n: int, t: int, layers) -> np.ndarray:
    """Dense ``D3 H D2 H D1`` built gate by gate from explicit 4x4 matrices (n = 2)."""
    assert n == 2
    ps = designs.phase_sets(t)
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    hh = kron(h, h)

    def layer(idx):
        a, b, c = idx[0]
        g1 = np.diag([1, np.exp(1j * ps.phi_values[a])])
        g2 = np.diag([1, np.exp(1j * ps.phi_values[b])])
        return kron(g1, g2) @ np.diag([1, 1, 1, np.exp(1j * ps.theta_values[c])])

    d1, d2, d3 = (layer(x) for x in layers)
    return d3 @ hh @ d2 @ hh @ d1


def _circuit_integrity(opts: Options) -> tuple[bool, str]:
    hook = (lambda d: 1.01 * d) if opts.corrupt_phases else None
    worst, worst_n = 0.0, None
    for n in range(2, 11):
        spec = designs.CircuitSpec.for_target(n, 2, 1e-3)
        w = designs.build_w_circuit(spec, RngStream(SEED, n), phase_hook=hook)
        res = unitarity_residual(w)
        if res > worst:
            worst, worst_n = res, n
    spec = designs.CircuitSpec(2, 3, 1.0, 1)
    layers = designs.sample_w_layers(spec, RngStream(SEED, 0))
    w = designs.circuit_from_layers(2, 3, layers, phase_hook=hook)
    oracle_diff = float(np.max(np.abs(w - five_matrix_oracle(2, 3, layers))))
    counts_ok = True
    for n in (2, 3, 6, 10):
        for ell in (0, 1, 3):
            spec = designs.CircuitSpec(n, 2, 1e-3, ell)
            buf = io.StringIO()
            designs.dump_circuit(n, 2, designs.sample_w_layers(spec, RngStream(SEED, n)), buf)
            dumped = sum(line.startswith("pair ") for line in buf.getvalue().splitlines())
            expected = (2 * ell + 1) * n * (n - 1) // 2
            counts_ok &= dumped == expected == designs.gate_count(spec)[0]
    ok = worst <= 1e-10 and oracle_diff <= 1e-12 and counts_ok
    detail = (f"max unitarity residual {worst:.2e} (n={worst_n}); five-matrix oracle diff "
              f"{oracle_diff:.2e}; gate counts {'ok' if counts_ok else 'MISMATCH'}")
    if worst > 1e-10:
        detail = "unitarity violated: " + detail
    return ok, detail


def _trend(opts: Options) -> tuple[bool, str]:
    dims = ProcessDims(32, 2, 1)
    stats = {}
    for ell in (0, 1, 2, 4):
        spec = mc.EnsembleSpec("design", dims, 500, base_seed=SEED,
                               circuit=designs.CircuitSpec(6, 2, 1e-3, ell))
        stats[ell] = mc.mean_stderr([r.n2id for r in mc.run_ensemble(spec)])
    haar = mc.mean_stderr([r.n2id for r in mc.run_ensemble(
        mc.EnsembleSpec("haar", dims, 500, base_seed=SEED + 1))])
    ells = sorted(stats)
    steps = []
    for a, b in zip(ells, ells[1:]):
        slack = 2 * math.hypot(stats[a][1], stats[b][1])
        rise = stats[b][0] - stats[a][0]
        steps.append((f"{a}->{b}: rise {rise:+.5f} vs 2se {slack:.5f}", rise <= slack))
    mono = all(ok for _, ok in steps)
    m4, s4 = stats[4]
    tol = max(0.1 * haar[0], 5 * math.hypot(s4, haar[1]))
    close = abs(m4 - haar[0]) <= tol
    means = ", ".join(f"ell={e}: {stats[e][0]:.5f}+-{stats[e][1]:.5f}" for e in ells)
    bad = [txt for txt, ok in steps if not ok]
    return mono and close, (f"{means}; haar {haar[0]:.5f}+-{haar[1]:.5f}; "
                            f"non-increasing: {'ok' if mono else 'violated at ' + '; '.join(bad)}; "
                            f"|ell4-haar|={abs(m4 - haar[0]):.5f} (tol {tol:.5f})")


def random_bound_tuples(count: int = 100, seed: int = SEED):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        t = int(rng.integers(2, 11))
        yield dict(
            d_S=int(rng.choice([2, 3, 4])),
            log2_dE=int(rng.integers(1, 61)),
            k=int(rng.integers(0, 5)),
            t=t,
            epsilon=float(10 ** rng.uniform(-15, 0)),
            delta=float(rng.uniform(0.01, 1.0)),
            m=float(rng.uniform(0.01, 1.0) * t / 4),
        )


def stability_errors(tup: dict) -> dict[str, float]:
    """Relative errors of every bound quantity against the mpmath oracle."""
    import mpmath as mp

    d_S, lde, k = tup["d_S"], tup["log2_dE"], tup["k"]
    d_E = 1 << lde

    def rel(a, b):
        b = mp.mpf(b)
        return float(abs(mp.mpf(a) - b) / abs(b)) if b != 0 else float(abs(mp.mpf(a)))

    errs = {
        "expected_purity": rel(float(bounds.expected_purity_haar(d_E, d_S, k)),
                               oracle.expected_purity(d_E, d_S, k)),
        "haar_B": rel(bounds.haar_B(d_E, d_S, k), oracle.haar_B(d_E, d_S, k)),
        "haar_C": rel(float(bounds.haar_C(d_E, d_S, k)), oracle.haar_C(d_E, d_S, k)),
    }
    with mp.workdps(oracle.DPS):
        # log2-domain values: relative error of 2**x is |2**(x - x_ref) - 1|
        eta_ref = mp.log(oracle.eta(d_E, d_S, k), 2)
        errs["eta"] = float(abs(mp.mpf(2) ** (mp.mpf(bounds.eta_bound(d_E, d_S, k)) - eta_ref) - 1))
        p = bounds.BoundParams(d_S, lde, k, tup["t"], tup["epsilon"], tup["delta"])
        br = bounds.design_tail_bound(p, tup["m"])
        ref = mp.log(oracle.design_tail_bound(d_S, lde, k, tup["t"], tup["epsilon"],
                                              tup["delta"], tup["m"]), 2)
        errs["design_tail_bound"] = float(abs(mp.mpf(2) ** (mp.mpf(br.log2_total) - ref) - 1))
    return errs


def _stability(opts: Options) -> tuple[bool, str]:
    worst: dict[str, float] = {}
    for tup in random_bound_tuples():
        for key, e in stability_errors(tup).items():
            worst[key] = max(worst.get(key, 0.0), e)
    ok = all(v <= 1e-9 for v in worst.values())
    return ok, "max rel err: " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())


def _determinism(opts: Options) -> tuple[bool, str]:
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for i, threads in enumerate((1, 1, 8)):
            path = Path(tmp) / f"run{i}.csv"
            code = main(["sample", "--ensemble", "haar", "--log2-de", "2", "--ds", "2",
                         "--k", "1", "--samples", "100", "--seed", "7",
                         "--threads", str(threads), "--output", str(path)])
            if code != 0:
                return False, f"sample exited with {code}"
            outs.append(path.read_bytes())
    same_runs = outs[0] == outs[1]
    same_threads = outs[0] == outs[2]
    return same_runs and same_threads, (f"two runs identical={same_runs}; "
                                        f"threads 1 vs 8 identical={same_threads}")


def _random_state(d: int, rng: RngStream) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    r = g @ g.conj().T
    return r / np.trace(r).real


CHECKS: tuple[Check, ...] = (
    Check("design-bound-premise", 1.0, _design_bound_premise),
    Check("repetitions", 1.0, _repetitions),
    Check("bound-curve-shape", 10.0, _bound_curve_shape),
    Check("haar-purity", 60.0, _haar_purity),
    Check("moment-bound", 600.0, _moment_bound),
    Check("markov-null", 60.0, _markov_null),
    Check("circuit-integrity", 60.0, _circuit_integrity),
    Check("markovianization-trend", 900.0, _trend),
    Check("numerical-stability", 60.0, _stability),
    Check("determinism", 60.0, _determinism),
)

CHECK_NAMES = tuple(c.name for c in CHECKS)


def run_check(name: str, opts: Optional[Options] = None) -> CheckResult:
    opts = opts or Options()
    check = {c.name: c for c in CHECKS}[name]
    t0 = time.perf_counter()
    ok, detail = check.func(opts)
    dt = time.perf_counter() - t0
    if dt > check.budget:
        ok = False
        detail += f"; exceeded time budget {check.budget:g}s"
    return CheckResult(name, ok, detail, dt)
