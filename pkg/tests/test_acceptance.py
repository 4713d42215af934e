"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest
from scipy.linalg import expm

from specflow.bifurcation import (
    bif_set_scan,
    continue_branch,
    locate_bifurcation,
    perturbed_torus_family,
    pitchfork_family,
    sf_along_loop,
)
from specflow.cli import render_report
from specflow.ktheory import alpha_path, chern_winding, index_bundle_data, transverse_subspace
from specflow.paths import cogredience_transform, planted_path, random_matrix_loop, twisted_fourier_loop
from specflow.sflow import (
    Convention,
    doubling_pair,
    spectral_flow_counting,
    spectral_flow_crossing,
    spectral_flow_loop,
)

RENDERED: dict[int, bytes] = {}


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def planted_case(seed, max_dim=16, max_crossings=5):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, max_dim + 1))
    k = int(rng.integers(0, min(max_crossings, dim) + 1))
    return planted_path(dim, k, seed)


# --------------------------------------------------------------------------
# criterion bodies; each returns (report, ok)


def crit1():
    rows, ok = [], True
    for seed in range(100):
        p, planted = planted_case(seed)
        expected = int(sum(s for _, s in planted))
        a = spectral_flow_crossing(p).value
        b = spectral_flow_counting(p).value
        ok &= a == b == expected
        rows.append([seed, p.dim, len(planted), expected, a, b])
    return {"cases": rows}, ok


def crit2():
    rows, ok = [], True
    for seed in range(1000, 1050):
        p, planted = planted_case(seed)
        s = int(sum(sig for _, sig in planted))
        got = doubling_pair(p)
        ok &= got == (s, 2 * s, s)
        rows.append([seed, s, *got])
    return {"cases": rows}, ok


def crit3():
    rows, ok = [], True
    for k in (-2, -1, 1, 2, 3):
        loop = twisted_fourier_loop(16, k, 8.0)
        w = chern_winding(loop)
        sf = spectral_flow_loop(loop, convention=Convention.COMPLEX_DIM).value
        ok &= w.value == sf == k and w.closure_defect < 0.2
        rows.append({"k": k, "chern": w.value, "sf": sf, "closure_defect": w.closure_defect})
    return {"cases": rows}, ok


def crit4():
    rows, ok = [], True
    for seed in range(20):
        dim = int(np.random.default_rng(seed).integers(2, 11))
        loop = random_matrix_loop(dim, seed)
        np.testing.assert_array_equal(loop.clutch, np.eye(dim))
        sf = spectral_flow_loop(loop).value
        ch = chern_winding(loop).value
        ok &= sf == 0 and ch == 0
        rows.append([seed, dim, sf, ch])
    return {"cases": rows}, ok


def crit5():
    cog, cat, ok = [], [], True
    for seed in range(2000, 2050):
        rng = np.random.default_rng(seed)
        p, _ = planted_case(seed, max_dim=10)
        n = p.dim
        S = rng.standard_normal((n, n))
        S = 0.8 * (S - S.T)
        q = cogredience_transform(p, lambda t, S=S: expm(t * S), lambda t, S=S: S @ expm(t * S))
        a, b = spectral_flow_crossing(p).value, spectral_flow_crossing(q).value
        ok &= a == b
        cog.append([seed, a, b])
    for seed in range(3000, 3050):
        rng = np.random.default_rng(seed)
        p, _ = planted_case(seed, max_dim=10)
        while True:
            mid = float(rng.uniform(-0.9, 0.9))
            if np.min(np.abs(np.linalg.eigvalsh(p(mid)))) > 1e-3:
                break
        whole = spectral_flow_crossing(p).value
        left = spectral_flow_crossing(p.restrict(p.start, mid)).value
        right = spectral_flow_crossing(p.restrict(mid, p.stop)).value
        ok &= whole == left + right
        cat.append([seed, mid, whole, left, right])
    return {"cogredience": cog, "concatenation": cat}, ok


def crit6():
    inv, ker, ok = [], [], True
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        A = (B + B.conj().T) / 2
        a = alpha_path(A, 201)
        smin = float(np.min(a.min_singular_values()))
        sing = a.singular_instants()
        ok &= sing.size == 0
        inv.append([seed, n, smin])
    for seed in range(100, 120):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        w = rng.choice([-1, 1], n) * rng.uniform(0.5, 3.0, n)
        w[: int(rng.integers(1, n))] = 0.0
        A = (Q * w) @ Q.conj().T
        sing = alpha_path(A, 201).singular_instants()
        ok &= sing.size > 0 and bool(np.all(np.abs(sing - 0.5) <= 1e-9))
        ker.append([seed, n, sing.tolist()])
    return {"invertible": inv, "planted_kernel": ker}, ok


def crit7():
    grid = np.linspace(0, 2 * np.pi, 64, endpoint=False)

    def family(x):
        u = np.zeros(4)
        u[0], u[1] = np.cos(x), np.sin(x)
        return np.eye(4) - np.outer(u, u)

    V1 = transverse_subspace(family, grid)
    V2 = np.eye(4)[:, [0, 1, 3]]  # cokernels lie in span(e1, e2); e4 is a free extra direction
    d1 = index_bundle_data(family, grid, V1)
    d2 = index_bundle_data(family, grid, V2)
    ok = d1.virtual_rank == d2.virtual_rank
    return {"dim_V": [V1.shape[1], V2.shape[1]], "fiber_rank": [d1.fiber_rank, d2.fiber_rank],
            "virtual_rank": [d1.virtual_rank, d2.virtual_rank]}, ok


def crit8():
    fam = pitchfork_family(16, 1)
    sf = sf_along_loop(fam).value
    bracket = locate_bifurcation(fam)
    branch = continue_branch(fam, bracket, offsets=np.logspace(-1, -4, 7))
    witness = min(branch.points, key=lambda p: p.offset) if branch.points else None
    residual = max((p.residual for p in branch.points), default=np.inf)
    ok = (sf == 1 and bracket.lo <= 1.0 <= bracket.hi and bracket.width <= 1e-8
          and witness is not None and residual <= 1e-10
          and branch.exponent is not None and abs(branch.exponent - 0.5) <= 0.05)
    return {"sf": sf, "bracket": [bracket.lo, bracket.hi], "max_residual": residual,
            "witness_norm": witness.amplitude if witness else None, "exponent": branch.exponent}, ok


def crit9():
    scan = bif_set_scan(perturbed_torus_family(16, 0.3, 128))
    hits = [lp["intersects"] for lp in scan.loops if lp["sf"] != 0]
    ok = (scan.box_dimension is not None and 0.8 <= scan.box_dimension <= 1.2
          and scan.wraps_generator[1] and bool(hits) and all(hits))
    return {"box_dimension": scan.box_dimension, "box_counts": scan.box_counts,
            "wraps_generator": list(scan.wraps_generator), "flagged": int(scan.flagged.sum()),
            "candidate_only": int(scan.candidate_only.sum()), "loops": scan.loops}, ok


CRITERIA = {1: crit1, 2: crit2, 3: crit3, 4: crit4, 5: crit5, 6: crit6, 7: crit7, 8: crit8, 9: crit9}
LIMITS = {1: 30.0, 2: 10.0, 3: 20.0, 8: 30.0, 9: 60.0}


def timed(n):
    t0 = time.perf_counter()
    report, ok = CRITERIA[n]()
    elapsed = time.perf_counter() - t0
    RENDERED[n] = render_report(report).encode("utf-8")
    return report, ok, elapsed


def check(n, verdict, summary):
    report, ok, elapsed = timed(n)
    limit = LIMITS.get(n)
    in_time = limit is None or elapsed < limit
    budget = f", {elapsed:.2f}s" + (f" < {limit:.0f}s" if limit else "")
    verdict(n, ok and in_time, summary(report) + budget)


def test_acceptance_1_crossing_form_matches_counting_and_plant(verdict):
    check(1, verdict, lambda r: f"{len(r['cases'])} planted paths, "
          f"{sum(c[3] == c[4] == c[5] for c in r['cases'])} exact")


def test_acceptance_2_doubling(verdict):
    check(2, verdict, lambda r: f"{sum(c[2:] == [c[1], 2 * c[1], c[1]] for c in r['cases'])}/50 give (s, 2s, s)")


def test_acceptance_3_chern_equals_sf(verdict):
    check(3, verdict, lambda r: ", ".join(
        f"k={c['k']}: chern={c['chern']} sf={c['sf']} defect={c['closure_defect']:.1e}" for c in r["cases"]))


def test_acceptance_4_genuine_loops_trivial(verdict):
    check(4, verdict, lambda r: f"{sum(c[2] == 0 and c[3] == 0 for c in r['cases'])}/20 loops with sf = chern = 0")


def test_acceptance_5_cogredience_and_concatenation(verdict):
    check(5, verdict, lambda r: f"cogredience {sum(c[1] == c[2] for c in r['cogredience'])}/50, "
          f"concatenation {sum(c[2] == c[3] + c[4] for c in r['concatenation'])}/50")


def test_acceptance_6_alpha_profile(verdict):
    check(6, verdict, lambda r: f"min sigma over invertible suite {min(c[2] for c in r['invertible']):.3f}, "
          f"planted kernels singular only at 0.5: {all(c[2] == [0.5] for c in r['planted_kernel'])}")


def test_acceptance_7_index_bundle_v_independence(verdict):
    check(7, verdict, lambda r: f"dim V {r['dim_V']}, fiber rank {r['fiber_rank']}, virtual rank {r['virtual_rank']}")


def test_acceptance_8_bifurcation_certificate(verdict):
    check(8, verdict, lambda r: f"sf={r['sf']}, bracket=[{r['bracket'][0]:.10f}, {r['bracket'][1]:.10f}] "
          f"(width {r['bracket'][1] - r['bracket'][0]:.2e}), residual {r['max_residual']:.1e}, "
          f"exponent {r['exponent']:.4f}")


def test_acceptance_9_torus_bifurcation_set(verdict):
    check(9, verdict, lambda r: f"box dimension {r['box_dimension']:.3f}, wraps (t, phi) = {r['wraps_generator']}, "
          f"{sum(lp['intersects'] for lp in r['loops'] if lp['sf'])}/{sum(1 for lp in r['loops'] if lp['sf'])} "
          f"nonzero-sf loops hit the flagged set")


def test_acceptance_10_determinism(verdict):
    first = {}
    for n in CRITERIA:
        if n not in RENDERED:
            timed(n)
        first[n] = RENDERED[n]
    mismatched = []
    for n in CRITERIA:
        report, _ = CRITERIA[n]()
        if render_report(report).encode("utf-8") != first[n]:
            mismatched.append(n)
    verdict(10, not mismatched, f"criteria 1-9 rerun, byte-identical reports: {9 - len(mismatched)}/9"
            + (f", mismatched {mismatched}" if mismatched else ""))
