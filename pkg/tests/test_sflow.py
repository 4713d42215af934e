import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from specflow.errors import ClutchError, EndpointSingularError, IrregularCrossingError, WindowError
from specflow.paths import ClutchedLoop, OperatorPath, cogredience_transform, planted_path, twisted_fourier_loop
from specflow.sflow import (
    Convention,
    Method,
    crossing_form,
    doubling_pair,
    find_crossings,
    spectral_flow_counting,
    spectral_flow_crossing,
    spectral_flow_loop,
)


def diag_path(f, a=-1.0, b=1.0):
    return OperatorPath(a, b, lambda t: np.diag(np.atleast_1d(f(t)).astype(float)))


def test_single_crossing():
    recs = find_crossings(diag_path(lambda t: [t, 1.0]))
    assert len(recs) == 1
    assert abs(recs[0].t) < 1e-10
    v = recs[0].kernel_basis[:, 0]
    assert abs(abs(v[0]) - 1) < 1e-12


def test_two_crossings():
    recs = find_crossings(diag_path(lambda t: [t - 0.3, t + 0.4]))
    np.testing.assert_allclose([r.t for r in recs], [-0.4, 0.3], atol=2e-10)


@pytest.mark.parametrize("seed", range(10))
def test_planted_instants_recovered(seed):
    p, planted = planted_path(8, 4, seed)
    recs = find_crossings(p)
    np.testing.assert_allclose([r.t for r in recs], [c for c, _ in planted], atol=1e-9)


@pytest.mark.parametrize("f, sig", [
    (lambda t: [t, 1.0], 1),
    (lambda t: [-t, 1.0], -1),
    (lambda t: [t, -t], 0),
])
def test_crossing_form_examples(f, sig):
    p = diag_path(f)
    rec = crossing_form(p, find_crossings(p)[0])
    assert rec.signature == sig and rec.regular
    ev = np.linalg.eigvalsh(rec.crossing_form)
    assert rec.signature == int(np.sum(ev > 0) - np.sum(ev < 0))


def test_crossing_form_matrix():
    p = diag_path(lambda t: [t, -t])
    rec = crossing_form(p, find_crossings(p)[0])
    assert rec.kernel_dim == 2
    np.testing.assert_allclose(sorted(np.linalg.eigvalsh(rec.crossing_form)), [-1.0, 1.0], atol=1e-8)


def test_flow_examples():
    assert spectral_flow_crossing(diag_path(lambda t: [t, 1.0])).value == 1
    assert spectral_flow_crossing(diag_path(lambda t: [t, -t])).value == 0
    assert spectral_flow_counting(diag_path(lambda t: [t, 1.0])).value == 1


def test_planted_signature_sum():
    p, planted = planted_path(6, 3, seed=2, signs=[1, 1, -1])
    res = spectral_flow_crossing(p)
    assert res.value == 1
    assert [r.signature for r in res.crossings] == [s for _, s in planted]
    assert all(a.t < b.t for a, b in zip(res.crossings, res.crossings[1:]))


def test_counting_on_genuine_loop():
    A0 = np.diag([1.0, -2.0, 0.5])
    B = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    p = OperatorPath(0.0, 1.0, lambda t: A0 + 2.0 * np.sin(2 * np.pi * t) * B)
    assert spectral_flow_counting(p).value == 0


def test_irregular_touch():
    p = diag_path(lambda t: [t * t, 1.0])
    with pytest.raises(IrregularCrossingError) as info:
        spectral_flow_crossing(p)
    assert abs(info.value.instant) < 1e-4
    assert spectral_flow_counting(p).value == 0


def test_endpoint_singular():
    with pytest.raises(EndpointSingularError):
        spectral_flow_crossing(diag_path(lambda t: [t], 0.0, 1.0))
    with pytest.raises(EndpointSingularError):
        spectral_flow_counting(diag_path(lambda t: [t - 1.0], 0.0, 1.0))


def test_result_json_shape():
    res = spectral_flow_crossing(diag_path(lambda t: [t, 1.0]))
    js = res.to_json()
    assert list(js) == ["value", "convention", "method", "crossings"]
    assert list(js["crossings"][0]) == ["t", "kernel_dim", "signature", "regular"]


def test_conventions():
    p = diag_path(lambda t: [t])
    c = p.complexified()
    assert spectral_flow_crossing(c).value == 1
    assert spectral_flow_crossing(c).convention is Convention.COMPLEX_DIM
    assert spectral_flow_crossing(c, Convention.REAL_DIM).value == 2
    assert spectral_flow_crossing(p).convention is Convention.REAL_DIM


@pytest.mark.parametrize("f, expected", [
    (lambda t: [t], (1, 2, 1)),
    (lambda t: [t, -t], (0, 0, 0)),
])
def test_doubling_examples(f, expected):
    assert doubling_pair(diag_path(f)) == expected


@pytest.mark.parametrize("seed", range(8))
def test_doubling_planted(seed):
    p, planted = planted_path(6, 3, seed)
    s = sum(sig for _, sig in planted)
    assert doubling_pair(p) == (s, 2 * s, s)


def test_loop_constant():
    p = OperatorPath(0.0, 1.0, lambda t: np.diag([1.0, -1.0]))
    assert spectral_flow_loop(ClutchedLoop(p, np.eye(2), 5.0)).value == 0


@pytest.mark.parametrize("k", [-2, -1, 1, 2, 3])
@pytest.mark.parametrize("method", list(Method))
def test_loop_twisted(k, method):
    assert spectral_flow_loop(twisted_fourier_loop(16, k, 8.0), method).value == k


def test_loop_window_too_small():
    with pytest.raises(WindowError):
        spectral_flow_loop(twisted_fourier_loop(16, 1, 0.4))


def test_loop_bad_clutch():
    loop = twisted_fourier_loop(16, 1, 8.0)
    with pytest.raises(ClutchError):
        spectral_flow_loop(ClutchedLoop(loop.path, np.eye(33), 8.0))


def test_loop_trivialization_independence():
    # F(t) = expm((t - a)/(b - a) log U) trivializes the twist-1 loop
    from scipy.linalg import logm

    loop = twisted_fourier_loop(4, 1, 2.0)
    p = loop.path
    logU = logm(loop.clutch.astype(complex))
    F = lambda t: expm((t - p.start) / p.length * logU)  # noqa: E731
    triv = cogredience_transform(p, F)
    np.testing.assert_allclose(F(p.stop), loop.clutch, atol=1e-10)
    assert spectral_flow_crossing(triv).value == spectral_flow_loop(loop).value == 1


def _split_point(p, rng):
    for _ in range(100):
        b = float(rng.uniform(-0.8, 0.8))
        if np.min(np.abs(np.linalg.eigvalsh(p(b)))) > 1e-3:
            return b
    raise AssertionError("no invertible split point")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_concatenation_additivity(seed):
    rng = np.random.default_rng(seed)
    p, _ = planted_path(int(rng.integers(2, 9)), int(rng.integers(0, 3)), seed)
    b = _split_point(p, rng)
    whole = spectral_flow_crossing(p).value
    assert whole == spectral_flow_crossing(p.restrict(p.start, b)).value + spectral_flow_crossing(p.restrict(b, p.stop)).value


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_cogredience_invariance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    p, _ = planted_path(n, int(rng.integers(0, min(n, 3) + 1)), seed)
    S = rng.standard_normal((n, n))
    S = S - S.T
    q = cogredience_transform(p, lambda t: expm(t * S), lambda t: S @ expm(t * S))
    assert spectral_flow_crossing(q).value == spectral_flow_crossing(p).value


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_reversal(seed):
    p, _ = planted_path(5, 3, seed)
    assert spectral_flow_crossing(p.reversed()).value == -spectral_flow_crossing(p).value


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_method_equivalence(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 10))
    p, _ = planted_path(n, int(rng.integers(0, min(n, 5) + 1)), seed)
    assert spectral_flow_crossing(p).value == spectral_flow_counting(p).value


@pytest.mark.parametrize("seed", range(4))
def test_homotopy_invariance(seed):
    p0, _ = planted_path(5, 3, seed)
    p1 = OperatorPath(-1.0, 1.0, lambda t: p0(t + 0.1 * np.sin(np.pi * t)))
    values = []
    for s in (0.0, 0.25, 0.5, 0.75, 1.0):
        h = OperatorPath(-1.0, 1.0, lambda t, s=s: (1 - s) * p0(t) + s * p1(t))
        values.append(spectral_flow_counting(h).value)
    assert len(set(values)) == 1
