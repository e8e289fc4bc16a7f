import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasireal.core import (
    Alphabet,
    QuasiRealization,
    evaluate_word,
    letter_sum,
    spectrum,
    stationary_pair,
    tol_fix,
    validate,
    word_table,
    words,
    words_upto,
)
from quasireal.errors import DegenerateStationarityError, InvalidWordError, ParameterError
from quasireal import frdn, separations


def coin(p0=0.3):
    return QuasiRealization([1.0], [[[p0]], [[1 - p0]]], [1.0])


def random_hmm_quasi(d, m, rng):
    D = rng.random((m, d, d))
    D /= D.sum(axis=(0, 2))[None, :, None]
    S = D.sum(axis=0)
    w, V = np.linalg.eig(S.T)
    pi = np.real(V[:, np.argmax(np.real(w))])
    pi /= pi.sum()
    return QuasiRealization(pi, list(D), np.ones(d))


def test_alphabet_labels_roundtrip():
    al = Alphabet(2, ("a", "b"))
    assert al.parse("a b b a") == (0, 1, 1, 0)
    assert al.format((1, 0)) == "b a"
    with pytest.raises(ParameterError):
        Alphabet(2, ("a", "a"))
    with pytest.raises(ParameterError):
        Alphabet(0)


def test_word_enumeration_order():
    assert list(words(2, 2)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert words_upto(2, 1) == [(), (0,), (1,)]


def test_empty_word_is_one():
    qr = frdn.build_quasi(frdn.FrdnParams(0.4, 1.0))
    assert abs(evaluate_word(qr, ()) - 1) <= tol_fix(letter_sum(qr))


def test_frdn_single_b_matches_series():
    p = frdn.FrdnParams(0.4, 1.0)
    qr = frdn.build_quasi(p)
    l = np.arange(1, 401)
    h = 0.4 ** l * np.sin(l / 2) ** 2
    # p(b) = 1 - p(a) and p(a) p(b | a) = p(ab); check the conditional instead
    pa = evaluate_word(qr, (0,))
    assert abs(evaluate_word(qr, (0, 1)) / pa - h.sum()) < 1e-10


def test_exp_process_length3_is_a_distribution():
    qr = separations.build_exp_process().qr
    p = word_table(qr, 3)
    assert p.min() >= -1e-12
    assert abs(p.sum() - 1) < 1e-9


def test_invalid_symbol():
    with pytest.raises(InvalidWordError):
        evaluate_word(coin(), (0, 2))


def test_letter_sum_examples():
    qr = QuasiRealization([1.0, 0.0], [np.eye(2)], [1.0, 0.0])
    assert np.array_equal(letter_sum(qr), np.eye(2))
    fq = frdn.build_quasi(frdn.FrdnParams(0.4, 1.0))
    assert abs(spectrum(letter_sum(fq)).spectral_radius - 1) < 1e-10
    raw = separations.ExpConeProcessParams().raw_matrices()
    nu = separations.build_exp_process().nu
    assert abs(spectrum(sum(raw)).spectral_radius - 1 / nu) < 1e-10


def test_spectrum_rotation():
    lam, th = 0.7, 0.4
    R = lam * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    z = spectrum(R).eigenvalues
    assert np.allclose(sorted(z, key=np.imag), [lam * np.exp(-1j * th), lam * np.exp(1j * th)])


def test_spectrum_frdn_db():
    qr = frdn.build_quasi(frdn.FrdnParams(0.4, 1.0))
    z = spectrum(qr.D[frdn.B]).eigenvalues
    want = np.array([0.4 * np.exp(1j), 0.4 * np.exp(-1j), 0.4, 0.0])
    assert all(np.min(np.abs(z - w)) < 1e-12 for w in want)


def test_spectrum_identity_not_simple():
    rep = spectrum(np.eye(3))
    assert np.allclose(rep.eigenvalues, 1)
    assert not rep.is_leading_simple
    assert rep.leading_left is None


def test_spectrum_ordering_ties():
    z = spectrum(np.diag([-1.0, 1.0, 0.5])).eigenvalues
    assert list(np.real(z)) == [1.0, -1.0, 0.5]


def test_spectrum_rejects_nonfinite():
    with pytest.raises(ParameterError):
        spectrum(np.array([[np.nan]]))


def test_stationary_pair_stochastic():
    rng = np.random.default_rng(3)
    P = rng.random((4, 4))
    P /= P.sum(axis=1, keepdims=True)
    pi, tau, nu = stationary_pair([0.5 * P, 0.5 * P])
    assert abs(nu - 1) < 1e-12
    assert np.allclose(tau / tau[0], 1)
    assert abs(pi @ tau - 1) < 1e-12
    assert np.allclose(pi @ P, pi)


def test_stationary_pair_exp_fixed_points():
    pi, tau, _ = stationary_pair(separations.ExpConeProcessParams().raw_matrices())
    t, p = separations.third_coord_scaled(tau, pi)
    assert np.allclose(t, [17.855, 5.959, 1], atol=2e-3)
    assert np.allclose(p, [2.996, -1.167, -1], atol=2e-3)


def test_stationary_pair_degenerate():
    with pytest.raises(DegenerateStationarityError):
        stationary_pair([0.5 * np.eye(2), 0.5 * np.eye(2)])
    with pytest.raises(DegenerateStationarityError):
        stationary_pair([np.array([[0.0, 1.0], [-1.0, 0.0]])])
    with pytest.raises(DegenerateStationarityError):
        stationary_pair([np.array([[0.0, 1.0], [0.0, 0.0]])])


def test_validate_examples():
    assert validate(frdn.build_quasi(frdn.FrdnParams(0.4, 1.0)), 6).passed
    assert validate(separations.build_power_process().qr, 4).passed
    qr = frdn.build_quasi(frdn.FrdnParams(0.4, 1.0))
    bad = QuasiRealization(qr.pi, [-qr.D[0], qr.D[1]], qr.tau)
    rep = validate(bad, 3)
    assert not rep.passed
    assert rep.min_probability < 0
    assert evaluate_word(bad, rep.min_word) < 0


def test_validate_brute_force_agrees():
    qr = random_hmm_quasi(3, 2, np.random.default_rng(11))
    rep = validate(qr, 5)
    mins = min(qr(u) for u in words_upto(2, 5))
    assert rep.passed
    assert abs(rep.min_probability - mins) < 1e-15


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2), max_size=6), st.lists(st.integers(0, 2), max_size=6))
def test_semigroup_law(u, v):
    qr = separations.build_exp_process().qr
    lhs = qr.matrix_of(tuple(u) + tuple(v))
    rhs = qr.matrix_of(u) @ qr.matrix_of(v)
    # products can cancel exactly (D_0 D_0 = 0): use the forward-error scale
    scale = np.prod([np.linalg.norm(qr.D[s]) for s in tuple(u) + tuple(v)])
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=7))
def test_marginalization(u):
    qr = frdn.build_quasi(frdn.FrdnParams(0.3, 2.0))
    u = tuple(u)
    p = qr(u)
    assert abs(sum(qr(u + (s,)) for s in range(2)) - p) < 1e-9
    assert abs(sum(qr((s,) + u) for s in range(2)) - p) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_similarity_invariance(seed):
    rng = np.random.default_rng(seed)
    qr = frdn.build_quasi(frdn.FrdnParams(0.4, 1.0))
    T = np.eye(4) + 0.3 * rng.standard_normal((4, 4))
    if np.linalg.cond(T) > 1e3:
        return
    qt = qr.conjugate(T)
    for n in range(5):
        a, b = word_table(qr, n), word_table(qt, n)
        assert np.all(np.abs(a - b) <= 1e-9 * np.maximum(np.abs(a), 1e-3))


def test_long_word_linear_cost():
    qr = frdn.build_quasi(frdn.FrdnParams(0.4, 1.0))
    u = tuple(np.random.default_rng(0).integers(0, 2, 10_000))
    assert evaluate_word(qr, u) >= 0.0


def test_word_table_matches_evaluate():
    qr = separations.build_exp_process().qr
    p = word_table(qr, 3)
    assert np.allclose(p, [evaluate_word(qr, u) for u in words(3, 3)], atol=1e-15)


def test_json_roundtrip(tmp_path):
    qr = frdn.build_quasi(frdn.FrdnParams(0.4, 1.0))
    path = tmp_path / "m.json"
    qr.save(path)
    back = QuasiRealization.load(path)
    assert np.array_equal(back.pi, qr.pi) and all(np.array_equal(a, b) for a, b in zip(back.D, qr.D))
    assert back.alphabet.labels == ("a", "b")
    path.write_text(path.read_text().replace(str(qr.pi[0]), "NaN", 1))
    with pytest.raises(ParameterError):
        QuasiRealization.load(path)


def test_immutable():
    qr = coin()
    with pytest.raises(ValueError):
        qr.pi[0] = 2.0
