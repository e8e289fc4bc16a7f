import math

import numpy as np
import pytest

from quasireal.core import Alphabet, validate, word_table, words
from quasireal.errors import NumericalError, ParameterError, ValidityError
from quasireal.realizations import (
    HiddenQuantumModel,
    PositiveRealization,
    apply_superop,
    choi_from_kraus,
    choi_matrix,
    cp_certificate,
    from_coords,
    hermitian_basis,
    hmm_to_quasi,
    hqmm_to_quasi,
    kraus_superop,
    measure_prepare_map,
    read_sequence,
    sample_sequence,
    to_coords,
    write_sequence,
)
from quasireal import frdn


def haar_unitary(d, rng):
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_instrument(d, m, rng, kraus_per=2):
    """Split a random Stinespring isometry into m symbols."""
    k = m * kraus_per
    W = haar_unitary(d * k, rng)[:, :d]
    Ks = [W[i * d:(i + 1) * d] for i in range(k)]
    return [Ks[j * kraus_per:(j + 1) * kraus_per] for j in range(m)]


def random_hmm(d, m, rng):
    D = rng.random((m, d, d))
    D /= D.sum(axis=(0, 2))[None, :, None]
    S = D.sum(axis=0)
    w, V = np.linalg.eig(S.T)
    pi = np.real(V[:, np.argmax(np.real(w))])
    return PositiveRealization(pi / pi.sum(), list(D))


def coin_hmm(p0=0.3):
    return PositiveRealization([1.0], [[[p0]], [[1 - p0]]])


def test_basis_is_orthonormal():
    for d in (2, 3, 4):
        B = hermitian_basis(d)
        G = np.einsum("iab,jba->ij", B, B)
        assert np.allclose(G, np.eye(d * d), atol=1e-14)
        assert np.allclose(B[0], np.eye(d) / math.sqrt(d))
        X = np.random.default_rng(d).standard_normal((d, d))
        X = X + X.T
        assert np.allclose(from_coords(to_coords(X)), X)


def test_iid_hmm():
    qr = hmm_to_quasi(coin_hmm())
    for u in words(2, 4):
        assert abs(qr(u) - 0.3 ** u.count(0) * 0.7 ** u.count(1)) < 1e-15


def test_deterministic_cycle():
    D0 = np.array([[0, 1.0], [0, 0]])
    D1 = np.array([[0, 0], [1.0, 0]])
    qr = hmm_to_quasi(PositiveRealization([0.5, 0.5], [D0, D1]))
    assert qr((0, 1)) == qr((1, 0)) == 0.5
    assert qr((0, 0)) == qr((1, 1)) == 0.0


def test_random_hmm_validates():
    assert validate(hmm_to_quasi(random_hmm(3, 2, np.random.default_rng(5))), 5).passed


def test_invalid_hmm_rejected():
    with pytest.raises(ValidityError):
        hmm_to_quasi(PositiveRealization([1.0], [[[0.5]], [[-0.1]]]))
    with pytest.raises(ValidityError):
        hmm_to_quasi(PositiveRealization([1.0], [[[0.5]], [[0.4]]]))


def test_unitary_single_symbol():
    U = haar_unitary(3, np.random.default_rng(1))
    qr = hqmm_to_quasi(HiddenQuantumModel.from_kraus([[U]]))
    S = qr.D[0]
    assert np.allclose(S[1:, 1:] @ S[1:, 1:].T, np.eye(8), atol=1e-12)
    assert all(abs(qr(u) - 1) < 1e-12 for u in [(), (0,), (0, 0, 0)])


def test_depolarizing_single_symbol():
    K = [math.sqrt(1 / 2) * np.outer(np.eye(2)[i], np.eye(2)[j]) for i in range(2) for j in range(2)]
    h = HiddenQuantumModel.from_kraus([K])
    qr = hqmm_to_quasi(h)
    assert np.allclose(h.rho, np.eye(2) / 2)
    assert np.linalg.matrix_rank(qr.D[0], tol=1e-12) == 1
    assert abs(qr((0, 0, 0)) - 1) < 1e-12


def test_frdn_qutrit_matches_quasi():
    p = frdn.FrdnParams(0.4, 1.0)
    a, b = frdn.build_quasi(p), hqmm_to_quasi(frdn.build_hqmm(p))
    for n in range(9):
        assert np.abs(word_table(a, n) - word_table(b, n)).max() < 1e-9


def test_random_instrument_certificate_and_validation():
    rng = np.random.default_rng(2)
    for _ in range(5):
        h = HiddenQuantumModel.from_kraus(random_instrument(3, 2, rng))
        cert = cp_certificate(h)
        assert cert.passed, cert.failures
        assert validate(hqmm_to_quasi(h), 5).passed


def test_choi_basis_independent():
    rng = np.random.default_rng(8)
    for _ in range(5):
        kraus = random_instrument(3, 2, rng)
        for ks in kraus:
            S = kraus_superop(ks, 3)
            a = np.linalg.eigvalsh(choi_from_kraus(ks, 3)).min()
            b = np.linalg.eigvalsh(choi_matrix(S)).min()
            assert abs(a - b) < 1e-10


def test_trace_formula_equivalence():
    rng = np.random.default_rng(4)
    h = HiddenQuantumModel.from_kraus(random_instrument(2, 3, rng))
    qr = hqmm_to_quasi(h)
    for _ in range(100):
        u = tuple(rng.integers(0, 3, rng.integers(0, 9)))
        rho = h.rho
        for s in u:
            rho = sum(K @ rho @ K.conj().T for K in h.kraus[s])
        want = np.trace(rho).real
        assert abs(qr(u) - want) <= 1e-10 * max(want, 1e-12)


def test_apply_superop_matches_kraus():
    rng = np.random.default_rng(6)
    ks = random_instrument(3, 1, rng)[0]
    X = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    want = sum(K @ X @ K.conj().T for K in ks)
    assert np.allclose(apply_superop(kraus_superop(ks, 3), X), want)


def test_certificate_pvm_split_channel():
    U = haar_unitary(2, np.random.default_rng(0))
    P = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    assert cp_certificate(HiddenQuantumModel.from_kraus([[P[0] @ U], [P[1] @ U]])).passed


def test_certificate_detects_bad_r():
    p = frdn.FrdnParams(0.4, 1.0)
    r0 = frdn.squeeze_parameter(0.4, 1.0)
    h = frdn.build_hqmm(p, r=2 * r0, strict=False)
    cert = cp_certificate(h)
    assert not cert.passed
    assert min(cert.min_choi_eigenvalues) < -1e-9


def test_certificate_unitality_scaled():
    h = frdn.build_hqmm(frdn.FrdnParams(0.4, 1.0))
    big = HiddenQuantumModel.from_kraus([[1.1 * K for K in ks] for ks in h.kraus], rho=h.rho)
    cert = cp_certificate(big)
    assert not cert.passed
    assert abs(cert.unitality_residual - 0.21) < 1e-9


def test_measure_prepare():
    rng = np.random.default_rng(9)
    sigma = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    sigma = sigma @ sigma.conj().T
    sigma /= np.trace(sigma)
    ks = measure_prepare_map(np.eye(3), sigma)
    X = np.diag([0.2, 0.5, 0.3]).astype(complex)
    assert np.allclose(sum(K @ X @ K.conj().T for K in ks), sigma)
    assert np.allclose(sum(K.conj().T @ K for K in ks), np.eye(3))
    zero = measure_prepare_map(np.zeros((3, 3)), sigma)
    assert all(np.allclose(K, 0) for K in zero)
    with pytest.raises(ParameterError):
        measure_prepare_map(2 * np.eye(3), sigma)


def test_frdn_measure_prepare_choi():
    info = frdn.build_hqmm(frdn.FrdnParams(0.4, 1.0), details=True)
    assert min(cp_certificate(info.model).min_choi_eigenvalues) >= -1e-9
    # the a-symbol probability from the map matches the quasi-realization
    qr = frdn.build_quasi(frdn.FrdnParams(0.4, 1.0))
    assert abs(info.model.word_probability((0,)) - qr((0,))) < 1e-12


def test_hqmm_json_roundtrip(tmp_path):
    h = frdn.build_hqmm(frdn.FrdnParams(0.4, 1.0))
    h.save(tmp_path / "h.json")
    back = HiddenQuantumModel.load(tmp_path / "h.json")
    assert np.allclose(back.rho, h.rho)
    assert all(np.allclose(a, b) for a, b in zip(back.superops, h.superops))
    assert back.alphabet.labels == ("a", "b")


def test_sampling_iid_frequency():
    seq = np.array(sample_sequence(coin_hmm(), 100_000, 1))
    f = np.mean(seq == 0)
    assert abs(f - 0.3) < 3 * math.sqrt(0.3 * 0.7 / 1e5)


def test_sampling_deterministic_and_streams():
    h = frdn.build_hqmm(frdn.FrdnParams(0.4, 1.0))
    assert sample_sequence(h, 500, 3) == sample_sequence(h, 500, 3)
    assert sample_sequence(h, 500, (3, 0)) != sample_sequence(h, 500, (3, 1))


def test_sampling_window_frequencies_hmm():
    h = random_hmm(3, 2, np.random.default_rng(12))
    qr = hmm_to_quasi(h)
    N = 1_000_000
    seq = np.array(sample_sequence(h, N + 2, 5))
    for w in [(0,), (1, 0), (0, 1, 1)]:
        L = len(w)
        hits = np.ones(N, bool)
        for i, s in enumerate(w):
            hits &= seq[i:i + N] == s
        p = qr(w)
        assert abs(hits.mean() - p) <= 4 * math.sqrt(p * (1 - p) / N)


def test_sampling_window_frequencies_hqmm():
    h = frdn.build_hqmm(frdn.FrdnParams(0.4, 1.0))
    qr = hqmm_to_quasi(h)
    N = 200_000
    seq = np.array(sample_sequence(h, N + 2, 21))
    for w in [(0,), (0, 1), (1, 1, 0)]:
        hits = np.ones(N, bool)
        for i, s in enumerate(w):
            hits &= seq[i:i + N] == s
        p = qr(w)
        assert abs(hits.mean() - p) <= 4 * math.sqrt(p * (1 - p) / N)


def test_sampling_collapse():
    h = HiddenQuantumModel.from_superops([np.zeros((4, 4))], rho=np.eye(2) / 2)
    with pytest.raises(NumericalError):
        sample_sequence(h, 3, 0)


def test_sequence_files(tmp_path):
    al = Alphabet(2, ("a", "b"))
    seq = (0, 1, 1, 0, 1)
    write_sequence(tmp_path / "s.txt", seq, al)
    assert (tmp_path / "s.txt").read_text().strip() == "a b b a b"
    assert read_sequence(tmp_path / "s.txt", al) == seq
    write_sequence(tmp_path / "s.bin", seq, al, "binary")
    raw = (tmp_path / "s.bin").read_bytes()
    assert raw[:6] == b"RLSEQ1" and len(raw) == 16 + 5
    assert read_sequence(tmp_path / "s.bin") == seq
