"""Hidden Markov models (positive realizations) and hidden quantum Markov
models (completely positive realizations).

Quantum maps are stored in the Schroedinger picture as Kraus lists and as real
superoperators over an orthonormal Hermitian basis: identity/sqrt(d), then the
symmetric, antisymmetric and diagonal generalized Gell-Mann matrices.  The
quasi-realization of an HQMM uses the transposed (Heisenberg) superoperators so
that row-vector propagation ``pi D_u1 ... D_ul tau`` equals
``Tr(D_ul(...D_u1(rho)))``.
"""
from __future__ import annotations

import json
import struct
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import TOL_PROB, Alphabet, QuasiRealization, Word
from .errors import NumericalError, ParameterError, ValidityError

TOL_CP = 1e-9
SEQ_MAGIC = b"RLSEQ1"


@lru_cache(maxsize=None)
def _gellmann(d: int) -> np.ndarray:
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    sym, anti, diag = [], [], []
    for j in range(d):
        for k in range(j + 1, d):
            S = np.zeros((d, d), complex)
            S[j, k] = S[k, j] = 1 / np.sqrt(2)
            sym.append(S)
            A = np.zeros((d, d), complex)
            A[j, k] = -1j / np.sqrt(2)
            A[k, j] = 1j / np.sqrt(2)
            anti.append(A)
    for l in range(1, d):
        H = np.zeros((d, d), complex)
        H[np.arange(l), np.arange(l)] = 1.0
        H[l, l] = -l
        diag.append(H / np.sqrt(l * (l + 1)))
    B = np.array(basis + sym + anti + diag)
    B.setflags(write=False)
    return B


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal (under ``Tr(AB)``) Hermitian basis, shape ``(d*d, d, d)``."""
    return _gellmann(int(d))


def to_coords(X: np.ndarray) -> np.ndarray:
    """Real coordinates ``Tr(B_i X)`` of a Hermitian matrix."""
    X = np.asarray(X, complex)
    B = hermitian_basis(X.shape[0])
    return np.real(np.einsum("kij,ji->k", B, X))


def from_coords(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c)
    d = int(round(np.sqrt(c.shape[0])))
    return np.einsum("k,kij->ij", c, hermitian_basis(d))


def kraus_superop(kraus: Sequence[np.ndarray], d: int) -> np.ndarray:
    """Real matrix ``S[i, j] = Tr(B_i Phi(B_j))`` of ``Phi(X) = sum K X K^dag``."""
    B = hermitian_basis(d)
    S = np.zeros((d * d, d * d))
    for K in kraus:
        K = np.asarray(K, complex)
        images = K[None] @ B @ K.conj().T[None]
        S += np.real(np.einsum("iab,jba->ij", B, images))
    return S


def apply_superop(S: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Apply a superoperator to an arbitrary (not necessarily Hermitian) matrix."""
    B = hermitian_basis(X.shape[0])
    c = np.einsum("kij,ji->k", B, X)  # complex coordinates
    return np.einsum("k,kij->ij", S @ c, B)


def choi_matrix(S: np.ndarray) -> np.ndarray:
    """Choi matrix ``sum_ab |a><b| (x) Phi(|a><b|)`` from a superoperator."""
    d = int(round(np.sqrt(S.shape[0])))
    C = np.zeros((d * d, d * d), complex)
    for a in range(d):
        for b in range(d):
            E = np.zeros((d, d), complex)
            E[a, b] = 1.0
            C[a * d:(a + 1) * d, b * d:(b + 1) * d] = apply_superop(S, E)
    return C


def choi_from_kraus(kraus: Sequence[np.ndarray], d: int) -> np.ndarray:
    C = np.zeros((d * d, d * d), complex)
    for K in kraus:
        v = np.asarray(K, complex).T.reshape(-1)  # v[a*d + i] = K[i, a]
        C += np.outer(v, v.conj())
    return C


# ---------------------------------------------------------------- classical


@dataclass(frozen=True)
class PositiveRealization:
    """HMM: non-negative ``D_u`` with row-stochastic sum; ``tau`` is all ones."""

    pi: np.ndarray
    D: tuple
    alphabet: Alphabet | None = None

    def __post_init__(self):
        pi = np.array(self.pi, float)
        D = tuple(np.array(M, float) for M in self.D)
        for a in (pi, *D):
            a.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "alphabet", self.alphabet or Alphabet(len(D)))

    @property
    def d(self) -> int:
        return self.pi.shape[0]

    @property
    def m(self) -> int:
        return len(self.D)

    def problems(self, tol: float = TOL_PROB) -> list[str]:
        out = []
        if any(M.shape != (self.d, self.d) for M in self.D):
            out.append("matrix shapes do not match pi")
            return out
        if min(M.min() for M in self.D) < -tol:
            out.append("negative transition entry")
        S = sum(self.D)
        if np.abs(S.sum(axis=1) - 1).max() > tol:
            out.append("letter sum is not row-stochastic")
        if self.pi.min() < -tol or abs(self.pi.sum() - 1) > tol:
            out.append("pi is not a probability vector")
        if np.abs(self.pi @ S - self.pi).max() > tol:
            out.append("pi is not stationary")
        return out


def hmm_to_quasi(h: PositiveRealization) -> QuasiRealization:
    bad = h.problems()
    if bad:
        raise ValidityError("; ".join(bad))
    return QuasiRealization(h.pi, h.D, np.ones(h.d), h.alphabet)


# ---------------------------------------------------------------- quantum


class HiddenQuantumModel:
    """Per-symbol quantum operations on a ``hdim``-level system plus a state.

    Build with :meth:`from_kraus` (the normal route, CP by construction) or
    :meth:`from_superops` (any Hermiticity-preserving maps; used to represent
    candidate maps that may fail the CP certificate).
    """

    def __init__(self, hdim, superops, rho, kraus=None, alphabet=None):
        self.hdim = int(hdim)
        self.superops = tuple(np.array(S, float) for S in superops)
        for S in self.superops:
            if S.shape != (self.hdim ** 2, self.hdim ** 2):
                raise ParameterError("superoperator has wrong shape")
            S.setflags(write=False)
        self.kraus = None if kraus is None else tuple(
            tuple(np.array(K, complex) for K in ks) for ks in kraus
        )
        rho = np.array(rho, complex)
        if rho.shape != (self.hdim, self.hdim):
            raise ParameterError("rho has wrong shape")
        rho = (rho + rho.conj().T) / 2
        rho.setflags(write=False)
        self.rho = rho
        self.alphabet = alphabet or Alphabet(len(self.superops))

    @classmethod
    def from_kraus(cls, kraus, rho=None, alphabet=None) -> "HiddenQuantumModel":
        kraus = [list(ks) for ks in kraus]
        d = next(np.asarray(K).shape[0] for ks in kraus for K in ks)
        supers = [kraus_superop(ks, d) for ks in kraus]
        if rho is None:
            rho = stationary_state(supers)
        return cls(d, supers, rho, kraus, alphabet)

    @classmethod
    def from_superops(cls, superops, rho=None, alphabet=None) -> "HiddenQuantumModel":
        d = int(round(np.sqrt(np.asarray(superops[0]).shape[0])))
        if rho is None:
            rho = stationary_state(superops)
        return cls(d, superops, rho, None, alphabet)

    @property
    def m(self) -> int:
        return len(self.superops)

    def apply(self, u: int, rho: np.ndarray) -> np.ndarray:
        if self.kraus is not None:
            return sum((K @ rho @ K.conj().T for K in self.kraus[u]), np.zeros_like(rho))
        return apply_superop(self.superops[u], rho)

    def word_probability(self, u: Word) -> float:
        """``Tr(D_ul(...D_u1(rho)))`` computed on density matrices."""
        r = np.array(self.rho)
        for s in u:
            r = self.apply(s, r)
        return float(np.real(np.trace(r)))

    def to_json(self) -> dict:
        if self.kraus is None:
            raise ParameterError("only Kraus-specified models can be serialized")
        enc = lambda M: [[float(z.real), float(z.imag)] for z in np.asarray(M).reshape(-1)]
        return {
            "hdim": self.hdim,
            "alphabet": [self.alphabet.label(i) for i in range(self.m)],
            "kraus": {self.alphabet.label(i): [enc(K) for K in ks] for i, ks in enumerate(self.kraus)},
            "rho": enc(self.rho),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HiddenQuantumModel":
        d = int(obj["hdim"])
        dec = lambda flat: np.array([complex(re, im) for re, im in flat]).reshape(d, d)
        labels = obj.get("alphabet") or list(obj["kraus"])
        kraus = [[dec(K) for K in obj["kraus"][lab]] for lab in labels]
        rho = dec(obj["rho"]) if "rho" in obj else None
        return cls.from_kraus(kraus, rho, Alphabet(len(labels), tuple(labels)))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, allow_nan=False)

    @classmethod
    def load(cls, path) -> "HiddenQuantumModel":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def stationary_state(superops) -> np.ndarray:
    """Fixed point of the summed map, normalized to unit trace."""
    S = np.sum(superops, axis=0)
    w, V = np.linalg.eig(S)
    k = int(np.argmin(np.abs(w - 1.0)))
    if abs(w[k] - 1.0) > 1e-8:
        raise NumericalError("summed map has no eigenvalue 1")
    rho = from_coords(np.real(V[:, k] * np.exp(-1j * np.angle(V[0, k]))))
    tr = np.real(np.trace(rho))
    if abs(tr) < 1e-12:
        raise NumericalError("fixed point of the summed map is traceless")
    return rho / tr


def hqmm_to_quasi(h: HiddenQuantumModel, check: bool = True) -> QuasiRealization:
    if check:
        cert = cp_certificate(h)
        if not cert.passed:
            raise ValidityError("HQMM fails its CP certificate: " + "; ".join(cert.failures))
    tau = to_coords(np.eye(h.hdim))
    pi = to_coords(h.rho)
    return QuasiRealization(pi, [S.T for S in h.superops], tau, h.alphabet)


@dataclass
class CPValidityCertificate:
    min_choi_eigenvalues: tuple[float, ...]
    unitality_residual: float
    stationarity_residual: float
    state_min_eigenvalue: float
    trace_residual: float
    passed: bool
    failures: list

    def __bool__(self):
        return self.passed


def cp_certificate(h: HiddenQuantumModel, tol_cp: float = TOL_CP, from_kraus: bool | None = None):
    """Numerical evidence that ``h`` is a completely positive realization."""
    d = h.hdim
    use_kraus = h.kraus is not None if from_kraus is None else from_kraus
    mins = []
    for i, S in enumerate(h.superops):
        C = choi_from_kraus(h.kraus[i], d) if use_kraus else choi_matrix(S)
        C = (C + C.conj().T) / 2 / d
        mins.append(float(np.linalg.eigvalsh(C).min()))
    # Heisenberg image of the identity under the summed map
    S_sum = np.sum(h.superops, axis=0)
    unit = from_coords(S_sum.T @ to_coords(np.eye(d)))
    unital = float(np.linalg.norm(unit - np.eye(d), 2))
    stat = float(np.linalg.norm(from_coords(S_sum @ to_coords(h.rho)) - h.rho, 2))
    rmin = float(np.linalg.eigvalsh(h.rho).min())
    tr = abs(float(np.real(np.trace(h.rho))) - 1)
    failures = []
    for i, v in enumerate(mins):
        if v < -tol_cp:
            failures.append(f"symbol {h.alphabet.label(i)}: Choi eigenvalue {v:.3g}")
    if unital > tol_cp:
        failures.append(f"unitality residual {unital:.3g}")
    if stat > tol_cp:
        failures.append(f"stationarity residual {stat:.3g}")
    if rmin < -tol_cp or tr > tol_cp:
        failures.append("rho is not a density matrix")
    return CPValidityCertificate(tuple(mins), unital, stat, rmin, tr, not failures, failures)


def _psd_factor(A: np.ndarray, name: str, upper: float | None, tol: float):
    A = (np.asarray(A, complex) + np.asarray(A, complex).conj().T) / 2
    w, V = np.linalg.eigh(A)
    if w.min() < -tol or (upper is not None and w.max() > upper + tol):
        raise ParameterError(f"{name} has eigenvalues outside the allowed range: {w}")
    return np.clip(w, 0, None), V


def measure_prepare_map(F: np.ndarray, sigma: np.ndarray, tol: float = TOL_CP) -> list[np.ndarray]:
    """Kraus operators of ``rho -> Tr(F rho) sigma`` for an effect ``0 <= F <= I``."""
    f, E = _psd_factor(F, "effect", 1.0, tol)
    s, Sv = _psd_factor(sigma, "state", None, tol)
    if abs(np.sum(s) - 1) > 1e-8:
        raise ParameterError("prepared state must have unit trace")
    kraus = []
    for i in range(len(s)):
        for j in range(len(f)):
            if s[i] > 0 and f[j] > 0:
                kraus.append(np.sqrt(s[i] * f[j]) * np.outer(Sv[:, i], E[:, j].conj()))
    return kraus


def measure_prepare_superop(F: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> Tr(F rho) sigma`` with no positivity checks."""
    return np.outer(to_coords(sigma), to_coords(F))


# ---------------------------------------------------------------- sampling


def _rng(seed) -> np.random.Generator:
    # PCG64 seeded through SeedSequence: the stream is fixed by numpy's
    # documented PCG64 algorithm, one float64 from random() per emitted symbol.
    if isinstance(seed, tuple):
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed[0], spawn_key=(seed[1],))))
    return np.random.Generator(np.random.PCG64(seed))


def sample_sequence(model, length: int, seed) -> Word:
    """Draw ``length`` symbols from a stationary HMM or HQMM.

    ``seed`` is an int or ``(seed, stream_index)`` for independent parallel
    streams.  Given the seed the output is deterministic.
    """
    rng = _rng(seed)
    if isinstance(model, PositiveRealization):
        return _sample_hmm(model, length, rng)
    if isinstance(model, HiddenQuantumModel):
        return _sample_hqmm(model, length, rng)
    raise ParameterError(f"cannot sample from {type(model).__name__}")


def _sample_hmm(h: PositiveRealization, length: int, rng) -> Word:
    bad = h.problems()
    if bad:
        raise ValidityError("; ".join(bad))
    d, m = h.d, h.m
    # joint (symbol, next state) table per current state
    joint = np.stack(h.D, axis=1).reshape(d, m * d)
    cum = np.cumsum(joint, axis=1)
    cum /= cum[:, -1:]
    start = np.cumsum(h.pi) / np.sum(h.pi)
    u = rng.random(length + 1)
    state = min(int(np.searchsorted(start, u[0], side="right")), d - 1)
    out = np.empty(length, dtype=np.int64)
    rows = [c.tolist() for c in cum]
    for t in range(length):
        k = min(bisect_right(rows[state], u[t + 1]), m * d - 1)
        out[t] = k // d
        state = k % d
    return tuple(out.tolist())


def _sample_hqmm(h: HiddenQuantumModel, length: int, rng) -> Word:
    S = np.stack(h.superops)
    tau = to_coords(np.eye(h.hdim))
    r = to_coords(h.rho)
    u = rng.random(length)
    out = np.empty(length, dtype=np.int64)
    for t in range(length):
        nxt = S @ r
        p = nxt @ tau
        total = p.sum()
        if total < TOL_PROB or np.all(p < TOL_PROB):
            raise NumericalError(f"all symbol probabilities vanished at step {t}")
        c = np.cumsum(np.clip(p, 0, None)) / total
        k = min(int(np.searchsorted(c, u[t], side="right")), len(p) - 1)
        out[t] = k
        r = nxt[k] / p[k]
    return tuple(out.tolist())


def write_sequence(path, seq: Word, alphabet: Alphabet, fmt: str = "text") -> None:
    """Text: space-separated labels.  Binary: 16-byte header
    (``RLSEQ1``, u16 alphabet size, u64 length, little-endian) then one u8 per symbol."""
    if fmt == "text":
        with open(path, "w") as fh:
            fh.write(alphabet.format(seq) + "\n")
    elif fmt == "binary":
        if alphabet.size > 256:
            raise ParameterError("binary format supports at most 256 symbols")
        with open(path, "wb") as fh:
            fh.write(SEQ_MAGIC + struct.pack("<HQ", alphabet.size, len(seq)))
            fh.write(np.asarray(seq, dtype=np.uint8).tobytes())
    else:
        raise ParameterError(f"unknown sequence format {fmt!r}")


def read_sequence(path, alphabet: Alphabet | None = None) -> Word:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:6] == SEQ_MAGIC:
        m, n = struct.unpack("<HQ", data[6:16])
        seq = np.frombuffer(data[16:16 + n], dtype=np.uint8)
        if seq.size != n or (n and seq.max() >= m):
            raise ParameterError("corrupt binary sequence file")
        return tuple(int(x) for x in seq)
    alphabet = alphabet or Alphabet(256)
    return alphabet.parse(data.decode())
