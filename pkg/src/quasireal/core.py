"""Alphabets, words and quasi-realizations of stationary processes.

A quasi-realization is a triple ``(pi, D, tau)`` of a row functional, one real
``d x d`` matrix per symbol and a column vector.  The probability of a word
``u = u_1 ... u_l`` is ``pi @ D[u_1] @ ... @ D[u_l] @ tau``, always evaluated by
propagating the row vector from the left.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateStationarityError,
    InvalidWordError,
    NumericalError,
    ParameterError,
)

TOL_PROB = 1e-9
TOL_EIG = 1e-8

Word = tuple  # tuple of symbol indices; () is the empty word


def tol_fix(D_bar: np.ndarray) -> float:
    """Default fixed-point tolerance, scaled by the size of the letter sum."""
    return 1e-10 * (1.0 + float(np.linalg.norm(D_bar)))


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Alphabet:
    """Symbols ``0..size-1`` with optional display labels."""

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if int(self.size) < 1:
            raise ParameterError("alphabet needs at least one symbol")
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != self.size:
                raise ParameterError("need exactly one label per symbol")
            if len(set(labels)) != len(labels):
                raise ParameterError("alphabet labels must be distinct")
            object.__setattr__(self, "labels", labels)

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def index(self, label: str) -> int:
        if self.labels is not None and label in self.labels:
            return self.labels.index(label)
        try:
            i = int(label)
        except ValueError:
            raise InvalidWordError(f"unknown symbol {label!r}") from None
        if not 0 <= i < self.size:
            raise InvalidWordError(f"symbol {i} out of range for alphabet of size {self.size}")
        return i

    def parse(self, text: str | Sequence) -> Word:
        """Turn ``"a b a"``, ``"aba"`` (single-char labels) or a sequence into a word."""
        if not isinstance(text, str):
            return check_word(tuple(text), self.size)
        parts = text.split()
        if len(parts) == 1 and self.labels is not None and all(len(x) == 1 for x in self.labels):
            parts = list(parts[0])
        return tuple(self.index(p) for p in parts)

    def format(self, u: Word, sep: str = " ") -> str:
        return sep.join(self.label(i) for i in u)


def check_word(u: Sequence[int], m: int) -> Word:
    u = tuple(int(s) for s in u)
    for s in u:
        if not 0 <= s < m:
            raise InvalidWordError(f"symbol {s} out of range for alphabet of size {m}")
    return u


def words(m: int, length: int) -> Iterator[Word]:
    """All words of exactly ``length`` symbols, lexicographic by index."""
    return itertools.product(range(m), repeat=length)


def words_upto(m: int, max_len: int) -> list[Word]:
    """All words of length ``<= max_len``, shorter words first, then lexicographic."""
    out: list[Word] = []
    for n in range(max_len + 1):
        out.extend(words(m, n))
    return out


@dataclass(frozen=True)
class QuasiRealization:
    """Finite-dimensional linear model ``p(u) = pi D^(u) tau``."""

    pi: np.ndarray
    D: tuple
    tau: np.ndarray
    alphabet: Alphabet | None = None

    def __post_init__(self):
        pi = _frozen(self.pi).ravel()
        tau = _frozen(self.tau).ravel()
        D = tuple(_frozen(M) for M in self.D)
        if not D:
            raise ParameterError("need at least one symbol matrix")
        d = pi.shape[0]
        if tau.shape != (d,) or any(M.shape != (d, d) for M in D):
            raise ParameterError("inconsistent dimensions")
        for arr in (pi, tau, *D):
            if not np.all(np.isfinite(arr)):
                raise ParameterError("non-finite entries in quasi-realization")
        alphabet = self.alphabet or Alphabet(len(D))
        if alphabet.size != len(D):
            raise ParameterError("alphabet size does not match number of matrices")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "alphabet", alphabet)

    @property
    def d(self) -> int:
        return self.pi.shape[0]

    @property
    def m(self) -> int:
        return len(self.D)

    def __call__(self, u) -> float:
        return evaluate_word(self, u)

    def matrix_of(self, u) -> np.ndarray:
        """Explicit ``D^(u)``, multiplied left to right (tests and diagnostics only)."""
        u = check_word(u, self.m)
        M = np.eye(self.d)
        for s in u:
            M = M @ self.D[s]
        return M

    def conjugate(self, T: np.ndarray) -> "QuasiRealization":
        """Equivalent realization ``(pi T^-1, T D T^-1, T tau)``."""
        Tinv = np.linalg.inv(T)
        return QuasiRealization(self.pi @ Tinv, [T @ M @ Tinv for M in self.D], T @ self.tau, self.alphabet)

    def to_json(self) -> dict:
        return {
            "alphabet": list(self.alphabet.labels) if self.alphabet.labels else self.m,
            "d": self.d,
            "pi": self.pi.tolist(),
            "tau": self.tau.tolist(),
            "D": [M.tolist() for M in self.D],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "QuasiRealization":
        alph = obj.get("alphabet", len(obj["D"]))
        alphabet = Alphabet(len(alph), tuple(alph)) if isinstance(alph, list) else Alphabet(int(alph))
        d = int(obj["d"])
        D = [np.array(M, dtype=float).reshape(d, d) for M in obj["D"]]
        return cls(np.array(obj["pi"], float), D, np.array(obj["tau"], float), alphabet)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, allow_nan=False)

    @classmethod
    def load(cls, path) -> "QuasiRealization":
        with open(path) as fh:
            obj = json.load(fh, parse_constant=_reject_constant)
        return cls.from_json(obj)


def _reject_constant(name):
    raise ParameterError(f"non-finite number {name} in model file")


def evaluate_word(qr: QuasiRealization, u) -> float:
    """``p(u)`` by row-vector propagation; O(len(u) d^2)."""
    u = check_word(u, qr.m)
    row = qr.pi
    for s in u:
        row = row @ qr.D[s]
    return float(row @ qr.tau)


def evaluate_words(qr: QuasiRealization, us: Iterable) -> np.ndarray:
    return np.array([evaluate_word(qr, u) for u in us])


def word_table(qr: QuasiRealization, length: int) -> np.ndarray:
    """Probabilities of all ``m**length`` words of one length, lexicographic order."""
    rows = qr.pi[None, :]
    for _ in range(length):
        # new[i*m + s] = rows[i] @ D[s]
        rows = np.einsum("nd,sde->nse", rows, np.stack(qr.D)).reshape(-1, qr.d)
    return rows @ qr.tau


def letter_sum(qr: QuasiRealization | Sequence[np.ndarray]) -> np.ndarray:
    D = qr.D if isinstance(qr, QuasiRealization) else qr
    return np.sum(np.stack([np.asarray(M, float) for M in D]), axis=0)


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    spectral_radius: float
    leading_left: np.ndarray | None
    leading_right: np.ndarray | None
    is_leading_simple: bool


def _sort_key(z: complex, scale: float):
    r = 1e-12 * max(scale, 1.0)
    q = lambda x: round(x / r) * r if r > 0 else x
    return (-q(abs(z)), -q(z.real), q(z.imag))


def spectrum(M, tol_eig: float = TOL_EIG) -> SpectrumReport:
    """Eigenvalues sorted by decreasing modulus, then decreasing real part,
    then increasing imaginary part.  Leading eigenvectors are returned only
    when the leading eigenvalue is real and simple."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParameterError("spectrum needs a square matrix")
    if not np.all(np.isfinite(M)):
        raise ParameterError("matrix has non-finite entries")
    try:
        w, vl, vr = scipy.linalg.eig(M, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed (cond={np.linalg.cond(M):.3g}): {exc}") from exc
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    order = sorted(range(len(w)), key=lambda i: _sort_key(complex(w[i]), scale))
    w, vl, vr = w[order], vl[:, order], vr[:, order]
    rho = float(np.abs(w[0])) if w.size else 0.0
    tol = tol_eig * max(1.0, rho)
    lead = complex(w[0])
    simple = bool(np.sum(np.abs(w - lead) <= tol) == 1)
    left = right = None
    if simple and abs(lead.imag) <= tol:
        right = _real_vector(vr[:, 0])
        left = _real_vector(vl[:, 0])
    return SpectrumReport(w, rho, left, right, simple)


def _real_vector(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    v = v * np.exp(-1j * np.angle(v[k]))
    return np.real(v) / np.linalg.norm(np.real(v))


def normalize_pair(pi: np.ndarray, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale so that ``pi @ tau == 1`` and the last coordinate of tau is positive."""
    pi = np.asarray(pi, float)
    tau = np.asarray(tau, float)
    nz = np.flatnonzero(np.abs(tau) > 1e-14 * np.abs(tau).max())
    if tau[nz[-1]] < 0:
        tau = -tau
    s = float(pi @ tau)
    if abs(s) < 1e-14 * np.linalg.norm(pi) * np.linalg.norm(tau):
        raise DegenerateStationarityError("left and right fixed points are orthogonal")
    return pi / s, tau


def stationary_pair(D: Sequence[np.ndarray], tol_eig: float = TOL_EIG):
    """Normalization ``nu = 1/rho(sum D)`` and fixed points of ``nu * sum D``.

    Returns ``(pi, tau, nu)`` with ``pi @ tau == 1``.  Raises
    :class:`DegenerateStationarityError` when the leading eigenvalue is not a
    real, positive, simple eigenvalue.
    """
    S = letter_sum(D)
    rep = spectrum(S, tol_eig)
    lead = complex(rep.eigenvalues[0])
    if rep.spectral_radius == 0.0:
        raise DegenerateStationarityError("letter sum is nilpotent")
    tol = tol_eig * max(1.0, rep.spectral_radius)
    if not rep.is_leading_simple:
        raise DegenerateStationarityError(f"leading eigenvalue {lead} is not simple")
    if abs(lead.imag) > tol or lead.real <= 0:
        raise DegenerateStationarityError(f"leading eigenvalue {lead} is not real positive")
    nu = 1.0 / rep.spectral_radius
    pi, tau = normalize_pair(rep.leading_left, rep.leading_right)
    return pi, tau, nu


@dataclass
class ValidationReport:
    passed: bool
    fixed_point_residuals: tuple[float, float]
    normalization_residual: float
    min_probability: float
    min_word: Word | None
    max_sum_error: float
    max_sum_error_length: int | None
    max_marginal_error: float
    tolerances: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.passed


def validate(
    qr: QuasiRealization,
    max_len: int,
    tol_prob: float = TOL_PROB,
    tol_fixed: float | None = None,
) -> ValidationReport:
    """Finite checks of the fixed-point relations, normalization, positivity
    and both marginalizations for every word up to ``max_len``."""
    if max_len < 0:
        raise ParameterError("max_len must be >= 0")
    S = letter_sum(qr)
    tf = tol_fix(S) if tol_fixed is None else tol_fixed
    res_left = float(np.linalg.norm(qr.pi @ S - qr.pi))
    res_right = float(np.linalg.norm(S @ qr.tau - qr.tau))
    norm_res = abs(float(qr.pi @ qr.tau) - 1.0)
    failures = []
    if res_left > tf:
        failures.append(f"left fixed-point residual {res_left:.3g} > {tf:.3g}")
    if res_right > tf:
        failures.append(f"right fixed-point residual {res_right:.3g} > {tf:.3g}")
    if norm_res > tf:
        failures.append(f"pi.tau differs from 1 by {norm_res:.3g}")

    min_p, min_word = np.inf, None
    max_sum, max_sum_len = 0.0, None
    max_marg = 0.0
    prev = None
    for n in range(max_len + 1):
        p = word_table(qr, n)
        k = int(np.argmin(p))
        if p[k] < min_p:
            min_p = float(p[k])
            min_word = tuple(int(x) for x in np.unravel_index(k, (qr.m,) * n)) if n else ()
        err = abs(float(p.sum()) - 1.0)
        if err > max_sum:
            max_sum, max_sum_len = err, n
        if prev is not None:
            grid = p.reshape((-1, qr.m))
            right = np.abs(grid.sum(axis=1) - prev).max()
            left = np.abs(p.reshape((qr.m, -1)).sum(axis=0) - prev).max()
            max_marg = max(max_marg, float(right), float(left))
        prev = p
    if min_p < -tol_prob:
        failures.append(f"negative probability {min_p:.3g} at word {min_word}")
    if max_sum > tol_prob:
        failures.append(f"length-{max_sum_len} probabilities sum to 1 +- {max_sum:.3g}")
    if max_marg > tol_prob:
        failures.append(f"marginalization error {max_marg:.3g}")
    return ValidationReport(
        passed=not failures,
        fixed_point_residuals=(res_left, res_right),
        normalization_residual=norm_res,
        min_probability=float(min_p),
        min_word=min_word,
        max_sum_error=max_sum,
        max_sum_error_length=max_sum_len,
        max_marginal_error=max_marg,
        tolerances={"tol_prob": tol_prob, "tol_fix": tf},
        failures=failures,
    )
