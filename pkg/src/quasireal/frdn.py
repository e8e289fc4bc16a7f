"""FRDN processes: a function of a countable Markov chain with return
probabilities ``h_l = lam**l * sin(l*alpha/2)**2``, emitting ``a`` in state 0
and ``b`` elsewhere.

Three equivalent descriptions are built here: a forward algorithm on the
truncated chain, an explicit 4-dimensional quasi-realization and a qutrit
HQMM.  The depolarized qubit family used for noise-robustness bounds lives
here as well.

Symbol 0 is ``a`` and symbol 1 is ``b`` throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .core import Alphabet, QuasiRealization, word_table, words
from .errors import ConstructionError, ParameterError, TruncationError
from .realizations import (
    HiddenQuantumModel,
    cp_certificate,
    hqmm_to_quasi,
    kraus_superop,
    measure_prepare_map,
    measure_prepare_superop,
)

A, B = 0, 1
ALPHABET = Alphabet(2, ("a", "b"))

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def default_truncation(lam: float) -> int:
    """Smallest chain length with ``lam**N`` below 1e-16 (at least 200)."""
    return max(200, math.ceil(16 * math.log(10) / math.log(1 / lam)))


@dataclass(frozen=True)
class FrdnParams:
    lam: float
    alpha: float
    truncation: int | None = None

    def __post_init__(self):
        if not 0 < self.lam <= 0.5:
            raise ParameterError(f"lambda must lie in (0, 1/2], got {self.lam}")
        if not math.isfinite(self.alpha):
            raise ParameterError("alpha must be finite")
        if self.truncation is None:
            object.__setattr__(self, "truncation", default_truncation(self.lam))
        h0 = 1.0 - return_probabilities(self)[1:].sum()
        if not 0.0 <= h0 <= 1.0:
            raise ParameterError(f"h_0 = {h0} outside [0, 1]")


def return_probabilities(params: FrdnParams) -> np.ndarray:
    """``h_0..h_N`` on the truncated chain; ``h_0`` absorbs the missing mass."""
    l = np.arange(params.truncation + 1)
    h = params.lam ** l * np.sin(l * params.alpha / 2) ** 2
    h[0] = 1.0 - h[1:].sum()
    return h


def tail_sums(params: FrdnParams) -> np.ndarray:
    """``T[n] = sum_{l >= n} h_l``, i.e. ``p(b^n | a)`` for ``n >= 1``."""
    h = return_probabilities(params)
    return np.cumsum(h[::-1])[::-1]


def conditional_b_run(params: FrdnParams, n: int) -> float:
    """Closed form of ``p(b^n | a) = sum_{l>=n} h_l`` for ``n >= 1``."""
    lam, al = params.lam, params.alpha
    z = lam * np.exp(1j * al)
    val = lam ** n / 4 * (2 / (1 - lam) - np.exp(1j * n * al) / (1 - z) - np.exp(-1j * n * al) / (1 - np.conj(z)))
    return float(val.real)


def stationary_a_probability(params: FrdnParams) -> float:
    """``p(a) = 1 / sum_{n>=0} p(b^n | a) = 1 / (1 + sum_l l h_l)`` (mean return time)."""
    h = return_probabilities(params)
    return 1.0 / (1.0 + np.dot(np.arange(len(h)), h))


def truncation_residual(params: FrdnParams) -> float:
    """Upper bound on ``sum_{l > N} l h_l``, the stationary mass the truncated
    chain misplaces relative to the infinite one."""
    lam, N = params.lam, params.truncation
    return lam ** (N + 1) * ((N + 1) / (1 - lam) + lam / (1 - lam) ** 2)


def chain_stationary(params: FrdnParams) -> np.ndarray:
    if truncation_residual(params) > 1e-12:
        raise TruncationError(f"truncation N={params.truncation} leaves a stationary residual above 1e-12")
    h = return_probabilities(params)
    mu = np.cumsum(h[::-1])[::-1].copy()
    mu[0] = 1.0
    mu /= mu.sum()
    # residual of mu P = mu on the truncated chain
    nxt = np.zeros_like(mu)
    nxt[:-1] += mu[1:]
    nxt += mu[0] * h
    if np.abs(nxt - mu).max() > 1e-12:
        raise TruncationError("stationary distribution of the truncated chain is inaccurate")
    return mu


def chain_oracle_prob(params: FrdnParams, u) -> float:
    """Forward algorithm on the chain ``{0..N}`` started in stationarity."""
    h = return_probabilities(params)
    v = chain_stationary(params)
    u = [ALPHABET.index(s) if isinstance(s, str) else int(s) for s in u]
    for i, s in enumerate(u):
        if s == A:
            v = np.concatenate([v[:1], np.zeros(len(v) - 1)])
        elif s == B:
            v = np.concatenate([[0.0], v[1:]])
        else:
            raise ParameterError(f"FRDN alphabet has two symbols, got {s}")
        if i < len(u) - 1:
            nxt = np.zeros_like(v)
            nxt[:-1] += v[1:]
            nxt += v[0] * h
            v = nxt
    return float(v.sum())


def _ab(lam: float, alpha: float) -> tuple[float, float]:
    c, s = math.cos(alpha), math.sin(alpha)
    den = (1 - lam * c) ** 2 + lam ** 2 * s ** 2
    return (1 - lam * c + lam * s) / den, (1 - lam * c - lam * s) / den


def b_matrix(params: FrdnParams) -> np.ndarray:
    c, s = math.cos(params.alpha), math.sin(params.alpha)
    return params.lam * np.array(
        [[0, 0, 0, 0], [0, 1, 0, 0], [0, 0, c, s], [0, 0, -s, c]], dtype=float
    )


def build_quasi(params: FrdnParams) -> QuasiRealization:
    """4-dimensional quasi-realization with ``D_a = w pi0^T`` of rank one."""
    lam = params.lam
    a_, b_ = _ab(lam, params.alpha)
    Db = b_matrix(params)
    tau = np.ones(4)
    # with this orientation of the rotation block, the a/b coefficients pair
    # with coordinates 4 and 3 respectively
    pi0 = np.array([1 - (2 / (1 - lam) - a_ - b_) / 4, 1 / (2 * (1 - lam)), -b_ / 4, -a_ / 4])
    w = tau - Db @ tau
    Da = np.outer(w, pi0)
    try:
        x = np.linalg.solve((np.eye(4) - Db).T, pi0)
    except np.linalg.LinAlgError as exc:
        raise ConstructionError("I - D_b is singular") from exc
    pi = x / (x @ tau)
    return QuasiRealization(pi, [Da, Db], tau, ALPHABET)


# ------------------------------------------------------------------ quantum


def squeeze_parameter(lam: float, alpha: float) -> float:
    """``r`` with ``tanh(2r) = (1 - lam) / |1 - lam e^{i alpha}|``."""
    x = (1 - lam) / abs(1 - lam * np.exp(1j * alpha))
    if x >= 1 - 1e-12:
        raise ParameterError(f"tanh(2r) = {x} is not below 1; need lambda <= 1/2")
    return 0.25 * math.log((1 + x) / (1 - x))


def xi_phase(lam: float, alpha: float, r: float) -> float:
    """Phase of ``xi = (e^{i phi}|0> + e^{-i phi}|1>)/sqrt 2``.

    ``arg beta`` (the weight of ``xi`` on ``e^{-rX}|0>``) must be half of
    ``arg(1 - lam e^{-i alpha})``.
    """
    psi = np.angle(1 - lam * np.exp(-1j * alpha))
    return math.atan2(math.exp(2 * r) * math.sin(psi / 2), math.cos(psi / 2))


def flag_weight(lam: float, alpha: float) -> float:
    """Weight ``p`` of ``|xi><xi|`` in the prepared state (equals ``sum_{l>=1} h_l``)."""
    c = math.cos(alpha)
    return 1 / (2 * (1 - lam)) - (1 - lam * c) / (2 * (1 + lam ** 2 - 2 * lam * c))


def phi_kraus(lam: float, alpha: float, r: float) -> np.ndarray:
    """Single Kraus operator ``sqrt(lam) e^{-rX} e^{i alpha Z/2} e^{rX}`` of the qubit map."""
    return math.sqrt(lam) * expm(-r * _X) @ expm(0.5j * alpha * _Z) @ expm(r * _X)


def heisenberg_identity(lam: float, alpha: float, r: float | None = None) -> np.ndarray:
    """``Phi^dag(1)`` of the qubit map; its spectrum is ``{1, lam^2}`` at the tuned ``r``."""
    r = squeeze_parameter(lam, alpha) if r is None else r
    K = phi_kraus(lam, alpha, r)
    return K.conj().T @ K


@dataclass
class QutritConstruction:
    """Intermediate quantities of the qutrit realization (for inspection)."""

    r: float
    phi: float
    p: float
    xi: np.ndarray
    effect: np.ndarray
    prepared: np.ndarray
    model: HiddenQuantumModel = field(repr=False)


def build_hqmm(params: FrdnParams, r: float | None = None, strict: bool = True, details: bool = False):
    """Qutrit HQMM reproducing the FRDN process.

    ``D_b`` keeps the qubit ``span{|0>,|1>}`` and applies the qubit map;
    ``D_a`` measures the effect ``1 - D_b^dag(1)`` and prepares
    ``p|xi><xi| + (1-p)|2><2|``.  Passing a different ``r`` builds the
    candidate maps anyway; with ``strict=False`` a non-positive effect is kept
    as a bare superoperator so that :func:`cp_certificate` can reject it.
    """
    lam, al = params.lam, params.alpha
    r0 = squeeze_parameter(lam, al)
    r = r0 if r is None else float(r)
    phi = xi_phase(lam, al, r0)
    p = flag_weight(lam, al)
    K = np.zeros((3, 3), dtype=complex)
    K[:2, :2] = phi_kraus(lam, al, r)
    xi = np.array([np.exp(1j * phi), np.exp(-1j * phi), 0]) / math.sqrt(2)
    sigma = p * np.outer(xi, xi.conj())
    sigma[2, 2] += 1 - p
    F = np.eye(3) - K.conj().T @ K
    try:
        Ka = measure_prepare_map(F, sigma)
        model = HiddenQuantumModel.from_kraus([Ka, [K]], alphabet=ALPHABET)
    except ParameterError as exc:
        if strict:
            raise ConstructionError(f"D_a is not completely positive for r={r}: {exc}") from exc
        supers = [measure_prepare_superop(F, sigma), kraus_superop([K], 3)]
        model = HiddenQuantumModel.from_superops(supers, alphabet=ALPHABET)
    if details:
        return QutritConstruction(r, phi, p, xi, F, sigma, model)
    return model


@dataclass(frozen=True)
class NoiseParams:
    q: float
    s: float
    lam: float
    alpha: float
    r: float | None = None

    def __post_init__(self):
        if not 0 <= self.q < 1:
            raise ParameterError(f"q must lie in [0, 1), got {self.q}")
        if not 0 < self.s <= 1:
            raise ParameterError(f"s must lie in (0, 1], got {self.s}")
        if not 0 < self.lam <= 0.5:
            raise ParameterError(f"lambda must lie in (0, 1/2], got {self.lam}")
        if self.r is None:
            object.__setattr__(self, "r", squeeze_parameter(self.lam, self.alpha))
        if not math.isfinite(self.r):
            raise ParameterError("r must be finite")


def _depolarizing_kraus(weight: float) -> list[np.ndarray]:
    """Kraus operators of ``rho -> weight * Tr(rho) 1/2`` on a qubit."""
    if weight <= 0:
        return []
    out = []
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2), dtype=complex)
            E[i, j] = math.sqrt(weight / 2)
            out.append(E)
    return out


def noisy_kraus(np_: NoiseParams, q: float | None = None) -> tuple[list, list]:
    """Kraus lists ``(D_a, D_b)`` of the depolarized qubit model; ``q`` may be
    overridden (``q = 1`` gives the noiseless qubit reduction)."""
    q = np_.q if q is None else q
    s = np_.s
    K = phi_kraus(np_.lam, np_.alpha, np_.r)
    phi = xi_phase(np_.lam, np_.alpha, np_.r)
    xi = np.array([np.exp(1j * phi), np.exp(-1j * phi)]) / math.sqrt(2)
    F = np.eye(2) - K.conj().T @ K
    try:
        meas = measure_prepare_map(F, np.outer(xi, xi.conj()))
    except ParameterError as exc:
        raise ConstructionError(f"effect 1 - Phi^dag(1) is not positive: {exc}") from exc
    Kb = [math.sqrt(q) * K] + _depolarizing_kraus((1 - q) * s)
    Ka = [math.sqrt(q) * M for M in meas] + _depolarizing_kraus((1 - q) * (1 - s))
    return Ka, Kb


def build_noisy_hqmm(np_: NoiseParams, q: float | None = None) -> HiddenQuantumModel:
    """Qubit HQMM with ``D_b = q Phi + (1-q) s Tr(.) 1/2`` and
    ``D_a = q Tr[(1 - Phi^dag(1)) .] |xi><xi| + (1-q)(1-s) Tr(.) 1/2``."""
    Ka, Kb = noisy_kraus(np_, q)
    if not Ka:
        Ka = [np.zeros((2, 2), dtype=complex)]
    model = HiddenQuantumModel.from_kraus([Ka, Kb], alphabet=ALPHABET)
    cert = cp_certificate(model)
    if not cert.passed:
        raise ConstructionError("noisy model fails its CP certificate: " + "; ".join(cert.failures))
    return model


def noisy_b_superop(np_: NoiseParams) -> np.ndarray:
    return build_noisy_hqmm(np_).superops[B]


def perturbation_radius(np_: NoiseParams) -> float:
    """``2 (1-q) s cosh(4r)``: bound on eigenvalue displacement of the noisy ``D_b``."""
    return 2 * (1 - np_.q) * np_.s * math.cosh(4 * np_.r)



@dataclass
class EquivalenceReport:
    lam: float
    alpha: float
    max_len: int
    chain_vs_quasi: float
    chain_vs_hqmm: float
    quasi_vs_hqmm: float

    @property
    def max_discrepancy(self) -> float:
        return max(self.chain_vs_quasi, self.chain_vs_hqmm, self.quasi_vs_hqmm)

    def to_json(self) -> dict:
        return {
            "lam": self.lam,
            "alpha": self.alpha,
            "max_len": self.max_len,
            "chain_vs_quasi": self.chain_vs_quasi,
            "chain_vs_hqmm": self.chain_vs_hqmm,
            "quasi_vs_hqmm": self.quasi_vs_hqmm,
            "max_discrepancy": self.max_discrepancy,
        }


def three_way_equivalence(params: FrdnParams, max_len: int = 8) -> EquivalenceReport:
    """Largest absolute disagreement between the chain oracle, the 4-dim
    quasi-realization and the qutrit HQMM over all words of length <= max_len."""
    qq = build_quasi(params)
    qh = hqmm_to_quasi(build_hqmm(params))
    e1 = e2 = e3 = 0.0
    for n in range(max_len + 1):
        pc = np.array([chain_oracle_prob(params, u) for u in words(2, n)])
        p4, p3 = word_table(qq, n), word_table(qh, n)
        e1 = max(e1, float(np.abs(pc - p4).max()))
        e2 = max(e2, float(np.abs(pc - p3).max()))
        e3 = max(e3, float(np.abs(p4 - p3).max()))
    return EquivalenceReport(params.lam, params.alpha, max_len, e1, e2, e3)
