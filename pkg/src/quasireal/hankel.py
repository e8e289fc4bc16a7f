"""Finite Hankel blocks ``H[u, v] = p(uv)`` and spectral recovery of a
minimal quasi-realization from them."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Alphabet, QuasiRealization, Word, evaluate_word, words_upto
from .errors import NumericalError, ParameterError

REL_THRESHOLD = 1e-8
MIN_CONDITION = 1e-12


@dataclass(frozen=True)
class HankelBlock:
    U: tuple
    V: tuple
    H: np.ndarray
    shifts: tuple  # H_sigma[u, v] = p(u sigma v)
    alphabet: Alphabet

    @property
    def h_eps(self) -> np.ndarray:
        """Column ``p(u)`` over prefixes."""
        return self.H[:, self.V.index(())]

    @property
    def eps_row(self) -> np.ndarray:
        """Row ``p(v)`` over suffixes."""
        return self.H[self.U.index(()), :]

    def to_csv(self, path, sigma: int | None = None) -> None:
        """Write ``H`` (or ``H_sigma``) with word headers; rows are prefixes."""
        M = self.H if sigma is None else self.shifts[sigma]
        fmt = self.alphabet.format
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([""] + [fmt(v) or "eps" for v in self.V])
            for u, row in zip(self.U, M):
                w.writerow([fmt(u) or "eps"] + [repr(float(x)) for x in row])


def _as_source(p) -> tuple[Callable[[Word], float], int]:
    if isinstance(p, QuasiRealization):
        return (lambda u: evaluate_word(p, u)), p.m
    fn, m = p
    return fn, int(m)


def build_hankel(p, U: Sequence[Word], V: Sequence[Word]) -> HankelBlock:
    """Evaluate the block on prefix basis ``U`` and suffix basis ``V``.

    ``p`` is a QuasiRealization or a pair ``(callable, alphabet_size)``.  Each
    distinct concatenation is evaluated once.
    """
    U, V = tuple(tuple(u) for u in U), tuple(tuple(v) for v in V)
    if not U or not V or () not in U or () not in V:
        raise ParameterError("bases must be nonempty and contain the empty word")
    fn, m = _as_source(p)
    cache: dict = {}

    def val(w):
        if w not in cache:
            cache[w] = float(fn(w))
        return cache[w]

    H = np.array([[val(u + v) for v in V] for u in U])
    shifts = tuple(np.array([[val(u + (s,) + v) for v in V] for u in U]) for s in range(m))
    alphabet = p.alphabet if isinstance(p, QuasiRealization) else Alphabet(m)
    return HankelBlock(U, V, H, shifts, alphabet)


def default_basis(m: int, d: int) -> list:
    return words_upto(m, d + 1)


def numerical_rank(H, rel_threshold: float = REL_THRESHOLD) -> tuple[int, float]:
    """Number of singular values above ``rel_threshold * s_1`` and the gap
    ratio ``s_r / s_{r+1}`` (``inf`` when nothing is cut)."""
    M = H.H if isinstance(H, HankelBlock) else np.asarray(H, float)
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0, np.inf
    r = int(np.sum(s > rel_threshold * s[0]))
    gap = np.inf if r == s.size or s[r] == 0 else float(s[r - 1] / s[r])
    return r, gap


def learn_regular(block: HankelBlock, r: int) -> QuasiRealization:
    """Rank-``r`` factorization ``H = P Q`` and the induced realization
    ``D_s = P^+ H_s Q^+``, ``tau = P^+ h_eps``, ``pi = eps_row Q^+``."""
    if r < 1:
        raise ParameterError("rank must be positive")
    Uu, s, Vt = np.linalg.svd(block.H, full_matrices=False)
    if r > s.size:
        raise ParameterError(f"rank {r} exceeds block size")
    if s[0] == 0 or s[r - 1] / s[0] < MIN_CONDITION:
        raise NumericalError(f"rank {r} factorization is ill-conditioned (s_r/s_1 = {s[r - 1] / s[0] if s[0] else 0:.3g})")
    # P = U_r S^1/2, Q = S^1/2 V_r^T; only their pseudo-inverses are needed
    sq = np.sqrt(s[:r])
    Pp = (Uu[:, :r] / sq).T
    Qp = Vt[:r].T / sq
    D = [Pp @ Hs @ Qp for Hs in block.shifts]
    tau = Pp @ block.h_eps
    pi = block.eps_row @ Qp
    return QuasiRealization(pi, D, tau, block.alphabet)


def spectra(qr: QuasiRealization) -> list[np.ndarray]:
    """Eigenvalues of each symbol matrix sorted by (|z|, angle)."""
    out = []
    for M in qr.D:
        z = np.linalg.eigvals(M)
        out.append(z[np.lexsort((np.round(np.angle(z), 9), -np.round(np.abs(z), 9)))])
    return out


def spectral_distance(z1, z2) -> float:
    """Matching distance between two eigenvalue multisets of equal size."""
    z1, z2 = np.asarray(z1), np.asarray(z2)
    C = np.abs(z1[:, None] - z2[None, :])
    i, j = linear_sum_assignment(C)
    return float(C[i, j].max()) if len(i) else 0.0
