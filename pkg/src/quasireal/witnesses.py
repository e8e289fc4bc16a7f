"""Spectral obstructions to classical (nonnegative) realizations.

An ``n``-state HMM has every symbol-matrix eigenvalue, divided by the
spectral radius, inside the convex hull of the ``k``-th roots of unity for
``k <= n``.  Eigenvalues that are poles of the generating function
``sum_n z^-n p(a b^n a)`` are realization independent, so a pole outside the
hull at size ``n`` excludes every classical model with fewer states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import QuasiRealization
from .errors import JordanStructureError, NumericalError, ParameterError
from .frdn import NoiseParams

HULL_ETA = 1e-9
SHELL_WIDTH = 1e-8
POLE_TOL = 1e-10
MAX_EIGVEC_COND = 1e8


def _pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


# ------------------------------------------------------------- hull test


def farey_neighbors(x: float, n: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Consecutive fractions ``p/q <= x < p'/q'`` with ``q, q' <= n`` for
    ``x`` in ``[0, 1)``."""
    lo, hi = (0, 1), (1, 1)
    num, den = float(x).as_integer_ratio()  # exact floors, no rounding onto a vertex
    for k in range(1, n + 1):
        j = num * k // den
        if j * lo[1] > lo[0] * k:
            lo = (j, k)
        if (j + 1) * hi[1] < hi[0] * k:
            hi = (j + 1, k)
    return lo, hi


def roots_hull_membership(z: complex, n: int, eta: float = HULL_ETA) -> bool:
    """Whether ``z`` lies within ``eta`` of ``conv{e^(2 pi i j/k): k <= n}``.

    The hull of all roots of order at most ``n`` is the polygon whose vertices
    are the Farey fractions of order ``n`` on the circle, so only the chord
    between the two Farey neighbours of ``arg z / 2 pi`` needs testing.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    z = complex(z)
    if abs(z) > 1 + eta:
        return False
    if n == 1:
        return abs(z - 1) <= eta
    if n == 2:
        return abs(z.imag) <= eta and abs(z.real) <= 1 + eta
    x = (math.atan2(z.imag, z.real) / (2 * math.pi)) % 1.0
    if x >= 1.0:  # tiny negative angles round up to exactly 1
        x = 0.0
    (p0, q0), (p1, q1) = farey_neighbors(x, n)
    v0 = complex(math.cos(2 * math.pi * p0 / q0), math.sin(2 * math.pi * p0 / q0))
    v1 = complex(math.cos(2 * math.pi * p1 / q1), math.sin(2 * math.pi * p1 / q1))
    e, w = v1 - v0, z - v0
    # signed distance to the chord, positive on the origin side
    dist = (e.real * w.imag - e.imag * w.real) / abs(e)
    return dist >= -eta


def least_hull_order(z: complex, n_max: int, eta: float = HULL_ETA) -> int | None:
    """Least ``n <= n_max`` with ``z`` in the order-``n`` hull (the hulls are
    nested, so bisection applies), or ``None``."""
    if not roots_hull_membership(z, n_max, eta):
        return None
    lo, hi = 1, n_max
    while lo < hi:
        mid = (lo + hi) // 2
        if roots_hull_membership(z, mid, eta):
            hi = mid
        else:
            lo = mid + 1
    return lo


# ---------------------------------------------------------- phase witness


@dataclass
class PhaseWitness:
    rho: float
    normalized: np.ndarray  # z / rho over the maximal-modulus shell
    least_n: list  # per eigenvalue; None means beyond n_max
    bound: int | None  # classical dimension lower bound; None means > n_max
    n_max: int
    eta: float
    exclusions: dict = field(default_factory=dict)  # n -> excluded?

    def to_json(self) -> dict:
        return {
            "rho": self.rho,
            "normalized_eigenvalues": [_pair(z) for z in self.normalized],
            "least_n": self.least_n,
            "bound": self.bound,
            "exceeds_n_max": self.bound is None,
            "n_max": self.n_max,
            "eta": self.eta,
            "exclusions": {str(k): v for k, v in self.exclusions.items()},
        }


def max_modulus_shell(z: np.ndarray, width: float = SHELL_WIDTH) -> np.ndarray:
    rho = np.abs(z).max()
    return z[np.abs(z) >= rho * (1 - width)]


def classical_dim_witness(Db, eta: float = HULL_ETA, n_max: int = 1000, poles=None, table_n: int = 0) -> PhaseWitness:
    """Lower bound on the state count of any nonnegative realization.

    Only the maximal-modulus shell is tested.  When ``poles`` is given, shell
    eigenvalues that are not certified poles are skipped.  ``table_n > 0``
    also records, for each ``n <= table_n``, whether size ``n`` is excluded.
    """
    Db = np.asarray(Db, float)
    z = np.linalg.eigvals(Db)
    rho = float(np.abs(z).max()) if z.size else 0.0
    if rho <= 1e-12 * max(1.0, np.linalg.norm(Db)):
        raise NumericalError("spectral radius is numerically zero")
    shell = max_modulus_shell(z)
    if poles is not None:
        poles = np.asarray(list(poles), complex)
        keep = [w for w in shell if poles.size and np.min(np.abs(poles - w)) <= 1e-10 * max(1.0, rho)]
        shell = np.array(keep, complex)
    normalized = shell / rho
    least = [least_hull_order(w, n_max, eta) for w in normalized]
    bound = 1 if not least else (None if any(k is None for k in least) else max(least))
    table = {}
    for n in range(1, table_n + 1):
        table[n] = not all(roots_hull_membership(w, n, eta) for w in normalized)
    return PhaseWitness(rho, normalized, least, bound, n_max, eta, table)


# ------------------------------------------------------------------ poles


@dataclass
class PoleReport:
    poles: list  # (eigenvalue, residue) pairs with |residue| > tol
    eigenvalues: np.ndarray
    residues: np.ndarray
    degenerate: bool
    condition: float

    def to_json(self) -> dict:
        return {
            "poles": [{"eigenvalue": _pair(z), "residue": _pair(r)} for z, r in self.poles],
            "eigenvalues": [_pair(z) for z in self.eigenvalues],
            "residues": [_pair(r) for r in self.residues],
            "degenerate": self.degenerate,
            "eigenvector_condition": self.condition,
        }


def generating_function(qr: QuasiRealization, b: int, a: int, z: complex) -> complex:
    """``z^-1 pi D_a (z I - D_b)^-1 D_a tau``."""
    Da, Db = qr.D[a], qr.D[b]
    x = np.linalg.solve(z * np.eye(qr.d) - Db, Da @ qr.tau)
    return complex(qr.pi @ Da @ x) / z


def pole_report(qr: QuasiRealization, b: int, a: int, tol: float = POLE_TOL) -> PoleReport:
    """Residues of ``z^-1 pi D_a (zI - D_b)^-1 D_a tau`` at the nonzero
    eigenvalues of ``D_b``, via spectral projectors.

    With ``D_b = V diag(w) V^-1`` the residue at ``w_k`` is
    ``(pi D_a V)_k (V^-1 D_a tau)_k / w_k`` summed over numerically equal
    eigenvalues.
    """
    Da, Db = qr.D[a], qr.D[b]
    right = Da @ qr.tau
    left = qr.pi @ Da
    scale = max(1.0, np.linalg.norm(Db))
    if np.linalg.norm(right) <= 1e-14 * scale * np.linalg.norm(qr.tau) or np.linalg.norm(left) <= 1e-14 * scale * np.linalg.norm(qr.pi):
        return PoleReport([], np.linalg.eigvals(Db), np.zeros(0, complex), True, float("nan"))
    w, V = np.linalg.eig(Db)
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > MAX_EIGVEC_COND:
        raise JordanStructureError(f"D_b is not diagonalizable within tolerance (cond(V) = {cond:.3g})")
    c = (left @ V) * np.linalg.solve(V, right)
    rho = np.abs(w).max()
    groups: list = []
    for k in np.argsort(-np.abs(w), kind="stable"):
        if abs(w[k]) <= 1e-12 * max(rho, 1e-300):
            continue
        for g in groups:
            if abs(w[g[0]] - w[k]) <= 1e-9 * rho:
                g.append(k)
                break
        else:
            groups.append([k])
    eig = np.array([w[g].mean() for g in groups], complex)
    res = np.array([c[g].sum() / w[g].mean() for g in groups], complex)
    poles = [(complex(z), complex(r)) for z, r in zip(eig, res) if abs(r) > tol]
    return PoleReport(poles, eig, res, False, cond)


def contour_residue(qr: QuasiRealization, b: int, a: int, z0: complex, radius: float, points: int = 4096) -> complex:
    """Residue by the trapezoidal rule on a circle (spectrally accurate)."""
    t = 2 * np.pi * np.arange(points) / points
    zs = z0 + radius * np.exp(1j * t)
    vals = np.array([generating_function(qr, b, a, z) for z in zs])
    return complex(np.mean(vals * radius * np.exp(1j * t)))


# ------------------------------------------------------------ noise bound


@dataclass
class DimensionBound:
    q: float
    s: float
    r: float
    lam: float
    n: int
    applicable: bool
    excluded: bool  # dimension < n excluded at this n
    largest_excluded: int | None  # None only when not applicable at all
    n_star: float  # closed-form threshold, inf when q = 1

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("q", "s", "r", "lam", "n", "applicable", "excluded", "largest_excluded", "n_star")}


def perturbation_applicable(q, s, r, lam, n) -> bool:
    return 2 * (1 - q) * s * math.cosh(4 * r) <= q * lam * abs(math.sin(math.pi / n))


def excludes(q, s, r, lam, n) -> bool:
    return 4 * (1 - q) * s * math.cosh(4 * r) <= q * lam * (math.pi / n) ** 2 / 6


def noise_dimension_bound(np_: NoiseParams, n: int) -> DimensionBound:
    """Evaluate the perturbative classical-dimension bound for the depolarized
    qubit model at phase ``pi / n``.

    ``r`` is taken from ``np_`` (tuned for its own ``alpha``).  The largest
    excluded dimension is the largest ``m`` passing both inequalities,
    located from the closed form ``n* = pi sqrt(q lam / (24 (1-q) s cosh 4r))``.
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    q, s, r, lam = np_.q, np_.s, np_.r, np_.lam
    if q == 0:
        return DimensionBound(q, s, r, lam, n, False, False, None, 0.0)
    n_star = math.pi * math.sqrt(q * lam / (24 * (1 - q) * s * math.cosh(4 * r)))
    ok = lambda m: m >= 2 and perturbation_applicable(q, s, r, lam, m) and excludes(q, s, r, lam, m)
    m = int(math.floor(n_star)) + 1
    while m >= 2 and not ok(m):
        m -= 1
    largest = max(m, 1)  # size 1 is always trivially excluded below
    app = perturbation_applicable(q, s, r, lam, n)
    return DimensionBound(q, s, r, lam, n, app, app and excludes(q, s, r, lam, n), largest, n_star)
