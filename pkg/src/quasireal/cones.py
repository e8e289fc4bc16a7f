"""Membership oracles for closed convex cones in R^3 (and PSD / finitely
generated cones) with a relative tolerance.

Every oracle works through a *margin*: the input is rescaled to unit max-norm
and a signed quantity is computed that is ``>= 0`` exactly on the cone.  A point
is accepted when its margin is ``>= -eta``.  All exponentials are evaluated in
log form so that rays like ``(e^x, 1, x)`` with ``|x|`` in the hundreds do not
overflow.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from .errors import ParameterError

ETA_ANALYTIC = 1e-9
ETA_GENERATED = 1e-6
_EXP_CAP = 700.0


def _rows(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    scale = np.abs(x).max(axis=1, keepdims=True)
    scale[scale == 0] = 1.0
    return x / scale, single


def _out(v: np.ndarray, single: bool):
    return v[0] if single else v


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"power-cone exponent must lie in (0, 1), got {alpha}")
    return alpha


def exp_margin(x):
    """Signed margin for K_exp = cl{x : x2 > 0, x1 >= x2 exp(x3/x2)}."""
    x, single = _rows(x)
    x1, x2, x3 = x.T
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pos = x2 > 0
        lin = np.where(pos, x1 - x2 * np.exp(np.minimum(x3 / x2, _EXP_CAP)), -np.inf)
        log = np.where(pos & (x1 > 0), x2 * np.log(x1 / x2) - x3, -np.inf)
    face = np.minimum(np.minimum(x1, -x3), -np.abs(x2))
    m = np.maximum(np.maximum(lin, log), face)
    return _out(m, single)


def exp_dual_margin(y):
    """Signed margin for K_exp^* = cl{y : y3 < 0, y1 >= -y3 exp(y2/y3 - 1)}."""
    y, single = _rows(y)
    y1, y2, y3 = y.T
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        neg = y3 < 0
        lin = np.where(neg, y1 + y3 * np.exp(np.minimum(y2 / y3 - 1.0, _EXP_CAP)), -np.inf)
        log = np.where(neg & (y1 > 0), -y3 * np.log(y1 / -y3) + y2 - y3, -np.inf)
    face = np.minimum(np.minimum(y1, y2), -np.abs(y3))
    m = np.maximum(np.maximum(lin, log), face)
    return _out(m, single)


def power_margin(x, alpha: float):
    """Signed margin for K_alpha = {x1, x3 >= 0, x1^alpha x3^(1-alpha) >= |x2|}."""
    alpha = _check_alpha(alpha)
    x, single = _rows(x)
    x1, x2, x3 = x.T
    with np.errstate(divide="ignore", invalid="ignore"):
        geo = np.where(
            (x1 > 0) & (x3 > 0),
            np.exp(alpha * np.log(np.where(x1 > 0, x1, 1.0)) + (1 - alpha) * np.log(np.where(x3 > 0, x3, 1.0))),
            0.0,
        )
    m = np.minimum(np.minimum(x1, x3), geo - np.abs(x2))
    return _out(m, single)


def power_dual_matrix(alpha: float) -> np.ndarray:
    """``B_alpha`` with ``K_alpha^* = B_alpha K_alpha``."""
    alpha = _check_alpha(alpha)
    return np.diag([alpha, 1.0, 1.0 - alpha])


def power_dual_margin(y, alpha: float):
    alpha = _check_alpha(alpha)
    y = np.asarray(y, float)
    return power_margin(y / np.array([alpha, 1.0, 1.0 - alpha]), alpha)


def in_exp_cone(x, eta: float = ETA_ANALYTIC):
    return exp_margin(x) >= -eta


def in_exp_dual(y, eta: float = ETA_ANALYTIC):
    return exp_dual_margin(y) >= -eta


def in_power_cone(x, alpha: float, eta: float = ETA_ANALYTIC):
    return power_margin(x, alpha) >= -eta


def in_power_dual(y, alpha: float, eta: float = ETA_ANALYTIC):
    return power_dual_margin(y, alpha) >= -eta


def psd_margin(x, d: int):
    """Smallest eigenvalue of the symmetrized ``d x d`` matrix, relative to its max entry."""
    x, single = _rows(x)
    X = x.reshape(-1, d, d)
    X = (X + np.transpose(X, (0, 2, 1))) / 2
    return _out(np.linalg.eigvalsh(X)[:, 0], single)


def generated_margin(x, generators):
    """Minus the relative NNLS residual ``min_{c>=0} |x - G c| / |x|``."""
    G = np.asarray(generators, float)
    if G.ndim != 2 or G.shape[0] == 0:
        raise ParameterError("need a non-empty list of generators")
    G = G / np.linalg.norm(G, axis=1, keepdims=True).clip(1e-300)
    x = np.asarray(x, float)
    single = x.ndim == 1
    out = []
    for row in np.atleast_2d(x):
        n = np.linalg.norm(row)
        if n == 0:
            out.append(0.0)
            continue
        _, res = nnls(G.T, row / n, maxiter=50 * G.shape[0])
        out.append(-res)
    out = np.array(out)
    return _out(out, single)


def in_generated_cone(x, generators, eta: float = ETA_GENERATED):
    return generated_margin(x, generators) >= -eta


# --------------------------------------------------------------- samplers


def _normalize_log(logs: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Rows ``sign * exp(log)`` scaled to unit max-norm without overflow."""
    top = logs.max(axis=1, keepdims=True)
    return signs * np.exp(logs - top)


def exp_boundary(xs) -> np.ndarray:
    """Unit-max-norm rays of ``(e^x, 1, x)``."""
    xs = np.asarray(xs, float)
    with np.errstate(divide="ignore"):
        logs = np.stack([xs, np.zeros_like(xs), np.log(np.abs(xs))], axis=1)
    return _normalize_log(logs, np.stack([np.ones_like(xs), np.ones_like(xs), np.sign(xs)], axis=1))


def exp_dual_boundary(xs) -> np.ndarray:
    """Unit-max-norm rays of ``(e^{-x-1}, x, -1)``."""
    xs = np.asarray(xs, float)
    with np.errstate(divide="ignore"):
        logs = np.stack([-xs - 1, np.log(np.abs(xs)), np.zeros_like(xs)], axis=1)
    return _normalize_log(logs, np.stack([np.ones_like(xs), np.sign(xs), -np.ones_like(xs)], axis=1))


def power_boundary(logt, alpha: float, sign=1.0) -> np.ndarray:
    """Unit-max-norm rays of ``(t^((alpha-1)/alpha), +-1, t)`` with ``t = exp(logt)``."""
    alpha = _check_alpha(alpha)
    logt = np.asarray(logt, float)
    logs = np.stack([logt * (alpha - 1) / alpha, np.zeros_like(logt), logt], axis=1)
    signs = np.ones_like(logs)
    signs[:, 1] = sign
    return _normalize_log(logs, signs)


@dataclass(frozen=True)
class ConeOracle:
    """Membership predicate for one closed convex cone.

    ``kind`` is one of ``exp``, ``exp_dual``, ``power``, ``power_dual``,
    ``psd`` or ``generated``.
    """

    kind: str
    alpha: float | None = None
    d: int | None = None
    generators: np.ndarray | None = field(default=None, repr=False)
    eta: float | None = None

    def __post_init__(self):
        if self.kind not in ("exp", "exp_dual", "power", "power_dual", "psd", "generated"):
            raise ParameterError(f"unknown cone kind {self.kind!r}")
        if self.kind.startswith("power"):
            _check_alpha(self.alpha)
        if self.kind == "psd" and not self.d:
            raise ParameterError("psd cone needs its matrix size d")
        if self.kind == "generated":
            G = np.array(self.generators, float)
            if G.ndim != 2 or len(G) == 0:
                raise ParameterError("generated cone needs a non-empty generator list")
            G.setflags(write=False)
            object.__setattr__(self, "generators", G)
        if self.eta is None:
            object.__setattr__(self, "eta", ETA_GENERATED if self.kind == "generated" else ETA_ANALYTIC)

    @classmethod
    def exp(cls, eta=None):
        return cls("exp", eta=eta)

    @classmethod
    def exp_dual(cls, eta=None):
        return cls("exp_dual", eta=eta)

    @classmethod
    def power(cls, alpha, eta=None):
        return cls("power", alpha=alpha, eta=eta)

    @classmethod
    def power_dual(cls, alpha, eta=None):
        return cls("power_dual", alpha=alpha, eta=eta)

    @classmethod
    def psd(cls, d, eta=None):
        return cls("psd", d=d, eta=eta)

    @classmethod
    def generated(cls, generators, eta=None):
        return cls("generated", generators=generators, eta=eta)

    @property
    def dim(self) -> int:
        if self.kind == "psd":
            return self.d * self.d
        if self.kind == "generated":
            return self.generators.shape[1]
        return 3

    def dual(self) -> "ConeOracle":
        pairs = {"exp": "exp_dual", "exp_dual": "exp", "power": "power_dual", "power_dual": "power"}
        if self.kind in pairs:
            return ConeOracle(pairs[self.kind], alpha=self.alpha, eta=self.eta)
        if self.kind == "psd":
            return self
        raise ParameterError("dual of a generated cone is not available as an oracle")

    def margin(self, x):
        if self.kind == "exp":
            return exp_margin(x)
        if self.kind == "exp_dual":
            return exp_dual_margin(x)
        if self.kind == "power":
            return power_margin(x, self.alpha)
        if self.kind == "power_dual":
            return power_dual_margin(x, self.alpha)
        if self.kind == "psd":
            return psd_margin(x, self.d)
        return generated_margin(x, self.generators)

    def contains(self, x, eta: float | None = None):
        return self.margin(x) >= -(self.eta if eta is None else eta)

    __contains__ = contains

    def sample(self, n: int, rng: np.random.Generator, spread: float = 30.0) -> np.ndarray:
        """Boundary-biased members: half on the boundary curve, a few extreme
        rays of the closure, the rest random conic combinations."""
        nb = max(n // 2, 1)
        if self.kind == "exp":
            bd = exp_boundary(rng.uniform(-spread, spread, nb))
            extra = np.array([[1.0, 0, 0], [0, 0, -1.0], [1.0, 0, -1.0]])
        elif self.kind == "exp_dual":
            bd = exp_dual_boundary(rng.uniform(-spread, spread, nb))
            extra = np.array([[1.0, 0, 0], [0, 1.0, 0], [1.0, 1.0, 0]])
        elif self.kind in ("power", "power_dual"):
            bd = power_boundary(rng.uniform(-spread, spread, nb), self.alpha, rng.choice([-1.0, 1.0], (nb, 1)).ravel())
            extra = np.array([[1.0, 0, 0], [0, 0, 1.0]])
            if self.kind == "power_dual":
                B = power_dual_matrix(self.alpha)
                bd, extra = bd @ B, extra @ B
        elif self.kind == "psd":
            v = rng.standard_normal((nb, self.d))
            bd = np.einsum("ni,nj->nij", v, v).reshape(nb, -1)
            extra = np.eye(self.d).reshape(1, -1)
        else:
            idx = rng.integers(0, len(self.generators), nb)
            bd = self.generators[idx]
            extra = self.generators[:1]
        base = np.vstack([bd, extra])
        k = n - len(base)
        if k > 0:
            w = rng.exponential(size=(k, 3))
            pick = rng.integers(0, len(base), (k, 3))
            unit = base / np.abs(base).max(axis=1, keepdims=True)
            mix = np.einsum("kj,kjd->kd", w, unit[pick])
            base = np.vstack([base, mix])
        return base[:n]


@dataclass
class StabilityReport:
    passed: bool
    worst_slack: float
    worst_dual_slack: float
    witness: dict | None
    samples: int

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "worst_slack": self.worst_slack,
            "worst_dual_slack": self.worst_dual_slack,
            "witness": self.witness,
            "samples": self.samples,
        }


def check_map_stability(
    D: Sequence[np.ndarray],
    cone: ConeOracle,
    dual: ConeOracle,
    samples: int = 10_000,
    seed=0,
) -> StabilityReport:
    """Sampled test of ``D_u(C) <= C`` and ``C^* D_u <= C^*`` for every symbol matrix."""
    D = [np.asarray(M, float) for M in D]
    if any(M.shape != (cone.dim, cone.dim) for M in D) or dual.dim != cone.dim:
        raise ParameterError("cone dimension does not match the maps")
    rng = np.random.default_rng(seed)
    X = cone.sample(samples, rng)
    Y = dual.sample(samples, rng)
    worst, worst_dual, witness = np.inf, np.inf, None
    for u, M in enumerate(D):
        img = X @ M.T
        mg = cone.margin(img)
        k = int(np.argmin(mg))
        if mg[k] < worst:
            worst = float(mg[k])
            if mg[k] < -cone.eta:
                witness = {"symbol": u, "side": "cone", "point": X[k].tolist(), "image": img[k].tolist()}
        img = Y @ M
        mg = dual.margin(img)
        k = int(np.argmin(mg))
        if mg[k] < worst_dual:
            worst_dual = float(mg[k])
            if mg[k] < -dual.eta and witness is None:
                witness = {"symbol": u, "side": "dual", "point": Y[k].tolist(), "image": img[k].tolist()}
    passed = worst >= -cone.eta and worst_dual >= -dual.eta
    return StabilityReport(passed, worst, worst_dual, None if passed else witness, len(X))
