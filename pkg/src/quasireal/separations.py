"""Three-dimensional processes whose only stable cone is the exponential cone
(3 letters) or a power cone (4 letters), with orbit enumeration and the
numerical sandwich ``cl C_min <= K <= C_max`` that pins the cone down.

Symbol 0 is the rank-one reset ``nu m0 mu0^T``; symbols 1 and 2 are the
commuting invertible maps; in the power-cone process symbol 3 flips the sign
of the middle coordinate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cones import ConeOracle, check_map_stability
from .core import Alphabet, QuasiRealization, spectrum, stationary_pair
from .errors import ConstructionError, ParameterError

MAX_DENOMINATOR = 10_000
RATIONAL_TOL = 1e-12
POWER_ALPHA = 1 / math.sqrt(2)


def rational_approximation(x: float, max_denominator: int = MAX_DENOMINATOR, tol: float = RATIONAL_TOL):
    """First continued-fraction convergent ``p/q`` (``q <= max_denominator``)
    within ``tol * max(1, |x|)`` of ``x``, or ``None``.

    This is the floating-point stand-in for "x is rational".
    """
    h0, h1, k0, k1 = 0, 1, 1, 0
    y = float(x)
    for _ in range(64):
        a = math.floor(y)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > max_denominator:
            return None
        if abs(x - h1 / k1) <= tol * max(1.0, abs(x)):
            return h1, k1
        frac = y - a
        if frac == 0:
            return h1, k1
        y = 1.0 / frac
    return None


def looks_rational(x: float, **kw) -> bool:
    return rational_approximation(x, **kw) is not None


# ------------------------------------------------------------------ params


@dataclass(frozen=True)
class ExpConeProcessParams:
    a: float = math.e
    b: float = 0.5
    m0: tuple = (1.0, 1.0, 0.0)
    mu0: tuple = (1.0, -1.0, -1.0)

    def __post_init__(self):
        if not self.a > 1 > self.b > 0:
            raise ParameterError("need a > 1 > b > 0")
        if abs(self.a + self.b - 2) < 1e-12:
            raise ParameterError("need a + b != 2")
        m0, mu0 = np.asarray(self.m0, float), np.asarray(self.mu0, float)
        if abs(m0[1] - 1) > 1e-12 or abs(m0[0] - math.exp(m0[2])) > 1e-12 * max(1, m0[0]):
            raise ParameterError("m0 must be (e^t, 1, t)")
        if abs(mu0[2] + 1) > 1e-12 or abs(mu0[0] - math.exp(-mu0[1] - 1)) > 1e-12 * max(1, mu0[0]):
            raise ParameterError("mu0 must be (e^(-t-1), t, -1)")

    @property
    def log_ratio(self) -> float:
        return math.log(self.a) / math.log(self.b)

    @property
    def commensurate(self) -> bool:
        return looks_rational(self.log_ratio)

    def raw_matrices(self) -> list[np.ndarray]:
        """``D_0, D_1, D_2`` without the normalization ``nu``."""
        la, lb = math.log(self.a), math.log(self.b)
        D1 = np.array([[self.a, 0, 0], [0, 1, 0], [0, la, 1]])
        D2 = np.array([[self.b, 0, 0], [0, 1, 0], [0, lb, 1]])
        D0 = np.outer(self.m0, self.mu0)
        return [D0, D1, D2]


@dataclass(frozen=True)
class PowerConeProcessParams:
    alpha: float = POWER_ALPHA
    a: float = math.e
    b: float = 0.5
    m03: float = 1.0
    mu03: float = 1.0 - POWER_ALPHA

    def __post_init__(self):
        al = self.alpha
        if not 0 < al < 1:
            raise ParameterError("need 0 < alpha < 1")
        if not self.a > 1 > self.b > 0:
            raise ParameterError("need a > 1 > b > 0")
        if self.m03 <= 0 or self.mu03 <= 0:
            raise ParameterError("m03 and mu03 must be positive")
        e = al / (al - 1)
        A, B = self.a ** e, self.b ** e
        for lhs, rhs, name in ((self.a + self.b, 1, "a + b"), (A + B, 1, "a^e + b^e"), (self.a + self.b, A + B, "a + b vs a^e + b^e")):
            if abs(lhs - rhs) < 1e-12:
                raise ParameterError(f"degenerate parameters: {name}")

    @property
    def exponent(self) -> float:
        return self.alpha / (self.alpha - 1)

    @property
    def m0(self) -> np.ndarray:
        return np.array([self.m03 ** ((self.alpha - 1) / self.alpha), 1.0, self.m03])

    @property
    def mu0(self) -> np.ndarray:
        al = self.alpha
        return np.array([al * (self.mu03 / (1 - al)) ** ((al - 1) / al), 1.0, self.mu03])

    @property
    def log_ratio(self) -> float:
        return math.log(self.a) / math.log(self.b)

    @property
    def commensurate(self) -> bool:
        return looks_rational(self.log_ratio) or looks_rational(self.alpha)

    def raw_matrices(self) -> list[np.ndarray]:
        e = self.exponent
        D1 = np.diag([self.a, 1.0, self.a ** e])
        D2 = np.diag([self.b, 1.0, self.b ** e])
        D3 = np.diag([1.0, -1.0, 1.0])
        D0 = np.outer(self.m0, self.mu0)
        return [D0, D1, D2, D3]


# ------------------------------------------------------------ constructors


@dataclass(frozen=True)
class SeparationProcess:
    """A constructed process plus the data needed by the checks."""

    qr: QuasiRealization
    params: object
    nu: float
    cone: ConeOracle
    dual: ConeOracle
    m0: np.ndarray
    mu0: np.ndarray
    generators: tuple = (1, 2)
    flips: tuple = ()

    def second_eigenvalue_modulus(self) -> float:
        return float(abs(spectrum(sum(self.qr.D)).eigenvalues[1]))


def _assemble(raw, labels) -> tuple[QuasiRealization, float]:
    pi, tau, nu = stationary_pair(raw)
    D = [nu * M for M in raw]
    rho = spectrum(sum(D)).spectral_radius
    if abs(rho - 1) > 1e-12:
        raise ConstructionError(f"normalized letter sum has spectral radius {rho}")
    if np.linalg.norm(D[0] @ tau) < 1e-12 * np.linalg.norm(tau):
        raise ConstructionError("reset kills the right fixed point (D0 tau = 0)")
    if np.linalg.norm(pi @ D[0]) < 1e-12 * np.linalg.norm(pi):
        raise ConstructionError("reset kills the left fixed point (pi D0 = 0)")
    return QuasiRealization(pi, D, tau, Alphabet(len(D), labels)), nu


def build_exp_process(p: ExpConeProcessParams | None = None) -> SeparationProcess:
    p = p or ExpConeProcessParams()
    qr, nu = _assemble(p.raw_matrices(), ("0", "1", "2"))
    return SeparationProcess(qr, p, nu, ConeOracle.exp(), ConeOracle.exp_dual(),
                             np.asarray(p.m0, float), np.asarray(p.mu0, float), (1, 2))


def build_power_process(p: PowerConeProcessParams | None = None) -> SeparationProcess:
    p = p or PowerConeProcessParams()
    qr, nu = _assemble(p.raw_matrices(), ("0", "1", "2", "3"))
    return SeparationProcess(qr, p, nu, ConeOracle.power(p.alpha), ConeOracle.power_dual(p.alpha),
                             p.m0, p.mu0, (1, 2), (3,))


def third_coord_scaled(tau: np.ndarray, pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rescale fixed points to ``tau_3 = 1`` and ``pi_3 = -1`` (left as is
    when the third coordinate vanishes)."""
    ts = tau[2] if abs(tau[2]) > 1e-14 * np.abs(tau).max() else 1.0
    ps = -pi[2] if abs(pi[2]) > 1e-14 * np.abs(pi).max() else 1.0
    return tau / ts, pi / ps


# ------------------------------------------------------------------ orbits


@dataclass
class Orbit:
    rays: np.ndarray  # unit 2-norm directions
    labels: np.ndarray  # (s, t, k) exponent triples
    log_scale: np.ndarray  # log of the 2-norm removed from each ray


def _unit(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / n, np.log(n[..., 0])


def orbit(qr: QuasiRealization, start, max_len: int, generators=(1, 2), flips=(), covector: bool = False) -> Orbit:
    """Rays ``D_g1^s D_g2^t F^k start`` for ``s + t + k <= max_len`` (``k`` in {0, 1}).

    The generators commute, so one product per exponent cell suffices.  Each
    cell is reached from a neighbour by one matrix application followed by
    renormalization; the removed norms are accumulated in ``log_scale`` so no
    intermediate value overflows.  With ``covector=True`` the start is a row
    vector and the maps act from the right.
    """
    if max_len < 1:
        raise ParameterError("max_len must be >= 1")
    g1, g2 = (qr.D[g] if not covector else qr.D[g].T for g in generators)
    start = np.asarray(start, float)
    v0, l0 = _unit(start)
    rays, labels, logs = [], [], []
    grid = {(0, 0): (v0, l0)}
    for n in range(max_len + 1):
        for s in range(n, -1, -1):
            t = n - s
            if (s, t) not in grid:
                if s > 0:
                    prev, pl = grid[(s - 1, t)]
                    v, dl = _unit(g1 @ prev)
                else:
                    prev, pl = grid[(s, t - 1)]
                    v, dl = _unit(g2 @ prev)
                grid[(s, t)] = (v, pl + dl)
            v, lg = grid[(s, t)]
            rays.append(v)
            labels.append((s, t, 0))
            logs.append(lg)
    rays, labels, logs = np.array(rays), np.array(labels), np.array(logs)
    for f in flips:
        F = qr.D[f] if not covector else qr.D[f].T
        keep = labels.sum(axis=1) < max_len
        fv, fl = _unit(rays[keep] @ F.T)
        fl = fl + logs[keep]
        lab = labels[keep].copy()
        lab[:, 2] = 1
        rays = np.vstack([rays, fv])
        labels = np.vstack([labels, lab])
        logs = np.concatenate([logs, fl])
    return Orbit(rays, labels, logs)


def exp_orbit_parameter(rays: np.ndarray) -> np.ndarray:
    """``x`` of a ray proportional to ``(e^x, 1, x)``."""
    return rays[:, 2] / rays[:, 1]


def power_orbit_parameter(rays: np.ndarray, m0: np.ndarray) -> np.ndarray:
    """``log x`` of a ray proportional to ``(m01 x, +-1, m03 x^e)``."""
    return np.log(rays[:, 0] / (m0[0] * np.abs(rays[:, 1])))


def max_gap(values: np.ndarray, window: tuple[float, float]) -> float:
    lo, hi = window
    v = np.sort(values[(values >= lo) & (values <= hi)])
    v = np.concatenate([[lo], v, [hi]])
    return float(np.diff(v).max())


# ------------------------------------------------------------------ sandwich


@dataclass
class SandwichReport:
    cmin_pass: bool
    cmax_pass: bool
    worst_slack: float
    worst_dual_slack: float
    density_gap: float
    commensurate: bool
    consistent: bool
    witness: dict | None = None
    counts: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "cmin_pass": self.cmin_pass,
            "cmax_pass": self.cmax_pass,
            "worst_slack": self.worst_slack,
            "worst_dual_slack": self.worst_dual_slack,
            "density_gap": self.density_gap,
            "commensurate": self.commensurate,
            "consistent": self.consistent,
            "witness": self.witness,
            "counts": self.counts,
        }


def _word_images(qr: QuasiRealization, max_len: int, left: bool):
    """Yield ``(length, array of unit images)`` of ``D^(u) tau`` (or ``pi D^(u)``).

    Images that cancel to below ``1e-12`` of the map norm are exact zeros up to
    roundoff (e.g. ``D_0 D_3 D_0`` in the power process) and are returned as
    zero rows rather than renormalized noise.
    """
    Ds = np.stack(qr.D)
    scale = np.array([np.linalg.norm(M, 2) for M in qr.D])
    cur = (qr.pi if left else qr.tau)[None, :]
    cur = cur / np.linalg.norm(cur)
    yield 0, cur
    for n in range(1, max_len + 1):
        if left:
            nxt = np.einsum("nd,sde->nse", cur, Ds)
            ref = np.broadcast_to(scale[None, :], nxt.shape[:2])
        else:
            # new word = sigma + u, image D_sigma (D^(u) tau)
            nxt = np.einsum("sde,ne->snd", Ds, cur)
            ref = np.broadcast_to(scale[:, None], nxt.shape[:2])
        nxt = nxt.reshape(-1, qr.d)
        norms = np.linalg.norm(nxt, axis=1)
        dead = norms <= 1e-12 * ref.reshape(-1)
        norms[dead] = 1.0
        cur = nxt / norms[:, None]
        cur[dead] = 0.0
        yield n, cur


def _margins(oracle: ConeOracle, imgs: np.ndarray) -> np.ndarray:
    live = np.any(imgs != 0, axis=1)
    out = np.full(len(imgs), np.inf)
    if live.any():
        out[live] = oracle.margin(imgs[live])
    return out


def verify_cone_sandwich(
    proc: SeparationProcess,
    cone: ConeOracle | None = None,
    dual: ConeOracle | None = None,
    max_len: int = 12,
    density_window: tuple[float, float] = (-15.0, 15.0),
    orbit_budget: int = 200,
    gap_threshold: float = 1.0,
) -> SandwichReport:
    """Check every ``D^(u) tau`` (``|u| <= max_len``) lies in ``cone`` and
    every ``pi D^(u)`` in ``dual``, and measure how densely the reset orbit
    covers the boundary curve of the cone."""
    cone = cone or proc.cone
    dual = dual or proc.dual
    qr = proc.qr
    worst, worst_dual, witness = np.inf, np.inf, None
    n_min = n_max = 0
    for n, imgs in _word_images(qr, max_len, left=False):
        mg = _margins(cone, imgs)
        k = int(np.argmin(mg))
        n_min += len(imgs)
        if mg[k] < worst:
            worst = float(mg[k])
            if worst < -cone.eta and witness is None:
                idx = np.unravel_index(k, (qr.m,) * n) if n else ()
                witness = {"side": "C_min", "word": [int(i) for i in idx], "vector": imgs[k].tolist()}
    for n, imgs in _word_images(qr, max_len, left=True):
        mg = _margins(dual, imgs)
        k = int(np.argmin(mg))
        n_max += len(imgs)
        if mg[k] < worst_dual:
            worst_dual = float(mg[k])
            if worst_dual < -dual.eta and witness is None:
                idx = np.unravel_index(k, (qr.m,) * n) if n else ()
                witness = {"side": "C_max*", "word": [int(i) for i in idx], "vector": imgs[k].tolist()}
    orb = orbit(qr, proc.m0, orbit_budget, proc.generators)
    if proc.cone.kind == "exp":
        params = exp_orbit_parameter(orb.rays)
    else:
        params = power_orbit_parameter(orb.rays, proc.m0)
    gap = max_gap(params, density_window)
    commensurate = bool(proc.params.commensurate)
    cmin, cmax = worst >= -cone.eta, worst_dual >= -dual.eta
    consistent = cmin and cmax and gap < gap_threshold and not commensurate
    return SandwichReport(cmin, cmax, worst, worst_dual, gap, commensurate, consistent, witness,
                          {"cmin_generators": n_min, "cmax_generators": n_max, "orbit_rays": len(orb.rays)})


def stability_report(proc: SeparationProcess, samples: int = 10_000, seed=0):
    return check_map_stability(proc.qr.D, proc.cone, proc.dual, samples, seed)
