"""Information measures: KL divergence, per-x3 divergence profile, the
chi-square covertness distance, conditional mutual information, and capacity
of the receiver sub-channel via Blahut-Arimoto.

All log-based quantities take a ``unit`` argument, either ``"bits"`` or
``"nats"``.  The library default is bits: it is the unit that reproduces the
reference capacity value 0.197534 on the shipped example channel (natural log
gives 0.136920).  The chi-square distance is unit-free.

The chi-square here is the Pearson divergence between the normalized one-user
mixture and the all-off warden row,

    chi2(rho1, rho2, x3) = sum_z (mix(z) - G00(z))^2 / G00(z),
    mix = (rho1*G10 + rho2*G01) / (rho1 + rho2),

the small-signal limit that controls the warden divergence: for input
densities rho*alpha -> 0 the exact mixture KL equals
(alpha*(rho1+rho2))^2/2 * chi2 up to a (1 + o(1)) factor (in nats).
``mixture_kl`` evaluates the exact KL so that convergence can be checked.
"""
from __future__ import annotations

import math

import numpy as np

from .channel import Dmc, SIDE_Y, SIDE_Z

DEFAULT_UNIT = "bits"
_LN2 = math.log(2.0)


def unit_factor(unit: str) -> float:
    """Divisor converting a natural-log quantity to ``unit``."""
    if unit == "nats":
        return 1.0
    if unit == "bits":
        return _LN2
    raise ValueError(f"unit must be 'bits' or 'nats', got {unit!r}")


def _check_distribution(name: str, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} is not a probability distribution")
    return p


def kl_div(p, q, unit: str = DEFAULT_UNIT) -> float:
    """KL divergence sum p log(p/q), with 0*log 0 = 0.

    Returns +inf when p puts mass where q has none.
    """
    p = _check_distribution("p", p)
    q = _check_distribution("q", q)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    val = float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
    return val / unit_factor(unit)


class DivergenceProfile:
    """Per-x3 divergences of the two covert users, receiver and warden side.

    Arrays indexed by x3: ``d_y1[x3]`` = KL of the (1,0,x3) receiver row
    against the (0,0,x3) row, etc.; ``d_zy`` entries are the exact differences
    d_z - d_y (the warden's advantage, whose positive part prices the key).
    """

    def __init__(self, d_y1, d_y2, d_z1, d_z2, unit: str):
        self.d_y1 = np.asarray(d_y1, dtype=float)
        self.d_y2 = np.asarray(d_y2, dtype=float)
        self.d_z1 = np.asarray(d_z1, dtype=float)
        self.d_z2 = np.asarray(d_z2, dtype=float)
        self.d_zy1 = self.d_z1 - self.d_y1
        self.d_zy2 = self.d_z2 - self.d_y2
        self.unit = unit

    def d_y(self, user: int) -> np.ndarray:
        return self.d_y1 if user == 1 else self.d_y2

    def d_zy(self, user: int) -> np.ndarray:
        return self.d_zy1 if user == 1 else self.d_zy2

    def rows(self):
        for x3 in range(len(self.d_y1)):
            yield (x3, self.d_y1[x3], self.d_y2[x3], self.d_z1[x3],
                   self.d_z2[x3], self.d_zy1[x3], self.d_zy2[x3])


def divergence_profile(d: Dmc, unit: str = DEFAULT_UNIT) -> DivergenceProfile:
    """All six one-user divergences for every x3."""
    vals = {k: [] for k in ("y1", "y2", "z1", "z2")}
    for x3 in range(d.x3_size):
        off_y = d.row(SIDE_Y, 0, 0, x3)
        off_z = d.row(SIDE_Z, 0, 0, x3)
        vals["y1"].append(kl_div(d.row(SIDE_Y, 1, 0, x3), off_y, unit))
        vals["y2"].append(kl_div(d.row(SIDE_Y, 0, 1, x3), off_y, unit))
        vals["z1"].append(kl_div(d.row(SIDE_Z, 1, 0, x3), off_z, unit))
        vals["z2"].append(kl_div(d.row(SIDE_Z, 0, 1, x3), off_z, unit))
    return DivergenceProfile(vals["y1"], vals["y2"], vals["z1"], vals["z2"], unit)


def chi_square(d: Dmc, rho1: float, rho2: float, x3: int) -> float:
    """Covertness chi-square of the (rho1:rho2) mixture at non-covert symbol x3.

    Depends on (rho1, rho2) only through the ratio.  Returns +inf on an
    absolute-continuity violation at x3.
    """
    if rho1 < 0 or rho2 < 0:
        raise ValueError("rho1, rho2 must be non-negative")
    tot = rho1 + rho2
    if tot == 0:
        raise ValueError("rho1 + rho2 = 0: mixture weight undefined "
                         "(degenerate phases contribute zero by convention)")
    if x3 in d.ac_violations:
        return math.inf
    q00 = d.row(SIDE_Z, 0, 0, x3)
    mix = (rho1 * d.row(SIDE_Z, 1, 0, x3) + rho2 * d.row(SIDE_Z, 0, 1, x3)) / tot
    support = q00 > 0
    # zero-denominator terms with zero numerators contribute nothing
    diff = mix[support] - q00[support]
    return float(np.sum(diff * diff / q00[support]))


def mutual_info_x3(d: Dmc, p_x3, unit: str = DEFAULT_UNIT) -> float:
    """I(X3; Y) through the receiver rows with both covert users silent."""
    p = _check_distribution("p_x3", p_x3)
    if p.shape != (d.x3_size,):
        raise ValueError(f"p_x3 must have length {d.x3_size}")
    sub = np.vstack([d.row(SIDE_Y, 0, 0, x3) for x3 in range(d.x3_size)])
    py = p @ sub
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.where(sub > 0, np.log(np.where(sub > 0, sub, 1.0) / py[None, :]), 0.0)
    val = float(p @ np.sum(sub * lg, axis=1))
    return max(0.0, val) / unit_factor(unit)


def capacity_x3(d: Dmc, tol: float = 1e-10, max_iter: int = 10_000,
                unit: str = DEFAULT_UNIT) -> tuple[float, np.ndarray]:
    """Capacity of the x3 -> Y sub-channel by alternating maximization.

    Stops when the standard upper/lower capacity gap drops below ``tol``
    (tol is in the requested unit).  Deterministic uniform start.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sub = np.vstack([d.row(SIDE_Y, 0, 0, x3) for x3 in range(d.x3_size)])
    m = d.x3_size
    r = np.full(m, 1.0 / m)
    fac = unit_factor(unit)
    lower = 0.0
    for _ in range(max_iter):
        py = r @ sub
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(sub > 0, np.log(np.where(sub > 0, sub, 1.0) / py[None, :]), 0.0)
        dkl = np.sum(sub * lg, axis=1)           # D(row_x || output marginal)
        upper = float(dkl.max()) / fac
        lower = float(r @ dkl) / fac
        if upper - lower < tol:
            break
        w = r * np.exp(dkl - dkl.max())
        r = w / w.sum()
    return max(0.0, lower), r


def mixture_kl(d: Dmc, rho1: float, rho2: float, x3: int, alpha: float,
               unit: str = DEFAULT_UNIT) -> float:
    """Exact KL of the two-user Bernoulli(rho*alpha) warden mixture vs all-off.

    The mixture includes the (1,1) term of order alpha^2; support violations
    give +inf.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if rho1 * alpha > 1 or rho2 * alpha > 1:
        raise ValueError("rho*alpha must be a probability (<= 1)")
    if alpha == 0 or (rho1 == 0 and rho2 == 0):
        return 0.0
    a1, a2 = rho1 * alpha, rho2 * alpha
    w = ((1 - a1) * (1 - a2) * d.row(SIDE_Z, 0, 0, x3)
         + a1 * (1 - a2) * d.row(SIDE_Z, 1, 0, x3)
         + (1 - a1) * a2 * d.row(SIDE_Z, 0, 1, x3)
         + a1 * a2 * d.row(SIDE_Z, 1, 1, x3))
    return kl_div(w, d.row(SIDE_Z, 0, 0, x3), unit)
