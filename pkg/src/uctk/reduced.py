"""Invariant-line reduction to scalar Buckley-Leverett flow.

For the Corey quadratic model with identity diffusion, the three segments
joining each vertex of the saturation triangle to the opposite point of
the umbilic star ([G,D], [W,E], [O,B]) are invariant lines of the flow.
Along a line the system reduces to a scalar conservation law with flux

    f(s, nu) = s**2 / (s**2 + nu*(1-s)**2),

where ``s`` is the effective saturation (sum of the two non-vertex phase
saturations) and ``nu = mu_alphabeta / mu_gamma`` the viscosity ratio.
This module provides the embedding/projection between effective and
triangle coordinates, the on-line characteristic speeds, the closed-form
distinguished states (umbilic, fast double contact pair, extensions of
the opposite-edge point and of the umbilic point, inflection), and the
effective shock-partner solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corey import FluidParams, flux
from .errors import NoRealRoot, NotOnLine, OutOfRange, RootOutOfRange

__all__ = [
    "InvariantLine",
    "DistinguishedStates",
    "lines",
    "effective_flux",
    "effective_sigma",
    "lambda_ab",
    "char_speeds",
    "distinguished_states",
    "effective_shock_partner",
    "mixed_contact_inside",
    "solve_quadratic",
]

VERTICES = ("G", "W", "O")

# phase roles per vertex: (alpha, beta, gamma) with gamma the vertex phase
_ROLES = {
    "G": ("w", "o", "g"),
    "W": ("o", "g", "w"),
    "O": ("w", "g", "o"),
}


@dataclass(frozen=True)
class InvariantLine:
    """One invariant segment, parametrized by effective saturation.

    ``embed(0)`` is the vertex, ``embed(1)`` the endpoint on the opposite
    edge (D, E, or B depending on the vertex).
    """

    vertex: str
    p: FluidParams

    def __post_init__(self):
        if self.vertex not in VERTICES:
            raise OutOfRange(f"vertex must be one of {VERTICES}, got {self.vertex!r}")

    @property
    def _mu(self) -> dict[str, float]:
        return {"w": self.p.mu_w, "o": self.p.mu_o, "g": self.p.mu_g}

    @property
    def mu_ab(self) -> float:
        a, b, _ = _ROLES[self.vertex]
        mu = self._mu
        return mu[a] + mu[b]

    @property
    def mu_gamma(self) -> float:
        return self._mu[_ROLES[self.vertex][2]]

    @property
    def nu(self) -> float:
        return self.mu_ab / self.mu_gamma

    @property
    def vertex_state(self) -> np.ndarray:
        return {
            "G": np.array([0.0, 0.0]),
            "W": np.array([1.0, 0.0]),
            "O": np.array([0.0, 1.0]),
        }[self.vertex]

    @property
    def end_state(self) -> np.ndarray:
        """Intersection with the edge opposite the vertex (s = 1)."""
        mu = self._mu
        if self.vertex == "G":
            return np.array([mu["w"], mu["o"]]) / self.mu_ab
        if self.vertex == "W":
            return np.array([0.0, mu["o"] / self.mu_ab])
        return np.array([mu["w"] / self.mu_ab, 0.0])

    @property
    def tangent(self) -> np.ndarray:
        d = self.end_state - self.vertex_state
        return d / math.hypot(d[0], d[1])

    @property
    def normal(self) -> np.ndarray:
        t = self.tangent
        return np.array([-t[1], t[0]])

    def embed(self, s) -> np.ndarray:
        """Map effective saturation(s) to triangle coordinates."""
        s = np.asarray(s, dtype=float)
        v = self.vertex_state
        d = self.end_state - v
        return v + np.multiply.outer(s, d) if s.ndim else v + s * d

    def project(self, U, tol: float = 1e-9) -> float:
        """Effective saturation of a state lying on the line.

        Raises NotOnLine when the perpendicular distance exceeds ``tol``
        (absolute, in saturation units).
        """
        U = np.asarray(U, dtype=float)
        v = self.vertex_state
        d = self.end_state - v
        s = float(np.dot(U - v, d) / np.dot(d, d))
        perp = U - v - s * d
        if math.hypot(perp[0], perp[1]) > tol:
            raise NotOnLine(
                f"state {U} is {math.hypot(perp[0], perp[1]):.3e} away from line {self.vertex}"
            )
        return s

    def distance(self, U) -> float:
        """Perpendicular distance from a state to the (infinite) line."""
        U = np.asarray(U, dtype=float)
        rel = U - self.vertex_state
        return float(abs(rel[0] * self.normal[0] + rel[1] * self.normal[1]))

    def pair_flux_sum(self, U) -> float:
        """Sum of the two non-vertex fractional flows at a state.

        On the line this equals ``effective_flux(project(U), nu)``.
        """
        f = flux(U, self.p)
        if self.vertex == "G":
            return float(f[0] + f[1])
        if self.vertex == "W":
            return float(1.0 - f[0])
        return float(1.0 - f[1])


def lines(p: FluidParams) -> dict[str, InvariantLine]:
    return {v: InvariantLine(v, p) for v in VERTICES}


def effective_flux(s, nu: float):
    """Scalar Buckley-Leverett flux ``s**2 / (s**2 + nu*(1-s)**2)``."""
    s = np.asarray(s, dtype=float)
    out = s * s / (s * s + nu * (1.0 - s) ** 2)
    return float(out) if out.ndim == 0 else out


def _denom(s, nu: float):
    return s * s + nu * (1.0 - s) ** 2


def effective_sigma(s_m, s_n, nu: float):
    """Shock speed between two on-line states in effective coordinates.

    Algebraically identical to the secant slope of the effective flux but
    free of 0/0: at ``s_m == s_n`` it returns the characteristic tangent
    ``f'(s)``.
    """
    s_m = np.asarray(s_m, dtype=float)
    s_n = np.asarray(s_n, dtype=float)
    out = nu * (s_m + s_n - 2.0 * s_m * s_n) / (_denom(s_m, nu) * _denom(s_n, nu))
    return float(out) if out.ndim == 0 else out


def lambda_ab(s, line: InvariantLine):
    """On-line characteristic speeds ``(lam_a, lam_b)``.

    ``lam_a`` belongs to the transverse family, ``lam_b = f'(s)`` to the
    line-tangent family; they swap slow/fast roles at the umbilic point.
    """
    s = np.asarray(s, dtype=float)
    A = _denom(s, line.nu)
    lam_a = 2.0 * s / A
    lam_b = 2.0 * line.nu * s * (1.0 - s) / (A * A)
    if lam_a.ndim == 0:
        return float(lam_a), float(lam_b)
    return lam_a, lam_b


def char_speeds(s, line: InvariantLine):
    """Slow and fast characteristic speeds ``(lam_s, lam_f)`` on the line."""
    lam_a, lam_b = lambda_ab(s, line)
    return np.minimum(lam_a, lam_b), np.maximum(lam_a, lam_b)


def solve_quadratic(a: float, b: float, c: float, tol: float = 1e-14):
    """Real roots of ``a x**2 + b x + c = 0``, cancellation-safe, ascending.

    Returns a tuple of 0, 1, or 2 roots; a near-zero leading coefficient
    degrades gracefully to the linear solution.
    """
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0.0:
        return ()
    if abs(a) <= tol * scale:
        if abs(b) <= tol * scale:
            return ()
        return (-c / b,)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        if disc < -tol * max(b * b, abs(4.0 * a * c)):
            return ()
        disc = 0.0
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b if b != 0.0 else 1.0))
    if q == 0.0:
        return (0.0, 0.0) if c == 0.0 else (-b / (2.0 * a),)
    r1 = q / a
    r2 = c / q
    return (r1, r2) if r1 <= r2 else (r2, r1)


@dataclass(frozen=True)
class DistinguishedStates:
    """Closed-form special states of one invariant line.

    The fast double-contact pair exists only for viscosity ratios in
    (1, 8]; the starred fast extension only above 8.
    """

    s_umbilic: float
    s_contact_minus: Optional[float]  # double-contact state below the umbilic
    s_contact_plus: Optional[float]  # double-contact state above the umbilic
    s_ext_fast: float  # fast extension of the opposite-edge point
    s_ext_slow: float  # slow extension of the opposite-edge point
    s_umbilic_ext: float  # extension of the umbilic point (always 1/2)
    s_inflection: float
    s_ext_fast_star: Optional[float]  # fast right-extension of the edge point, nu > 8

    def as_dict(self) -> dict:
        return {
            "s_umbilic": self.s_umbilic,
            "s_contact_minus": self.s_contact_minus,
            "s_contact_plus": self.s_contact_plus,
            "s_ext_fast": self.s_ext_fast,
            "s_ext_slow": self.s_ext_slow,
            "s_umbilic_ext": self.s_umbilic_ext,
            "s_inflection": self.s_inflection,
            "s_ext_fast_star": self.s_ext_fast_star,
        }


def _inflection_root(s_u: float) -> float:
    """Unique root of ``2 s**3 - 3 s**2 + s_u`` in [0, 1].

    Newton from 0.5 with a bisection fallback; the cubic is monotone
    decreasing on [0, 1] so the bracket is guaranteed.
    """

    def poly(s):
        return (2.0 * s - 3.0) * s * s + s_u

    s = 0.5
    for _ in range(60):
        f = poly(s)
        df = 6.0 * s * (s - 1.0)
        if df == 0.0:
            break
        step = f / df
        s_new = s - step
        if not 0.0 <= s_new <= 1.0:
            break
        if abs(step) < 1e-15:
            return s_new
        s = s_new
    lo, hi = 0.0, 1.0  # poly(0) = s_u >= 0, poly(1) = s_u - 1 <= 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if poly(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi)


def distinguished_states(line: InvariantLine) -> DistinguishedStates:
    nu = line.nu
    s_u = nu / (1.0 + nu)
    if 1.0 < nu <= 8.0:
        s_cm = 0.5 * math.sqrt(2.0 * nu / (nu + 1.0))
        s_cp = (nu + math.sqrt(2.0 * nu * (nu + 1.0))) / (2.0 * (nu + 2.0))
    else:
        s_cm = s_cp = None
    s_b2 = 1.0 - 1.0 / math.sqrt(nu + 1.0)
    s_b1 = nu / (2.0 + nu)
    if nu > 8.0:
        s_b2s = (3.0 * nu + math.sqrt(nu * (nu - 8.0))) / (4.0 * (nu + 1.0))
    else:
        s_b2s = None
    return DistinguishedStates(
        s_umbilic=s_u,
        s_contact_minus=s_cm,
        s_contact_plus=s_cp,
        s_ext_fast=s_b2,
        s_ext_slow=s_b1,
        s_umbilic_ext=0.5,
        s_inflection=_inflection_root(s_u),
        s_ext_fast_star=s_b2s,
    )


def effective_shock_partner(
    s_known: float, sigma: float, nu: float, which_root: str = "lower"
) -> float:
    """On-line Hugoniot partner of ``s_known`` at shock speed ``sigma``.

    The jump condition in effective coordinates is quadratic in the
    unknown saturation; ``which_root`` selects the smaller or larger root
    explicitly (the two roots are both genuine partners and silent
    selection invites sign bugs downstream).
    """
    if which_root not in ("lower", "upper"):
        raise OutOfRange(f"which_root must be 'lower' or 'upper', got {which_root!r}")
    A_k = _denom(s_known, nu)
    a = (sigma / nu) * A_k * (1.0 + nu)
    b = -2.0 * sigma * A_k - (1.0 - 2.0 * s_known)
    c = sigma * A_k - s_known
    roots = solve_quadratic(a, b, c)
    if not roots:
        raise NoRealRoot(
            f"no real partner for s={s_known:.6g}, sigma={sigma:.6g}, nu={nu:.6g}"
        )
    s = roots[0] if which_root == "lower" else roots[-1]
    if not -1e-12 <= s <= 1.0 + 1e-12:
        raise RootOutOfRange(f"partner root {s:.6g} outside [0, 1]")
    s = min(max(s, 0.0), 1.0)
    resid = abs(
        (sigma / nu) * A_k * _denom(s, nu) - (s + s_known - 2.0 * s * s_known)
    )
    if resid > 1e-10:
        raise RootOutOfRange(f"partner root fails jump condition, residual {resid:.3e}")
    return float(s)


def mixed_contact_inside(line: InvariantLine) -> bool:
    """Whether the mixed double-contact state on this line lies inside the
    saturation triangle: ``(nu_minus)**2 / nu <= 8`` with
    ``nu_minus = (mu_alpha - mu_beta) / mu_gamma``.

    Meaningful when the umbilic point is type II of a different vertex;
    equality marks the boundary case where the state reaches the edge.
    """
    a, b, _ = _ROLES[line.vertex]
    mu = line._mu
    nu_minus = (mu[a] - mu[b]) / line.mu_gamma
    return nu_minus * nu_minus / line.nu <= 8.0
