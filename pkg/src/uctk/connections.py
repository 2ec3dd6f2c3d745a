"""Saddle-connection machinery for the traveling-wave field.

Connections are located by shooting: integrate the unstable manifold of
the left state forward and the stable manifold of the right state
backward, cut both against a fixed transversal segment (the Sotomayor
line), and drive the in-section gap between the two hits to zero.

The speed is the natural bisection parameter: the right state moves along
the Hugoniot locus of the left state as the speed varies, and the gap
changes sign exactly at a connection.  With identity diffusion the
manifolds collapse onto an invariant line and the gap degenerates, so a
reachability predicate (does the orbit arrive at the partner?) replaces
the gap sign; both paths share the same integrator.

Boundary points of the undercompressive region are refined either by
bisecting the left state between a connecting and a non-connecting seed
or by the saddle-node variant, which pins the speed to a characteristic
value so the degenerate state becomes an exact saddle-node.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .capillarity import TwField, ViscosityMode
from .corey import FluidParams, eigen
from .corey import rh_residual as rh_residual_vec
from .corey import shock_speed
from .errors import (
    BracketLost,
    DegenerateDirection,
    MaxIterations,
    NoSectionHit,
    PartnerNotFound,
    SeedInvalid,
    ValidationError,
)
from .hugoniot import LaxTag, ShockTriple, solve_rh_partner
from .reduced import InvariantLine, distinguished_states, effective_sigma
from .uc_identity import uc_interval

__all__ = [
    "FieldParams",
    "IntegrationLimits",
    "SotomayorLine",
    "Orbit",
    "DifferenceVector",
    "UCSurfaceNumeric",
    "BoundaryPoint",
    "default_section",
    "integrate_manifold",
    "difference_vector",
    "find_saddle_saddle",
    "find_boundary_point",
    "find_saddle_saddlenode",
    "resolve_connection",
    "connection_exists",
    "identity_interval_endpoints",
    "seed_from_line",
    "sweep_uc_region",
    "verify_triple",
]


@dataclass(frozen=True)
class FieldParams:
    """Everything needed to build the traveling-wave field except (Um, sigma)."""

    p: FluidParams
    mode: ViscosityMode = ViscosityMode.IDENTITY

    def field(self, Um, sigma: float) -> TwField:
        return TwField(np.asarray(Um, dtype=float), float(sigma), self.p, self.mode)


@dataclass(frozen=True)
class IntegrationLimits:
    rtol: float = 1e-10
    atol: float = 1e-12
    eps0: float = 1e-6  # manifold seeding offset (saturation units)
    eps0_center: float = 1e-4  # larger offset for algebraic center departures
    max_arclength: float = 6.0
    max_steps: int = 400000
    capture_norm: float = 1e-11
    capture_guard: float = 1e-3
    domain_tol: float = 1e-7
    target_radius: float = 1e-8
    diverge_margin: float = 0.35  # give up when this far beyond the start-target distance
    store_every: int = 0  # 0: keep only endpoints and the section hit


@dataclass(frozen=True)
class SotomayorLine:
    """Fixed transversal segment used to measure manifold gaps."""

    point: np.ndarray
    direction: np.ndarray  # unit vector
    half_length: float = 0.25

    def tangent_coord(self, U) -> float:
        return float(
            (U[0] - self.point[0]) * self.direction[0]
            + (U[1] - self.point[1]) * self.direction[1]
        )

    def normal_offset(self, U) -> float:
        return float(
            -(U[0] - self.point[0]) * self.direction[1]
            + (U[1] - self.point[1]) * self.direction[0]
        )

    def rotated(self, angle_rad: float) -> "SotomayorLine":
        c, s = math.cos(angle_rad), math.sin(angle_rad)
        d = self.direction
        return SotomayorLine(
            self.point.copy(),
            np.array([c * d[0] - s * d[1], s * d[0] + c * d[1]]),
            self.half_length,
        )


def default_section(Um, Up, half_length: float = 0.25) -> SotomayorLine:
    """Perpendicular bisector of the segment from ``Um`` to ``Up``."""
    Um = np.asarray(Um, dtype=float)
    Up = np.asarray(Up, dtype=float)
    mid = 0.5 * (Um + Up)
    d = Up - Um
    n = math.hypot(d[0], d[1])
    if n == 0.0:
        raise ValidationError("cannot build a section for coincident states")
    return SotomayorLine(mid, np.array([-d[1] / n, d[0] / n]), half_length)


@dataclass
class Orbit:
    points: np.ndarray  # stored samples, at least seed and final point
    terminal: str  # hit_section | left_domain | reached_equilibrium | max_length
    hit_point: Optional[np.ndarray] = None
    hit_t: Optional[float] = None
    capture_point: Optional[np.ndarray] = None
    target_index: Optional[int] = None
    steps: int = 0

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


# Dormand-Prince 5(4) coefficients
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


def _dp_step(f, x, y, h, k1x, k1y):
    """One Dormand-Prince step; returns x1, y1, errx, erry, k7x, k7y."""
    k2x, k2y = f(x + h * _A21 * k1x, y + h * _A21 * k1y)
    k3x, k3y = f(x + h * (_A31 * k1x + _A32 * k2x), y + h * (_A31 * k1y + _A32 * k2y))
    k4x, k4y = f(
        x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x),
        y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y),
    )
    k5x, k5y = f(
        x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x),
        y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y),
    )
    k6x, k6y = f(
        x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x),
        y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y),
    )
    x1 = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
    y1 = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
    k7x, k7y = f(x1, y1)
    errx = h * (
        _E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x + _E7 * k7x
    )
    erry = h * (
        _E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y + _E7 * k7y
    )
    return x1, y1, errx, erry, k7x, k7y


def _locate_crossing(f, x0, y0, f0x, f0y, h, g, g0, g1):
    """Crossing point within one accepted step.

    Safeguarded secant on the step fraction, re-integrating a partial
    step from the step start for every trial (one extra stage evaluation
    each), so the located point carries full integration accuracy.
    """
    ta, tb = 0.0, 1.0
    ga, gb = g0, g1
    pt = (x0, y0)
    for _ in range(80):
        tm = tb - gb * (tb - ta) / (gb - ga) if gb != ga else 0.5 * (ta + tb)
        if not ta + 1e-15 < tm < tb - 1e-15:
            tm = 0.5 * (ta + tb)
        xx, yy, _, _, _, _ = _dp_step(f, x0, y0, tm * h, f0x, f0y)
        gm = g(xx, yy)
        pt = (xx, yy)
        if abs(gm) < 1e-14 or tb - ta < 1e-12:
            break
        if (gm > 0.0) == (ga > 0.0):
            ta, ga = tm, gm
        else:
            tb, gb = tm, gm
    return pt


def _integrate(
    fast_field,
    start,
    eq_start,
    section: Optional[SotomayorLine],
    limits: IntegrationLimits,
    targets=(),
    project=None,
) -> Orbit:
    rtol, atol = limits.rtol, limits.atol
    x, y = float(start[0]), float(start[1])
    ex, ey = float(eq_start[0]), float(eq_start[1])
    stored = [(x, y)]
    if section is not None:
        px, py = float(section.point[0]), float(section.point[1])
        ux, uy = float(section.direction[0]), float(section.direction[1])

        def g(xx, yy):
            return -(xx - px) * uy + (yy - py) * ux

        gprev = g(x, y)
    else:
        g = None
        gprev = 0.0

    tg = [(float(t[0][0]), float(t[0][1]), float(t[1])) for t in targets]
    if tg:
        diverge_at = (
            min(math.hypot(x - tx, y - ty) for tx, ty, _ in tg)
            + limits.diverge_margin
        )
    else:
        diverge_at = math.inf

    fx, fy = fast_field(x, y)
    fn = math.hypot(fx, fy)
    h = min(1e-4, 1e-6 / (fn + 1e-12))
    arclength = 0.0
    dom = limits.domain_tol
    steps = 0
    store_every = limits.store_every
    anchor_x, anchor_y, anchor_step = x, y, 0

    while steps < limits.max_steps:
        steps += 1
        x1, y1, errx, erry, k7x, k7y = _dp_step(fast_field, x, y, h, fx, fy)
        scx = atol + rtol * max(abs(x), abs(x1))
        scy = atol + rtol * max(abs(y), abs(y1))
        err = math.sqrt(0.5 * ((errx / scx) ** 2 + (erry / scy) ** 2))
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < 1e-15:
                return Orbit(np.array(stored + [(x, y)]), "max_length", steps=steps)
            continue

        # accepted
        if project is not None:
            x1, y1 = project(x1, y1)
            k7x, k7y = fast_field(x1, y1)
        if g is not None:
            g1 = g(x1, y1)
            if (gprev > 0.0) != (g1 > 0.0) or g1 == 0.0:
                cx, cy = _locate_crossing(
                    fast_field, x, y, fx, fy, h, g, gprev, g1
                )
                tcoord = (cx - px) * ux + (cy - py) * uy
                if abs(tcoord) <= section.half_length:
                    stored.append((cx, cy))
                    return Orbit(
                        np.array(stored),
                        "hit_section",
                        hit_point=np.array([cx, cy]),
                        hit_t=tcoord,
                        steps=steps,
                    )
            gprev = g1

        if tg:
            dmin = math.inf
            for i, (tx, ty, tr) in enumerate(tg):
                dist = math.hypot(x1 - tx, y1 - ty)
                if dist < tr:
                    stored.append((x1, y1))
                    return Orbit(
                        np.array(stored),
                        "reached_equilibrium",
                        capture_point=np.array([x1, y1]),
                        target_index=i,
                        steps=steps,
                    )
                dmin = min(dmin, dist)
            if dmin > diverge_at:
                stored.append((x1, y1))
                return Orbit(np.array(stored), "diverged", steps=steps)

        if x1 < -dom or y1 < -dom or x1 + y1 > 1.0 + dom:
            stored.append((x1, y1))
            return Orbit(np.array(stored), "left_domain", steps=steps)

        fnorm = math.hypot(k7x, k7y)
        if fnorm < limits.capture_norm and math.hypot(x1 - ex, y1 - ey) > limits.capture_guard:
            stored.append((x1, y1))
            return Orbit(
                np.array(stored),
                "reached_equilibrium",
                capture_point=np.array([x1, y1]),
                steps=steps,
            )
        if steps - anchor_step >= 256:
            # roundoff floor: the orbit sits on an equilibrium whose field
            # norm chatters just above the capture threshold
            if (
                math.hypot(x1 - anchor_x, y1 - anchor_y) < 1e-10
                and math.hypot(x1 - ex, y1 - ey) > limits.capture_guard
            ):
                stored.append((x1, y1))
                return Orbit(
                    np.array(stored),
                    "reached_equilibrium",
                    capture_point=np.array([x1, y1]),
                    steps=steps,
                )
            anchor_x, anchor_y, anchor_step = x1, y1, steps

        arclength += math.hypot(x1 - x, y1 - y)
        x, y, fx, fy = x1, y1, k7x, k7y
        if store_every and steps % store_every == 0:
            stored.append((x, y))
        if arclength > limits.max_arclength:
            stored.append((x, y))
            return Orbit(np.array(stored), "max_length", steps=steps)
        # step growth is limited by displacement, not eta: near-degenerate
        # equilibria have exponentially slow dynamics and need huge h
        h = h * min(5.0, max(0.2, 0.9 * (err + 1e-30) ** -0.2))
        h = min(h, 0.02 / (math.hypot(fx, fy) + 1e-30), 1e7)

    stored.append((x, y))
    return Orbit(np.array(stored), "max_length", steps=steps)


def _manifold_direction(fld: TwField, eq, kind: str, tol_sn: float = 1e-7):
    """Unit eigendirection of the field linearization for a manifold kind."""
    A = fld.linearization(eq)
    w, V = np.linalg.eig(A)
    if abs(w.imag).max() > 1e-8 * (abs(w).max() + 1e-30):
        raise DegenerateDirection(f"complex linearization eigenvalues at {np.asarray(eq)}")
    w = w.real
    V = V.real
    rho = abs(w).max()
    order = np.argsort(w)
    if kind == "unstable":
        lam = w[order[1]]
        v = V[:, order[1]]
        if lam <= tol_sn * rho:
            raise DegenerateDirection(f"no unstable eigenvalue at {np.asarray(eq)}")
    elif kind == "stable":
        lam = w[order[0]]
        v = V[:, order[0]]
        if lam >= -tol_sn * rho:
            raise DegenerateDirection(f"no stable eigenvalue at {np.asarray(eq)}")
    elif kind in ("center_unstable", "center_stable"):
        idx = int(np.argmin(np.abs(w)))
        lam = w[idx]
        v = V[:, idx]
    else:
        raise ValidationError(f"unknown manifold kind {kind!r}")
    v = v / math.hypot(v[0], v[1])
    return v, float(lam)


def integrate_manifold(
    eq,
    kind: str,
    branch_sign: int,
    fld: TwField,
    section: Optional[SotomayorLine],
    limits: IntegrationLimits = IntegrationLimits(),
    targets=(),
    project=None,
) -> Orbit:
    """Integrate one branch of an invariant manifold of an equilibrium.

    ``kind`` is "unstable" (forward), "stable" (backward), or the center
    variants "center_unstable"/"center_stable" used at saddle-nodes.  The
    orbit starts a small offset along the signed eigendirection and stops
    at a section crossing, on leaving the triangle, when captured by an
    equilibrium (field norm below the capture threshold away from the
    start), on reaching one of the optional targets, or at the arclength
    budget.
    """
    eq = np.asarray(eq, dtype=float)
    v, lam = _manifold_direction(fld, eq, kind)
    eps = limits.eps0 if kind in ("unstable", "stable") else limits.eps0_center
    start = eq + branch_sign * eps * v
    f = fld.compiled()
    if kind in ("stable", "center_stable"):
        base = f

        def f(x, y, _base=base):
            u, w = _base(x, y)
            return -u, -w

    return _integrate(f, start, eq, section, limits, targets, project=project)


@dataclass(frozen=True)
class DifferenceVector:
    """Gap between the unstable and stable manifold hits on the section."""

    d: np.ndarray
    from_unstable: np.ndarray
    to_stable: np.ndarray
    t_unstable: float
    t_stable: float

    @property
    def scalar(self) -> float:
        return self.t_stable - self.t_unstable

    @property
    def norm(self) -> float:
        return abs(self.scalar)


def _branch_toward(v: np.ndarray, direction: np.ndarray) -> int:
    return 1 if v[0] * direction[0] + v[1] * direction[1] >= 0.0 else -1


def difference_vector(
    Um,
    Up,
    sigma: float,
    fp: FieldParams,
    section: SotomayorLine,
    limits: IntegrationLimits = IntegrationLimits(),
    left_kind: str = "unstable",
    right_kind: str = "stable",
    left_sign: int = 0,
    right_sign: int = 0,
) -> DifferenceVector:
    """Section gap between the left unstable and right stable manifolds.

    Branches default to pointing toward the other state (pass an explicit
    sign to override, e.g. for curved center manifolds).  Raises
    NoSectionHit when either orbit terminates without crossing the
    section; the caller is expected to re-choose the section.
    """
    Um = np.asarray(Um, dtype=float)
    Up = np.asarray(Up, dtype=float)
    fld = fp.field(Um, sigma)
    vu, _ = _manifold_direction(fld, Um, left_kind)
    orb_u = integrate_manifold(
        Um, left_kind, left_sign or _branch_toward(vu, Up - Um), fld, section, limits
    )
    if orb_u.terminal != "hit_section":
        raise NoSectionHit(f"unstable manifold terminal {orb_u.terminal}")
    vs, _ = _manifold_direction(fld, Up, right_kind)
    orb_s = integrate_manifold(
        Up, right_kind, right_sign or _branch_toward(vs, Um - Up), fld, section, limits
    )
    if orb_s.terminal != "hit_section":
        raise NoSectionHit(f"stable manifold terminal {orb_s.terminal}")
    d = (orb_s.hit_t - orb_u.hit_t) * section.direction
    return DifferenceVector(
        d=d,
        from_unstable=orb_u.hit_point,
        to_stable=orb_s.hit_point,
        t_unstable=orb_u.hit_t,
        t_stable=orb_s.hit_t,
    )


def _is_saddle(fld: TwField, U, tol: float = 0.0) -> bool:
    A = fld.linearization(U)
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    return det < -tol


def _crossing_margin(Um, Up, sigma, p) -> float:
    em = eigen(Um, p)
    ep = eigen(Up, p)
    return min(
        sigma - em.lam_s, em.lam_f - sigma, sigma - ep.lam_s, ep.lam_f - sigma
    )


def find_saddle_saddle(
    Um,
    Up_prev,
    Up_next,
    section: SotomayorLine,
    delta: float,
    fp: FieldParams,
    limits: IntegrationLimits = IntegrationLimits(),
    max_iter: int = 200,
) -> ShockTriple:
    """Bisection on the shock speed between two bracketing saddles.

    ``Up_prev`` / ``Up_next`` must lie on the Hugoniot locus of ``Um``
    with section gaps of opposite sign; each iteration re-solves the
    partner at the midpoint speed and keeps the half-bracket whose gap
    signs still differ, until both gaps are within ``delta``.
    """
    Um = np.asarray(Um, dtype=float)
    sig_p = shock_speed(Um, Up_prev, fp.p)
    sig_n = shock_speed(Um, Up_next, fp.p)
    d_p = difference_vector(Um, Up_prev, sig_p, fp, section, limits)
    d_n = difference_vector(Um, Up_next, sig_n, fp, section, limits)
    if d_p.scalar * d_n.scalar >= 0.0 and max(d_p.norm, d_n.norm) > delta:
        raise BracketLost("section gaps do not straddle zero")
    up_p = np.asarray(Up_prev, dtype=float)
    up_n = np.asarray(Up_next, dtype=float)
    sig_c, up_c, d_c = sig_p, up_p, d_p
    for _ in range(max_iter):
        if max(d_p.norm, d_n.norm) <= delta:
            break
        sig_c = 0.5 * (sig_p + sig_n)
        guess = 0.5 * (up_p + up_n)
        up_c = solve_rh_partner(Um, sig_c, fp.p, guess)
        if up_c is None:
            raise BracketLost(f"partner solve failed at sigma={sig_c:.9g}")
        fld = fp.field(Um, sig_c)
        if not _is_saddle(fld, up_c) or not _is_saddle(fld, Um):
            raise BracketLost(f"midpoint state is not a saddle at sigma={sig_c:.9g}")
        d_c = difference_vector(Um, up_c, sig_c, fp, section, limits)
        if d_p.scalar * d_c.scalar > 0.0:
            sig_p, up_p, d_p = sig_c, up_c, d_c
        else:
            sig_n, up_n, d_n = sig_c, up_c, d_c
    else:
        raise MaxIterations(f"no convergence after {max_iter} speed bisections")
    sig, up = (sig_p, up_p) if d_p.norm <= d_n.norm else (sig_n, up_n)
    resid = rh_residual_vec(Um, up, sig, fp.p)
    if math.hypot(resid[0], resid[1]) > 1e-8:
        raise BracketLost("converged triple violates the jump condition")
    if _crossing_margin(Um, up, sig, fp.p) <= 1e-9:
        raise BracketLost("converged triple is not strictly undercompressive")
    return ShockTriple(Um.copy(), up.copy(), float(sig), LaxTag.CROSSING)


# ---------------------------------------------------------------------------
# reachability predicate (identity mode and gap checks)


def line_projector(line: InvariantLine):
    """Scalar fast-path orthogonal projection onto an invariant line.

    Used to stabilize identity-mode orbits: the line is exactly
    flow-invariant but transversally unstable along part of the path, so
    rounding noise would otherwise be amplified off the line.
    """
    px, py = float(line.vertex_state[0]), float(line.vertex_state[1])
    nx, ny = float(line.normal[0]), float(line.normal[1])

    def project(x, y):
        c = (x - px) * nx + (y - py) * ny
        return x - c * nx, y - c * ny

    return project


def connection_exists(
    Um,
    sigma: float,
    fp: FieldParams,
    partner_guess,
    limits: IntegrationLimits = IntegrationLimits(),
    project=None,
):
    """Orbit-reachability test: does the left unstable manifold arrive at
    the Hugoniot partner of ``Um`` at this speed?

    Returns ``(connected, partner)`` with ``partner`` None when the
    partner solve fails or the pair is not saddle-saddle.  ``project``
    (see :func:`line_projector`) stabilizes orbits on a known invariant
    manifold.
    """
    Um = np.asarray(Um, dtype=float)
    up = solve_rh_partner(Um, sigma, fp.p, partner_guess)
    if up is None:
        return False, None
    fld = fp.field(Um, sigma)
    if not (_is_saddle(fld, Um) and _is_saddle(fld, up)):
        return False, up
    try:
        v, _ = _manifold_direction(fld, Um, "unstable")
    except DegenerateDirection:
        return False, up
    budget = replace(limits, max_steps=min(limits.max_steps, 80000))
    orb = integrate_manifold(
        Um,
        "unstable",
        _branch_toward(v, up - Um),
        fld,
        None,
        budget,
        targets=[(up, limits.target_radius)],
        project=project,
    )
    ok = orb.terminal == "reached_equilibrium" and orb.target_index == 0
    return ok, up


def identity_interval_endpoints(
    line: InvariantLine,
    s_m: float,
    fp: Optional[FieldParams] = None,
    n_scan: int = 60,
    s_tol: float = 2e-8,
    limits: Optional[IntegrationLimits] = None,
):
    """Numeric undercompressive interval for a right state on a line.

    Scans candidate left states below the umbilic point, tests orbit
    reachability to the right state at the pair's jump speed, and bisects
    the two connectivity flips in the left-state coordinate (which stays
    smooth where the speed parametrization folds).  Returns
    ``(s_fast, s_slow)`` or None when no left state connects (the gap
    regime).  Independent of the closed forms: speeds come from the jump
    condition and connectivity from integration.
    """
    if fp is None:
        fp = FieldParams(line.p, ViscosityMode.IDENTITY)
    if limits is None:
        limits = IntegrationLimits(rtol=1e-10, atol=1e-12, target_radius=1e-9)
    nu = line.nu
    M = line.embed(s_m)
    s_u = nu / (1.0 + nu)
    proj = line_projector(line)

    def probe(s):
        sig = effective_sigma(s, s_m, nu)
        ok, _ = connection_exists(line.embed(s), sig, fp, M, limits, project=proj)
        return ok

    svals = np.linspace(1e-4, s_u - 1e-7, n_scan)
    states = [probe(s) for s in svals]
    if not any(states):
        return None
    first = states.index(True)
    last = len(states) - 1 - states[::-1].index(True)

    def bisect(s_false, s_true):
        for _ in range(200):
            if abs(s_true - s_false) < s_tol:
                break
            mid = 0.5 * (s_true + s_false)
            if probe(mid):
                s_true = mid
            else:
                s_false = mid
        return 0.5 * (s_true + s_false)

    s_fast = svals[0] if first == 0 else bisect(svals[first - 1], svals[first])
    s_slow = (
        svals[-1] if last == len(svals) - 1 else bisect(svals[last + 1], svals[last])
    )
    return s_fast, s_slow


# ---------------------------------------------------------------------------
# boundary refinement


def find_boundary_point(
    UL_in,
    UL_out,
    delta: float,
    tester: Callable[[np.ndarray], bool],
    max_iter: int = 80,
    check_seeds: bool = True,
) -> np.ndarray:
    """Left-state bisection between a connecting and a non-connecting seed."""
    a = np.asarray(UL_in, dtype=float)
    b = np.asarray(UL_out, dtype=float)
    if check_seeds:
        if not tester(a):
            raise ValidationError("UL_in does not admit a saddle-saddle connection")
        if tester(b):
            raise ValidationError("UL_out admits a saddle-saddle connection")
    it = 0
    while math.hypot(*(b - a)) > delta:
        it += 1
        if it > max_iter:
            raise MaxIterations(f"boundary bisection exceeded {max_iter} iterations")
        mid = a + 0.5 * (b - a)
        if tester(mid):
            a = mid
        else:
            b = mid
    return a + 0.5 * (b - a)


_CHAR_KINDS = {
    "scb": ("s", "left"),  # sigma = lam_s(U-): U- becomes a repeller-saddle
    "fcb": ("f", "right"),  # sigma = lam_f(U+): U+ becomes a saddle-attractor
    "ucb": ("f", "left"),  # sigma = lam_f(U-): U- becomes a saddle-attractor
}


def _char_sigma_partner(L, UR_guess, fp: FieldParams, kind: str, sigma_hint=None):
    """Characteristic speed and saddle partner for one trial left state.

    ``sigma_hint`` warm-starts the implicit fast-characteristic solve.
    """
    fam, side = _CHAR_KINDS[kind]
    e = eigen(L, fp.p)
    if side == "left":
        sigma = e.lam_s if fam == "s" else e.lam_f
        up = solve_rh_partner(L, sigma, fp.p, UR_guess)
        if up is None:
            raise PartnerNotFound(f"no partner at the characteristic speed of {L}")
        return float(sigma), up
    # right-side condition is implicit: sigma = lam_f(U+(sigma)); the
    # partner branch folds exactly at the solution, so approach it from
    # below with damped fixed-point updates and halving on failures
    up = np.asarray(UR_guess, dtype=float)
    sigma = None
    if sigma_hint is not None:
        cand = solve_rh_partner(L, float(sigma_hint), fp.p, up, tol=1e-12)
        if cand is not None:
            sigma, up = float(sigma_hint), cand
    if sigma is None:
        back = 1e-3
        for _ in range(12):
            lam = float(eigen(up, fp.p).lam_f)
            cand = solve_rh_partner(L, lam - back, fp.p, up, tol=1e-12)
            if cand is not None:
                sigma, up = lam - back, cand
                break
            back *= 2.5
    if sigma is None:
        raise PartnerNotFound(f"no partner while solving the implicit speed at {L}")
    for _ in range(200):
        target = float(eigen(up, fp.p).lam_f)
        step = target - sigma
        if abs(step) < 1e-11:
            break
        trial = sigma + 0.5 * step
        cand = solve_rh_partner(L, trial, fp.p, up, tol=1e-12)
        tries = 0
        while cand is None and tries < 14:
            trial = 0.5 * (trial + sigma)
            if abs(trial - sigma) < 1e-14:
                break
            cand = solve_rh_partner(L, trial, fp.p, up, tol=1e-12)
            tries += 1
        if cand is None:
            break
        sigma, up = trial, cand
    return float(sigma), up


def _ssn_gap(L, UR_guess, fp: FieldParams, kind: str, section, limits, sigma_hint=None):
    """Section gap for a saddle-node trial state; also returns the triple.

    Center manifolds curve, so the default branch orientation can walk
    out of the triangle; the opposite branch is tried before giving up.
    """
    sigma, up = _char_sigma_partner(L, UR_guess, fp, kind, sigma_hint=sigma_hint)
    if kind == "scb":
        dv = difference_vector(L, up, sigma, fp, section, limits)
    elif kind == "ucb":
        try:
            dv = difference_vector(
                L, up, sigma, fp, section, limits, left_kind="center_unstable"
            )
        except NoSectionHit:
            v, _ = _manifold_direction(fp.field(L, sigma), L, "center_unstable")
            dv = difference_vector(
                L, up, sigma, fp, section, limits, left_kind="center_unstable",
                left_sign=-_branch_toward(v, up - L),
            )
    else:  # fcb
        # integrating the center manifold backward is hopeless (the strong
        # direction explodes in reversed time); instead measure where the
        # left unstable manifold crosses a local section through the
        # partner transverse to its center direction: the signed miss
        # distance vanishes exactly at the connection
        fld = fp.field(L, sigma)
        v, _ = _manifold_direction(fld, up, "center_stable")
        if abs(v[0]) > 1e-13:
            v = v if v[0] > 0 else -v
        else:
            v = v if v[1] > 0 else -v
        local = SotomayorLine(
            np.asarray(up, float).copy(),
            np.array([v[0], v[1]]),
            section.half_length,
        )
        vu, _ = _manifold_direction(fld, L, "unstable")
        orb_u = integrate_manifold(
            L, "unstable", _branch_toward(vu, up - L), fld, local, limits,
            targets=[(up, 1e-9)],
        )
        up = np.asarray(up, float)
        if orb_u.terminal == "hit_section":
            dv = DifferenceVector(
                d=-orb_u.hit_t * local.direction,
                from_unstable=orb_u.hit_point,
                to_stable=up.copy(),
                t_unstable=orb_u.hit_t,
                t_stable=0.0,
            )
        elif (
            orb_u.terminal == "reached_equilibrium"
            and orb_u.capture_point is not None
            and math.hypot(*(orb_u.capture_point - up)) < 1e-4
        ):
            # funneled into the saddle-node: the connection itself
            dv = DifferenceVector(
                d=np.zeros(2),
                from_unstable=orb_u.capture_point,
                to_stable=up.copy(),
                t_unstable=0.0,
                t_stable=0.0,
            )
        else:
            raise NoSectionHit(f"unstable manifold terminal {orb_u.terminal}")
    return dv, sigma, up


def find_saddle_saddlenode(
    ULm,
    ULp,
    UR0,
    section: SotomayorLine,
    delta: float,
    fp: FieldParams,
    kind: str = "scb",
    limits: IntegrationLimits = IntegrationLimits(),
    max_iter: int = 80,
):
    """Characteristic-boundary triple by left-state bisection.

    Every trial state on the segment gets the speed that makes it (or its
    partner, for the fast-characteristic variant) an exact saddle-node;
    the segment is bisected on the sign of the manifold gap until the gap
    is within ``delta``.  Returns ``(B-, B+, sigma)``.
    """
    if kind not in _CHAR_KINDS:
        raise ValidationError(f"kind must be one of {sorted(_CHAR_KINDS)}")
    a = np.asarray(ULm, dtype=float)
    b = np.asarray(ULp, dtype=float)
    d_a, sig_a, up_a = _ssn_gap(a, UR0, fp, kind, section, limits)
    d_b, sig_b, up_b = _ssn_gap(b, up_a, fp, kind, section, limits, sigma_hint=sig_a)
    if d_a.scalar * d_b.scalar >= 0.0 and min(d_a.norm, d_b.norm) > delta:
        raise BracketLost("saddle-node gaps do not straddle zero")
    best = (d_a, a, sig_a, up_a) if d_a.norm <= d_b.norm else (d_b, b, sig_b, up_b)
    up_L = np.asarray(best[3], dtype=float)
    for _ in range(max_iter):
        # an orbit that funnels straight into the saddle-node reports a
        # zero gap; one small gap suffices since the far side stalls at
        # the funnel-edge miss distance
        if best[0].norm <= delta:
            break
        L = a + 0.5 * (b - a)
        d_L, sig_L, up_L = _ssn_gap(
            L, up_L, fp, kind, section, limits, sigma_hint=0.5 * (sig_a + sig_b)
        )
        if d_L.norm < best[0].norm:
            best = (d_L, L, sig_L, up_L)
        if d_a.scalar * d_L.scalar > 0.0:
            a, d_a, sig_a = L, d_L, sig_L
        else:
            b, d_b, sig_b = L, d_L, sig_L
    else:
        raise MaxIterations(f"no convergence after {max_iter} segment bisections")
    return best[1], best[3], float(best[2])


# ---------------------------------------------------------------------------
# resolving one connection (warm-started) and sweeping a region


def verify_triple(
    triple: ShockTriple,
    fp: FieldParams,
    delta: float,
    section: Optional[SotomayorLine] = None,
    limits: IntegrationLimits = IntegrationLimits(),
) -> dict:
    """Verification predicate for an emitted undercompressive triple.

    Checks the jump-condition residual, strict crossing inequalities,
    saddle types, the section gap, and a seeding-robustness (offset
    halving) re-run: the unstable hit must move by less than ``10*delta``
    when the seed offset is halved.
    """
    out = {}
    resid = rh_residual_vec(triple.Um, triple.Up, triple.sigma, fp.p)
    out["rh_norm"] = float(math.hypot(resid[0], resid[1]))
    out["crossing_margin"] = float(
        _crossing_margin(triple.Um, triple.Up, triple.sigma, fp.p)
    )
    fld = fp.field(triple.Um, triple.sigma)
    out["saddle_minus"] = _is_saddle(fld, triple.Um)
    out["saddle_plus"] = _is_saddle(fld, triple.Up)
    if fp.mode is ViscosityMode.IDENTITY:
        ok, _ = connection_exists(
            triple.Um, triple.sigma, fp, triple.Up, limits
        )
        out["gap_norm"] = 0.0 if ok else math.inf
        out["richardson_shift"] = 0.0
        out["ok"] = bool(
            ok
            and out["rh_norm"] < 1e-8
            and out["crossing_margin"] > 1e-9
            and out["saddle_minus"]
            and out["saddle_plus"]
        )
        return out
    if section is None:
        section = default_section(triple.Um, triple.Up)
    dv = difference_vector(triple.Um, triple.Up, triple.sigma, fp, section, limits)
    out["gap_norm"] = dv.norm
    half = replace(limits, eps0=0.5 * limits.eps0)
    dv2 = difference_vector(triple.Um, triple.Up, triple.sigma, fp, section, half)
    out["richardson_shift"] = abs(dv2.t_unstable - dv.t_unstable)
    out["ok"] = bool(
        out["rh_norm"] < 1e-8
        and out["crossing_margin"] > 1e-9
        and out["saddle_minus"]
        and out["saddle_plus"]
        and out["gap_norm"] <= delta
        and out["richardson_shift"] < 10.0 * delta
    )
    return out


def resolve_connection(
    Um,
    sigma_guess: float,
    Up_guess,
    fp: FieldParams,
    delta: float,
    limits: IntegrationLimits = IntegrationLimits(),
    dsigma: float = 0.02,
    max_expand: int = 6,
    section_half_length: float = 0.25,
    verify: bool = True,
    project=None,
    report=None,
) -> Optional[ShockTriple]:
    """Find the saddle-saddle connection of a left state near a warm start.

    Capillarity mode brackets the section gap in speed around the guess
    and bisects; identity mode scans the reachability predicate (the gap
    is degenerate along invariant lines).  Returns None when no
    connection is found near the guess.
    """
    Um = np.asarray(Um, dtype=float)
    Up_guess = np.asarray(Up_guess, dtype=float)

    if fp.mode is ViscosityMode.IDENTITY:
        if project is not None:
            qx, qy = project(float(Um[0]), float(Um[1]))
            if math.hypot(qx - Um[0], qy - Um[1]) > 1e-9:
                project = None  # candidate is off the invariant manifold
        e = eigen(Um, fp.p)
        margin = 1e-7 * (1.0 + abs(e.lam_f))
        lo_w, hi_w = e.lam_s + margin, e.lam_f - margin
        if hi_w <= lo_w:
            return None

        def probe(sig):
            if not lo_w <= sig <= hi_w:
                return False, None
            return connection_exists(Um, sig, fp, Up_guess, limits, project=project)

        # geometric ladder: connection windows pinch to zero width at the
        # region corners, so probe every scale around the warm speed
        found = None
        for k in [None] + list(range(0, 19)):
            for off in ((0.0,) if k is None else (dsigma * 0.5**k, -(dsigma * 0.5**k))):
                ok, up = probe(sigma_guess + off)
                if ok:
                    found = (sigma_guess + off, up)
                    break
            if found:
                break
        if found is None:
            return None
        sig0, up0 = found

        def edge(sig_true, sig_false, tol=1e-8):
            ok, _ = probe(sig_false)
            if ok:
                return sig_false
            for _ in range(60):
                if abs(sig_true - sig_false) < tol:
                    break
                mid = 0.5 * (sig_true + sig_false)
                ok, _ = probe(mid)
                if ok:
                    sig_true = mid
                else:
                    sig_false = mid
            return sig_true

        sig_lo = edge(sig0, lo_w)
        sig_hi = edge(sig0, hi_w)
        sig_mid = 0.5 * (sig_lo + sig_hi)
        ok, up = probe(sig_mid)
        if not ok:
            sig_mid, up = sig0, up0
        triple = ShockTriple(Um.copy(), up, float(sig_mid), LaxTag.CROSSING)
        if _crossing_margin(Um, up, sig_mid, fp.p) <= 1e-9:
            return None
        return triple

    for rot in range(3):
        section = default_section(Um, Up_guess, section_half_length)
        if rot:
            section = section.rotated(rot * math.pi / 6.0)
        try:
            trip, section_ok = _resolve_capillarity(
                Um, sigma_guess, Up_guess, fp, delta, limits, dsigma, max_expand,
                section, verify, report=report,
            )
        except (BracketLost, MaxIterations, PartnerNotFound):
            return None
        if trip is not None:
            return trip
        if section_ok:
            return None
    return None


def _resolve_capillarity(
    Um, sigma_guess, Up_guess, fp, delta, limits, dsigma, max_expand, section,
    verify, report=None,
):
    em = eigen(Um, fp.p)
    lo_w, hi_w = em.lam_s, em.lam_f
    if hi_w - lo_w < 1e-7:
        return None, True

    def clamp(sig):
        return min(max(sig, lo_w + 1e-7), hi_w - 1e-7)

    def gap(sig, guess):
        up = solve_rh_partner(Um, sig, fp.p, guess)
        if up is None:
            return None, None
        fld = fp.field(Um, sig)
        if not (_is_saddle(fld, Um) and _is_saddle(fld, up)):
            return None, up
        try:
            dv = difference_vector(Um, up, sig, fp, section, limits)
        except (DegenerateDirection, NoSectionHit):
            return None, up
        return dv, up

    def finish(sig, up):
        trip = ShockTriple(
            np.asarray(Um, float).copy(), up, float(sig), LaxTag.CROSSING
        )
        if not verify or verify_triple(trip, fp, delta, section, limits)["ok"]:
            return trip
        return None

    sig0 = clamp(sigma_guess)
    d0, up0 = gap(sig0, Up_guess)
    saw_gap = d0 is not None
    if d0 is not None and d0.norm <= delta:
        trip = finish(sig0, up0)
        if trip is not None:
            return trip, True

    bracket = None
    if d0 is not None:
        bracket = _secant_walk_bracket(gap, clamp, sig0, d0, up0, dsigma, hi_w - lo_w)

    if bracket is None:
        # fallback: scan the crossing window; the connection may hug the
        # edge of the sub-window where the gap is defined
        guess = up0 if up0 is not None else Up_guess
        samples = []
        for frac in np.linspace(0.02, 0.98, 13):
            sig = lo_w + frac * (hi_w - lo_w)
            d, up = gap(sig, guess)
            if up is not None:
                guess = up
            samples.append((sig, d, up))
        brackets = []
        for a, b in zip(samples, samples[1:]):
            if a[1] is not None and b[1] is not None and a[1].scalar * b[1].scalar < 0.0:
                brackets.append((a, b))
        saw_gap = saw_gap or any(s[1] is not None for s in samples)
        if not brackets:
            return None, saw_gap
        brackets.sort(key=lambda ab: abs(0.5 * (ab[0][0] + ab[1][0]) - sigma_guess))
        if report is not None and len(brackets) > 1:
            report["extra_brackets"] = len(brackets) - 1
        bracket = brackets[0]

    (sa, da, ua), (sb, db, ub) = bracket
    stale = 0
    for _ in range(120):
        if min(da.norm, db.norm) <= delta:
            break
        fa, fb = da.scalar, db.scalar
        if stale >= 2:  # Illinois anti-stagnation
            fa *= 0.5
            stale = 0
        sc = sb - fb * (sb - sa) / (fb - fa)
        if not min(sa, sb) + 1e-15 < sc < max(sa, sb) - 1e-15:
            sc = 0.5 * (sa + sb)
        dc, uc = gap(sc, ub)
        if dc is None:
            raise BracketLost(f"lost the speed bracket at sigma={sc:.9g}")
        if dc.scalar * da.scalar > 0.0:
            sa, da, ua = sc, dc, uc
            stale = 0
        else:
            sb, db, ub = sc, dc, uc
            stale += 1
    else:
        raise MaxIterations("speed refinement stalled")
    sig, up = (sa, ua) if da.norm <= db.norm else (sb, ub)
    trip = finish(sig, up)
    return trip, True


def _secant_walk_bracket(gap, clamp, sig0, d0, up0, dsigma, window):
    """Follow the near-linear gap toward its zero; bracket on sign change."""
    step = min(dsigma, 0.25 * window)
    sig1 = clamp(sig0 + step)
    if sig1 == sig0:
        sig1 = clamp(sig0 - step)
    d1, up1 = gap(sig1, up0)
    if d1 is None:
        sig1 = clamp(sig0 - step)
        d1, up1 = gap(sig1, up0)
        if d1 is None:
            return None
    prev = (sig0, d0, up0)
    cur = (sig1, d1, up1)
    for _ in range(30):
        s0, v0, u0 = prev
        s1, v1, u1 = cur
        if v0.scalar * v1.scalar < 0.0:
            return (prev, cur)
        if v1.scalar == v0.scalar or s1 == s0:
            return None
        sn = s1 - v1.scalar * (s1 - s0) / (v1.scalar - v0.scalar)
        cap = 4.0 * abs(s1 - s0) + 1e-5
        if abs(sn - s1) > cap:
            sn = s1 + math.copysign(cap, sn - s1)
        sn = clamp(sn)
        if abs(sn - s1) < 1e-13:
            return None
        dn, un = gap(sn, u1)
        tries = 0
        while dn is None and tries < 9:
            # the gap can be undefined past a fold of the partner branch;
            # squeeze toward the last valid speed
            sn = 0.5 * (sn + s1)
            dn, un = gap(sn, u1)
            tries += 1
        if dn is None:
            return None
        prev, cur = cur, (sn, dn, un)
    return None


def _probe_gap(Um, sigma, guess, fp, limits, half_length=0.3):
    """Section gap at one trial speed; None when undefined there."""
    up = solve_rh_partner(Um, sigma, fp.p, guess)
    if up is None:
        return None, None
    fld = fp.field(Um, sigma)
    if not (_is_saddle(fld, Um) and _is_saddle(fld, up)):
        return None, up
    for rot in range(4):
        section = default_section(Um, up, half_length)
        if rot:
            section = section.rotated(rot * math.pi / 6.0)
        try:
            return difference_vector(Um, up, sigma, fp, section, limits).scalar, up
        except (NoSectionHit, DegenerateDirection):
            continue
    return None, up


def default_seed_candidates(line: InvariantLine) -> list[float]:
    """Left-state effective saturations likely inside the swept region."""
    ds = distinguished_states(line)
    lo = ds.s_ext_fast_star if ds.s_ext_fast_star is not None else ds.s_ext_fast
    hi = ds.s_umbilic
    return [lo + f * (hi - lo) for f in (0.7, 0.55, 0.4, 0.85)]


def seed_from_line(
    line: InvariantLine,
    s_candidates=None,
    fp: FieldParams = None,
    delta: float = 1e-6,
    limits: IntegrationLimits = IntegrationLimits(),
    normal_offsets=(0.0, -0.005, 0.005, -0.01, 0.01, -0.02, 0.02, -0.03, 0.03, -0.04),
    n_sigma: int = 12,
) -> ShockTriple:
    """Verified seed connection near an invariant line.

    The closed-form identity interval supplies warm starts (mid-interval
    partner and speed).  Identity mode connects on the line itself; with
    capillarity the region is displaced off the line, so candidates are
    offset along the line normal, with a transverse bisection between
    offsets whose section gaps have opposite signs (some regions are
    thinner than any fixed offset spacing).  The returned seed is
    numerically verified in either mode.
    """
    if s_candidates is None:
        s_candidates = default_seed_candidates(line)
    if fp.mode is ViscosityMode.IDENTITY:
        for s_minus in np.atleast_1d(s_candidates):
            hint = _line_partner_hint(line, float(s_minus))
            if hint is None:
                continue
            s_plus, sigma = hint
            trip = resolve_connection(
                line.embed(float(s_minus)), sigma, line.embed(s_plus), fp, delta,
                limits, project=line_projector(line),
            )
            if trip is not None:
                return trip
        raise SeedInvalid(f"no verified connection from candidates on line {line.vertex}")

    for s_minus in np.atleast_1d(s_candidates):
        hint = _line_partner_hint(line, float(s_minus))
        if hint is None:
            continue
        s_plus_hint, sigma_hint = hint
        up_hint = line.embed(s_plus_hint)
        base = line.embed(float(s_minus))

        def off_state(off):
            return base + off * line.normal

        def in_triangle(U):
            return U[0] > 1e-6 and U[1] > 1e-6 and U[0] + U[1] < 1.0 - 1e-6

        def try_resolve(off):
            Um = off_state(off)
            if not in_triangle(Um):
                return None
            return resolve_connection(
                Um, sigma_hint, up_hint, fp, delta, limits, dsigma=0.05
            )

        def mid_gap(off):
            Um = off_state(off)
            if not in_triangle(Um):
                return None
            d, _ = _probe_gap(Um, sigma_hint, up_hint, fp, limits)
            return d

        def centered(off0, trip0):
            # map the transverse run of connecting offsets around the hit
            # and reseed from its middle (band edges make fragile seeds)
            step = 0.004
            hits = {off0: trip0}
            for sgn in (-1.0, 1.0):
                for k in range(1, 9):
                    off = off0 + sgn * k * step
                    trip = try_resolve(off)
                    if trip is None:
                        break
                    hits[off] = trip
            offs = sorted(hits)
            if len(offs) <= 2:
                # run thinner than the scan step: bisect both edges
                lo = hi = off0
                for sgn in (-1.0, 1.0):
                    a, b = off0, off0 + sgn * step
                    for _ in range(6):
                        m = 0.5 * (a + b)
                        if try_resolve(m) is not None:
                            a = m
                        else:
                            b = m
                    if sgn < 0:
                        lo = a
                    else:
                        hi = a
                mid = 0.5 * (lo + hi)
                trip = try_resolve(mid)
                return trip if trip is not None else trip0
            return hits[offs[len(offs) // 2]]

        gaps = []
        for off in normal_offsets:
            trip = try_resolve(off)
            if trip is not None:
                return centered(off, trip)
            gaps.append((off, mid_gap(off)))
        # transverse bisection between opposite-sign gaps (thin regions)
        gaps = [(o, g) for o, g in gaps if g is not None]
        gaps.sort()
        for (oa, ga), (ob, gb) in zip(gaps, gaps[1:]):
            if ga * gb >= 0.0:
                continue
            for _ in range(25):
                om = 0.5 * (oa + ob)
                trip = try_resolve(om)
                if trip is not None:
                    return centered(om, trip)
                gm = mid_gap(om)
                if gm is None:
                    break
                if gm * ga > 0.0:
                    oa, ga = om, gm
                else:
                    ob, gb = om, gm
    raise SeedInvalid(f"no verified connection from candidates on line {line.vertex}")


def _line_partner_hint(line: InvariantLine, s_minus: float):
    """Mid-window partner of an on-line left state, via the closed forms."""
    nu = line.nu
    ds = distinguished_states(line)
    lo, hi = None, None
    grid = np.linspace(ds.s_umbilic + 1e-6, 1.0, 400) if nu > 1 else np.linspace(
        0.5, 1.0, 300
    )
    good = []
    for s_m in grid:
        try:
            iv = uc_interval(line, float(s_m))
        except Exception:
            continue
        if iv.s_fast < s_minus < iv.s_slow:
            good.append(float(s_m))
    if not good:
        return None
    s_plus = good[len(good) // 2]
    return s_plus, float(effective_sigma(s_minus, s_plus, nu))


@dataclass
class BoundaryPoint:
    Um: np.ndarray
    Up: np.ndarray
    sigma: float
    tag: str


@dataclass
class UCSurfaceNumeric:
    """Swept undercompressive region: one-to-one triples over a grid of
    left states plus tagged boundary polylines."""

    mode: ViscosityMode
    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    h: float
    triples: dict = field(default_factory=dict)  # (i, j) -> ShockTriple
    boundary_points: list = field(default_factory=list)
    multivalued: list = field(default_factory=list)

    def interior_rows(self) -> np.ndarray:
        rows = [self.triples[k].as_row() for k in sorted(self.triples)]
        return np.array(rows) if rows else np.zeros((0, 5))

    def boundaries(self) -> dict[str, np.ndarray]:
        out: dict[str, list] = {}
        for bp in self.boundary_points:
            out.setdefault(bp.tag, []).append(
                [bp.Um[0], bp.Um[1], bp.Up[0], bp.Up[1], bp.sigma]
            )
        final = {}
        for tag, rows in out.items():
            rows.sort(key=lambda r: float(np.dot(np.array(r[:2]) - self.origin, self.e1)))
            final[tag] = np.array(rows)
        return final

    def tag_census(self) -> dict[str, int]:
        census: dict[str, int] = {}
        for bp in self.boundary_points:
            census[bp.tag] = census.get(bp.tag, 0) + 1
        return census


def _margins(trip: ShockTriple, p: FluidParams):
    em = eigen(trip.Um, p)
    ep = eigen(trip.Up, p)
    sw, so = trip.Up
    return {
        "SCB": trip.sigma - em.lam_s,
        "UCB": em.lam_f - trip.sigma,
        "FCB": ep.lam_f - trip.sigma,
        "GUB": min(sw, so, 1.0 - sw - so),
    }


def _boundary_tag(trip: ShockTriple, parent: ShockTriple, p: FluidParams) -> str:
    """Which admissibility margin collapsed between an interior triple and
    the refined boundary triple."""
    mb = _margins(trip, p)
    mi = _margins(parent, p)
    ratios = {k: mb[k] / max(mi[k], 1e-12) for k in mb}
    return min(ratios, key=ratios.get)


def sweep_uc_region(
    seed: ShockTriple,
    h: float,
    delta: float,
    fp: FieldParams,
    limits: IntegrationLimits = IntegrationLimits(),
    max_cells: int = 4000,
    boundary_tol: Optional[float] = None,
    dsigma: float = 0.02,
    workers: Optional[int] = None,
    project=None,
    max_boundary_points: Optional[int] = None,
) -> UCSurfaceNumeric:
    """Breadth-first continuation of saddle-saddle connections.

    Left-state candidates live on an ``h``-spaced grid aligned with the
    seed connection direction; each candidate warm-starts from the
    resolved neighbor that spawned it.  Failed candidates trigger a
    left-state bisection toward the last connecting point, and the
    refined boundary points are tagged by which admissibility margin
    collapsed (slow/fast/undercompressive characteristic) or by the right
    state reaching the triangle edge (genuine undercompressive).
    """
    seed_resolved = resolve_connection(
        seed.Um, seed.sigma, seed.Up, fp, delta, limits, dsigma=dsigma,
        project=project,
    )
    if seed_resolved is None:
        raise SeedInvalid("seed state does not admit a verified connection")
    d = seed_resolved.Up - seed_resolved.Um
    e1 = d / math.hypot(d[0], d[1])
    e2 = np.array([-e1[1], e1[0]])
    origin = seed_resolved.Um.copy()

    if workers is None:
        workers = int(os.environ.get("UCTK_THREADS", "1") or "1")

    surf = UCSurfaceNumeric(
        mode=fp.mode, origin=origin, e1=e1, e2=e2, h=h
    )
    surf.triples[(0, 0)] = seed_resolved

    frontier = [(0, 0)]
    visited = {(0, 0)}
    fail_pairs = []

    def position(idx):
        return origin + idx[0] * h * e1 + idx[1] * h * e2

    def resolve_candidate(parent_key, key):
        parent = surf.triples[parent_key]
        Um_c = position(key)
        if (
            Um_c[0] < 1e-9
            or Um_c[1] < 1e-9
            or Um_c[0] + Um_c[1] > 1.0 - 1e-9
        ):
            return None
        shift = Um_c - parent.Um
        rep = {}
        trip = resolve_connection(
            Um_c, parent.sigma, parent.Up + shift, fp, delta, limits, dsigma=dsigma,
            project=project, report=rep,
        )
        if rep.get("extra_brackets"):
            surf.multivalued.append((key, rep["extra_brackets"]))
        return trip

    neighbor_steps = ((1, 0), (-1, 0), (0, 1), (0, -1))
    while frontier and len(surf.triples) < max_cells:
        next_frontier = []
        jobs = []
        for key in frontier:
            for dk in neighbor_steps:
                nk = (key[0] + dk[0], key[1] + dk[1])
                if nk in visited:
                    continue
                visited.add(nk)
                jobs.append((key, nk))
        if workers > 1 and len(jobs) > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(
                    pool.map(lambda kn: resolve_candidate(kn[0], kn[1]), jobs)
                )
        else:
            results = [resolve_candidate(k, n) for k, n in jobs]
        for (parent_key, key), trip in zip(jobs, results):
            if trip is not None:
                surf.triples[key] = trip
                next_frontier.append(key)
            else:
                fail_pairs.append((parent_key, key))
        frontier = next_frontier

    if boundary_tol is None:
        boundary_tol = max(h / 8.0, 1e-4)

    if max_boundary_points is not None and len(fail_pairs) > max_boundary_points:
        # deterministic subsample, always keeping the extremal pairs along
        # the sweep frame (the region corners live there)
        def e1_coord(pair):
            return pair[1][0]

        fail_pairs.sort(key=lambda pr: (e1_coord(pr), pr[1][1]))
        keep = {0, len(fail_pairs) - 1}
        stride = (len(fail_pairs) - 1) / max(max_boundary_points - 1, 1)
        keep.update(int(round(i * stride)) for i in range(max_boundary_points))
        fail_pairs = [fail_pairs[i] for i in sorted(keep)]

    for parent_key, key in fail_pairs:
        if parent_key not in surf.triples:
            continue
        parent = surf.triples[parent_key]
        last_success = {"trip": parent, "prev": None}

        def tester(U, _store=last_success):
            U = np.asarray(U, float)
            cur = _store["trip"]
            prev = _store["prev"]
            sigma_guess = cur.sigma
            if prev is not None:
                dab = cur.Um - prev.Um
                denom = float(np.dot(dab, dab))
                if denom > 1e-16:
                    t = float(np.dot(U - cur.Um, dab)) / denom
                    sigma_guess = cur.sigma + t * (cur.sigma - prev.sigma)
            shift = U - cur.Um
            trip = resolve_connection(
                U, sigma_guess, cur.Up + shift, fp, delta, limits, dsigma=dsigma,
                project=project,
            )
            if trip is not None:
                _store["prev"] = cur
                _store["trip"] = trip
                return True
            return False

        try:
            find_boundary_point(
                parent.Um, position(key), boundary_tol, tester, check_seeds=False
            )
        except MaxIterations:
            continue
        trip = last_success["trip"]
        tag = _boundary_tag(trip, parent, fp.p)
        surf.boundary_points.append(
            BoundaryPoint(trip.Um.copy(), trip.Up.copy(), trip.sigma, tag)
        )
    return surf
