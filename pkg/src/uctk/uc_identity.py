"""Closed-form undercompressive intervals and the identity-matrix surface.

With identity diffusion the undercompressive (saddle-saddle) shocks live
on the invariant lines.  For a right state ``M`` above the umbilic point
the admissible left states fill an interval ``(s_fast, s_slow)`` whose
endpoints are characteristic:

    sigma(s_slow; s_M) = lam_s(s_slow)                  (always)
    sigma(s_fast; s_M) = lam_f(s_M)      case A, M at or below the upper
                                         double-contact state (or every M
                                         when nu > 8)
    sigma(s_fast; s_M) = lam_f(s_fast)   case B, M beyond it (or every M
                                         when nu <= 1)

For viscosity ratio below one the right states must start at the umbilic
extension (s = 1/2): between the umbilic point and it no left state
admits a connection, and transitional rarefactions take over.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GapRegion, NotInInterval, NumericalError, OutOfRange
from .hugoniot import LaxTag, ShockTriple, classify_pair
from .reduced import (
    DistinguishedStates,
    InvariantLine,
    char_speeds,
    distinguished_states,
    effective_sigma,
    solve_quadratic,
)

__all__ = [
    "UCInterval",
    "UCSurfaceIdentity",
    "WaveLeg",
    "WaveSequence",
    "uc_interval",
    "uc_shock",
    "build_surface_identity",
    "transitional_rarefaction",
]

_CHAR_CHECK_TOL = 1e-10
BOUNDARY_TAGS = ("SCB", "FCB", "UCB", "GUB")


@dataclass(frozen=True)
class UCInterval:
    """Undercompressive left-state interval for one right state.

    ``case_tag`` records which fast-characteristic identity pins
    ``s_fast``: "A" for sigma = lam_f at the right state, "B" for sigma =
    lam_f at the left endpoint itself.
    """

    s_right: float
    s_slow: float
    s_fast: float
    case_tag: str


def _validate_s_right(nu: float, s_u: float, s_m: float) -> None:
    if not 0.0 <= s_m <= 1.0:
        raise OutOfRange(f"s_M={s_m:.6g} outside [0, 1]")
    if nu >= 1.0:
        if not s_u < s_m <= 1.0:
            raise OutOfRange(
                f"s_M={s_m:.6g} must lie in (s_umbilic, 1] = ({s_u:.6g}, 1]"
            )
    else:
        if s_m < 0.5:
            if s_m > s_u:
                raise GapRegion(
                    f"no connections for s_M={s_m:.6g} in the gap "
                    f"({s_u:.6g}, 0.5) at nu={nu:.6g}"
                )
            raise OutOfRange(f"s_M={s_m:.6g} must lie in [0.5, 1] for nu<=1")


def uc_interval(line: InvariantLine, s_m: float) -> UCInterval:
    """Left-state interval of undercompressive shocks into ``embed(s_m)``."""
    nu = line.nu
    ds = distinguished_states(line)
    s_u = ds.s_umbilic
    _validate_s_right(nu, s_u, s_m)

    denom = 2.0 * (1.0 + nu) * s_m * s_m + nu * (1.0 - 2.0 * s_m)
    s_slow = nu * s_m / denom

    if nu > 8.0:
        case = "A"
    elif nu > 1.0:
        case = "A" if s_m <= ds.s_contact_plus else "B"
    else:
        case = "B"

    if case == "A":
        roots = solve_quadratic(
            2.0 * s_m * (1.0 + nu), -(2.0 * s_m + 1.0) * nu, nu * s_m
        )
        if not roots:
            raise NumericalError(f"fast endpoint quadratic has no real root at s_M={s_m}")
        s_fast = roots[-1]
    else:
        roots = solve_quadratic(
            (2.0 * s_m - 1.0) * (nu + 1.0), -2.0 * s_m * (nu + 1.0), nu
        )
        if not roots:
            raise NumericalError(f"fast endpoint quadratic has no real root at s_M={s_m}")
        s_fast = roots[0]

    lam_slow = char_speeds(s_slow, line)[0]
    if abs(effective_sigma(s_slow, s_m, nu) - lam_slow) > _CHAR_CHECK_TOL * (1.0 + lam_slow):
        raise NumericalError(f"slow endpoint fails its characteristic identity at s_M={s_m}")
    sig_fast = effective_sigma(s_fast, s_m, nu)
    lam_fast = char_speeds(s_m if case == "A" else s_fast, line)[1]
    if abs(sig_fast - lam_fast) > _CHAR_CHECK_TOL * (1.0 + lam_fast):
        raise NumericalError(f"fast endpoint fails its characteristic identity at s_M={s_m}")
    return UCInterval(s_right=s_m, s_slow=s_slow, s_fast=s_fast, case_tag=case)


def uc_shock(line: InvariantLine, s_left: float, s_m: float) -> ShockTriple:
    """Strictly undercompressive shock from ``embed(s_left)`` to ``embed(s_m)``."""
    iv = uc_interval(line, s_m)
    if not iv.s_fast < s_left < iv.s_slow:
        raise NotInInterval(
            f"s_left={s_left:.6g} outside ({iv.s_fast:.6g}, {iv.s_slow:.6g})"
        )
    sigma = effective_sigma(s_left, s_m, line.nu)
    Um = line.embed(s_left)
    Up = line.embed(s_m)
    for s in (s_left, s_m):
        lam_s, lam_f = char_speeds(s, line)
        if not lam_s < sigma < lam_f:
            raise NumericalError(
                f"crossing inequalities fail at s={s:.6g}: "
                f"{lam_s:.6g} < {sigma:.6g} < {lam_f:.6g} expected"
            )
    return ShockTriple(Um, Up, float(sigma), LaxTag.CROSSING)


# ---------------------------------------------------------------------------
# identity-matrix surface


@dataclass
class UCSurfaceIdentity:
    """Sampled undercompressive surface over one invariant line.

    ``curves_minus[i]`` and ``curves_plus[i]`` are the left- and
    right-coordinate representations of the shock family with right state
    ``s_right_values[i]``: arrays of rows ``(s_w, s_o, sigma)``.
    ``boundaries[tag]["minus"/"plus"]`` are the boundary polylines.
    """

    vertex: str
    nu: float
    regime: str  # "contact" (1<nu<=8), "high" (nu>8), or "low" (nu<=1)
    s_right_values: np.ndarray
    curves_minus: list[np.ndarray] = field(default_factory=list)
    curves_plus: list[np.ndarray] = field(default_factory=list)
    boundaries: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    compat_loss_points: Optional[np.ndarray] = None  # rows (s, sigma)

    def boundary_tags(self) -> list[str]:
        return [t for t in BOUNDARY_TAGS if t in self.boundaries]

    def corner_rows(self) -> dict[str, np.ndarray]:
        """First and last row of each boundary polyline, keyed by tag/side."""
        out = {}
        for tag, sides in self.boundaries.items():
            for side, arr in sides.items():
                out[f"{tag}_{side}_start"] = arr[0]
                out[f"{tag}_{side}_end"] = arr[-1]
        return out


def _regime(nu: float) -> str:
    if nu > 8.0:
        return "high"
    if nu > 1.0:
        return "contact"
    return "low"


def _row(line: InvariantLine, s: float, sigma: float) -> list[float]:
    U = line.embed(s)
    return [float(U[0]), float(U[1]), float(sigma)]


def build_surface_identity(
    line: InvariantLine,
    n_m: int = 64,
    n_s: int = 21,
    mixed_contact_s: Optional[float] = None,
) -> UCSurfaceIdentity:
    """Sample the identity-diffusion undercompressive surface of a line.

    Right states are sampled uniformly over the admissible range with the
    regime's corner states (double contact seam, umbilic limit, edge
    state) inserted exactly so boundary endpoints are exact.  When
    ``mixed_contact_s`` is given (numerically located mixed double
    contact), the raw point set of the compatibility-loss diagnostic is
    attached: shock speeds of every interval state for right states
    beyond it.
    """
    if n_m < 2:
        raise OutOfRange("n_m must be at least 2")
    nu = line.nu
    ds = distinguished_states(line)
    s_u = ds.s_umbilic
    regime = _regime(nu)

    lo = s_u if regime != "low" else 0.5
    samples = set(np.linspace(lo, 1.0, n_m + 1)[1:])
    samples.add(1.0)
    if regime == "low" and nu < 1.0:
        samples.add(0.5)
    if regime == "contact":
        samples.add(ds.s_contact_plus)
    s_values = np.array(sorted(samples))
    if regime != "low":
        s_values = s_values[s_values > s_u]

    surf = UCSurfaceIdentity(
        vertex=line.vertex, nu=nu, regime=regime, s_right_values=s_values
    )

    scb_m, scb_p = [], []
    fcb_m, fcb_p = [], []
    ucb_m, ucb_p = [], []

    # exact umbilic-limit corner of SCB (and FCB/UCB depending on regime)
    scb_m.append(_row(line, s_u, 2.0))
    scb_p.append(_row(line, s_u if regime != "low" else 0.5, 2.0))
    if regime in ("contact", "high"):
        fcb_m.append(_row(line, s_u, 2.0))
        fcb_p.append(_row(line, s_u, 2.0))
    if regime == "low":
        ucb_m.append(_row(line, s_u, 2.0))
        ucb_p.append(_row(line, 0.5, 2.0))

    for s_m in s_values:
        iv = uc_interval(line, float(s_m))
        ss = np.linspace(iv.s_fast, iv.s_slow, n_s)
        sig = effective_sigma(ss, s_m, nu)
        pts = line.embed(ss)
        surf.curves_minus.append(
            np.column_stack([pts[:, 0], pts[:, 1], sig])
        )
        Uplus = line.embed(float(s_m))
        surf.curves_plus.append(
            np.column_stack(
                [np.full(n_s, Uplus[0]), np.full(n_s, Uplus[1]), sig]
            )
        )

        sig_slow = float(effective_sigma(iv.s_slow, s_m, nu))
        scb_m.append(_row(line, iv.s_slow, sig_slow))
        scb_p.append(_row(line, s_m, sig_slow))
        sig_fast = float(effective_sigma(iv.s_fast, s_m, nu))
        if iv.case_tag == "A":
            fcb_m.append(_row(line, iv.s_fast, sig_fast))
            fcb_p.append(_row(line, s_m, sig_fast))
        else:
            ucb_m.append(_row(line, iv.s_fast, sig_fast))
            ucb_p.append(_row(line, s_m, sig_fast))

    if regime == "contact":
        # exact double-contact seam corner shared by FCB and UCB
        sig_seam = float(effective_sigma(ds.s_contact_minus, ds.s_contact_plus, nu))
        ucb_m.insert(0, _row(line, ds.s_contact_minus, sig_seam))
        ucb_p.insert(0, _row(line, ds.s_contact_plus, sig_seam))

    surf.boundaries["SCB"] = {
        "minus": np.array(scb_m),
        "plus": np.array(scb_p),
    }
    if fcb_m:
        surf.boundaries["FCB"] = {
            "minus": np.array(fcb_m),
            "plus": np.array(fcb_p),
        }
    if ucb_m:
        surf.boundaries["UCB"] = {
            "minus": np.array(ucb_m),
            "plus": np.array(ucb_p),
        }

    # genuine undercompressive boundary: the edge-state shock family
    iv_edge = uc_interval(line, 1.0)
    ss = np.linspace(iv_edge.s_fast, iv_edge.s_slow, max(n_s, 8))
    sig = effective_sigma(ss, 1.0, nu)
    pts = line.embed(ss)
    edge = line.embed(1.0)
    surf.boundaries["GUB"] = {
        "minus": np.column_stack([pts[:, 0], pts[:, 1], sig]),
        "plus": np.column_stack(
            [np.full(ss.size, edge[0]), np.full(ss.size, edge[1]), sig]
        ),
    }

    if mixed_contact_s is not None:
        rows = []
        for s_m in s_values[s_values >= mixed_contact_s - 1e-12]:
            iv = uc_interval(line, float(s_m))
            ss = np.linspace(iv.s_fast, iv.s_slow, n_s)
            for s, sg in zip(ss, effective_sigma(ss, s_m, nu)):
                rows.append([float(s), float(sg)])
        if rows:
            surf.compat_loss_points = np.array(rows)
    return surf


# ---------------------------------------------------------------------------
# transitional rarefactions


@dataclass(frozen=True)
class WaveLeg:
    kind: str  # "R_s", "R_f", "S_s", "S_f", "S_u" with "'" prefix/suffix for char limits
    start: np.ndarray
    end: np.ndarray
    v_start: float
    v_end: float


@dataclass(frozen=True)
class WaveSequence:
    legs: tuple[WaveLeg, ...]

    def is_speed_compatible(self, tol: float = 1e-12) -> bool:
        for a, b in zip(self.legs, self.legs[1:]):
            if a.v_end > b.v_start + tol:
                return False
        return True


def transitional_rarefaction(
    line: InvariantLine, s_left: float, s_m: float
) -> WaveSequence:
    """Fast-then-slow rarefaction through the umbilic point, with the
    left-characteristic slow shock tail once the right state passes the
    inflection point.

    Only available for viscosity ratio below one; the right state must
    lie between the umbilic point and its extension at s = 1/2.
    """
    nu = line.nu
    if nu >= 1.0:
        raise OutOfRange(f"transitional rarefactions need nu < 1, got {nu:.6g}")
    ds = distinguished_states(line)
    s_u = ds.s_umbilic
    if not 0.0 <= s_left < s_u:
        raise OutOfRange(f"s_left={s_left:.6g} must lie in [0, {s_u:.6g})")
    if not s_u < s_m <= 0.5:
        raise OutOfRange(f"s_M={s_m:.6g} must lie in ({s_u:.6g}, 0.5]")

    def lam_tangent(s):
        # line-tangent characteristic speed f'(s)
        return float(effective_sigma(s, s, nu))

    legs = [
        WaveLeg(
            "R_f",
            line.embed(s_left),
            line.embed(s_u),
            lam_tangent(s_left),
            2.0,
        )
    ]
    if s_m <= ds.s_inflection:
        legs.append(
            WaveLeg("R_s", line.embed(s_u), line.embed(s_m), 2.0, lam_tangent(s_m))
        )
        return WaveSequence(tuple(legs))

    if abs(2.0 * s_m - 1.0) < 1e-12:
        s_m3 = s_u
    else:
        roots = solve_quadratic(
            (2.0 * s_m - 1.0) * (nu + 1.0), -2.0 * s_m * (nu + 1.0), nu
        )
        inside = [r for r in roots if 0.0 <= r <= 1.0]
        if not inside:
            raise NumericalError(f"no admissible intermediate state for s_M={s_m:.6g}")
        s_m3 = inside[0]
    sigma = float(effective_sigma(s_m3, s_m, nu))
    if abs(sigma - lam_tangent(s_m3)) > 1e-9 * (1.0 + abs(sigma)):
        raise NumericalError("intermediate state is not left-characteristic")
    legs.append(
        WaveLeg("R_s", line.embed(s_u), line.embed(s_m3), 2.0, lam_tangent(s_m3))
    )
    legs.append(
        WaveLeg("'S_s", line.embed(s_m3), line.embed(s_m), sigma, sigma)
    )
    return WaveSequence(tuple(legs))
