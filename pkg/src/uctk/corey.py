"""Corey quadratic-permeability model for three-phase flow.

States are length-2 arrays ``(s_w, s_o)`` of water and oil saturations in
the saturation triangle ``s_w >= 0, s_o >= 0, s_w + s_o <= 1``; the gas
saturation is implied, ``s_g = 1 - s_w - s_o``.  With quadratic relative
permeabilities ``k_ri = s_i**2`` the fractional flow of phase ``i`` is

    f_i = (s_i**2 / mu_i) / sum_j (s_j**2 / mu_j),   i, j in {w, o, g}.

This module provides the flux, its analytic Jacobian and eigenstructure,
the umbilic point (the interior state where the two characteristic speeds
coincide), its type classification, and Rankine-Hugoniot helpers shared by
every other module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    CoincidentStates,
    ComplexEigenvalues,
    InconsistentSpeeds,
    ValidationError,
)

__all__ = [
    "FluidParams",
    "EigenData",
    "UmbilicType",
    "flux",
    "jacobian",
    "eigen",
    "umbilic_point",
    "classify_umbilic",
    "viscosity_ratios",
    "rh_residual",
    "shock_speed",
    "in_triangle",
]

_UMBILIC_TOL = 1e-10
_BORDER_TOL = 1e-12


@dataclass(frozen=True)
class FluidParams:
    """Phase viscosities and capillary-pressure constants.

    All five values must be strictly positive.  The capillary constants
    ``c_ow`` and ``c_og`` only matter for the capillarity viscosity matrix;
    they default to 1 (the values used throughout the capillarity runs).
    """

    mu_w: float
    mu_o: float
    mu_g: float
    c_ow: float = 1.0
    c_og: float = 1.0

    def __post_init__(self):
        for name in ("mu_w", "mu_o", "mu_g", "c_ow", "c_og"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0.0):
                raise ValidationError(f"{name} must be a positive finite number, got {v!r}")

    @property
    def mu(self) -> tuple[float, float, float]:
        return (self.mu_w, self.mu_o, self.mu_g)


class UmbilicType(Enum):
    I = "I"
    II_O = "II_O"
    II_W = "II_W"
    II_G = "II_G"
    BORDER = "border"


@dataclass(frozen=True)
class EigenData:
    """Eigenstructure of the flux Jacobian at one state.

    ``lam_s <= lam_f``; right eigenvectors are unit length with the first
    nonzero component positive; left eigenvectors follow the same
    convention and satisfy ``l_i . r_j = 0`` for ``i != j`` away from the
    umbilic point.
    """

    lam_s: float
    lam_f: float
    r_s: np.ndarray
    r_f: np.ndarray
    l_s: np.ndarray
    l_f: np.ndarray

    @property
    def coincident(self) -> bool:
        scale = max(abs(self.lam_s), abs(self.lam_f), 1.0)
        return abs(self.lam_f - self.lam_s) <= _UMBILIC_TOL * scale


def in_triangle(U, tol: float = 1e-12) -> bool:
    sw, so = float(U[0]), float(U[1])
    return sw >= -tol and so >= -tol and sw + so <= 1.0 + tol


def _mobilities(U, p: FluidParams):
    U = np.asarray(U, dtype=float)
    sw = U[..., 0]
    so = U[..., 1]
    sg = 1.0 - sw - so
    lw = sw * sw / p.mu_w
    lo = so * so / p.mu_o
    lg = sg * sg / p.mu_g
    return sw, so, sg, lw, lo, lg


def flux(U, p: FluidParams) -> np.ndarray:
    """Fractional flows ``(f_w, f_o)``; broadcasts over leading axes."""
    sw, so, sg, lw, lo, lg = _mobilities(U, p)
    lt = lw + lo + lg
    return np.stack([lw / lt, lo / lt], axis=-1)


def jacobian(U, p: FluidParams) -> np.ndarray:
    """Analytic Jacobian ``d(f_w, f_o)/d(s_w, s_o)``, shape ``(..., 2, 2)``.

    Quotient rule on the fractional flows; matches central finite
    differences of :func:`flux` to second order.
    """
    sw, so, sg, lw, lo, lg = _mobilities(U, p)
    lt = lw + lo + lg
    fw = lw / lt
    fo = lo / lt
    dlw_dw = 2.0 * sw / p.mu_w
    dlo_do = 2.0 * so / p.mu_o
    dlg = -2.0 * sg / p.mu_g  # same for both saturation derivatives
    dlt_dw = dlw_dw + dlg
    dlt_do = dlo_do + dlg
    a11 = (dlw_dw - fw * dlt_dw) / lt
    a12 = (-fw * dlt_do) / lt
    a21 = (-fo * dlt_dw) / lt
    a22 = (dlo_do - fo * dlt_do) / lt
    out = np.stack(
        [np.stack([a11, a12], axis=-1), np.stack([a21, a22], axis=-1)], axis=-2
    )
    return out


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Deterministic orientation: first component above 1e-13 made positive."""
    if abs(v[0]) > 1e-13:
        return v if v[0] > 0.0 else -v
    return v if v[1] > 0.0 else -v


def _unit(v: np.ndarray) -> np.ndarray:
    return v / math.hypot(v[0], v[1])


def eigen(U, p: FluidParams, complex_tol: float = 1e-12) -> EigenData:
    """Eigenvalues and unit eigenvectors of the flux Jacobian at one state.

    Raises ComplexEigenvalues if the discriminant is negative beyond
    ``-complex_tol`` times its scale (cannot happen for the Corey quadratic
    model; indicates a caller bug or exotic parameters).

    Exactly at the umbilic point the eigenspace is resolved by a rank
    decision on ``A - lam*I`` (singular values below 1e-10 of the largest
    treated as zero): rank 0 returns the coordinate axes, rank 1 the null
    direction plus its orthogonal complement.
    """
    A = jacobian(U, p)
    a11, a12 = float(A[0, 0]), float(A[0, 1])
    a21, a22 = float(A[1, 0]), float(A[1, 1])
    tr = a11 + a22
    disc = (a11 - a22) ** 2 + 4.0 * a12 * a21
    scale = max(a11 * a11, a22 * a22, abs(a12 * a21), 1e-300)
    if disc < -complex_tol * scale:
        raise ComplexEigenvalues(f"negative discriminant {disc} at state {np.asarray(U)}")
    disc = max(disc, 0.0)
    root = math.sqrt(disc)
    lam_s = 0.5 * (tr - root)
    lam_f = 0.5 * (tr + root)

    if root <= _UMBILIC_TOL * max(abs(lam_s), abs(lam_f), 1.0):
        M = np.array([[a11 - lam_s, a12], [a21, a22 - lam_s]])
        _, sv, vt = np.linalg.svd(M)
        if sv[0] <= 1e-10 * max(sv[0], 1.0) or sv[0] <= 1e-10:
            r_s = np.array([1.0, 0.0])
            r_f = np.array([0.0, 1.0])
        else:
            # defective: null space direction plus its orthogonal complement
            r_s = _fix_sign(vt[1])
            r_f = _fix_sign(np.array([-r_s[1], r_s[0]]))
        return EigenData(lam_s, lam_f, r_s, r_f, r_s.copy(), r_f.copy())

    def right_vec(lam):
        v1 = np.array([a12, lam - a11])
        v2 = np.array([lam - a22, a21])
        v = v1 if np.dot(v1, v1) >= np.dot(v2, v2) else v2
        return _fix_sign(_unit(v))

    def left_vec(lam):
        v1 = np.array([a21, lam - a11])
        v2 = np.array([lam - a22, a12])
        v = v1 if np.dot(v1, v1) >= np.dot(v2, v2) else v2
        return _fix_sign(_unit(v))

    return EigenData(
        lam_s,
        lam_f,
        right_vec(lam_s),
        right_vec(lam_f),
        left_vec(lam_s),
        left_vec(lam_f),
    )


def umbilic_point(p: FluidParams) -> np.ndarray:
    """The coincidence state ``(mu_w, mu_o) / (mu_w + mu_o + mu_g)``."""
    tot = p.mu_w + p.mu_o + p.mu_g
    return np.array([p.mu_w / tot, p.mu_o / tot])


def viscosity_ratios(p: FluidParams) -> dict[str, float]:
    """``nu_Gamma = mu_alphabeta / mu_gamma`` for each vertex Gamma."""
    return {
        "G": (p.mu_w + p.mu_o) / p.mu_g,
        "W": (p.mu_o + p.mu_g) / p.mu_w,
        "O": (p.mu_w + p.mu_g) / p.mu_o,
    }


def classify_umbilic(p: FluidParams, border_tol: float = _BORDER_TOL) -> UmbilicType:
    """Type I if every viscosity ratio exceeds one, II_gamma if exactly
    ``nu_gamma`` lies below one, border if any ratio equals one."""
    nus = viscosity_ratios(p)
    if any(abs(v - 1.0) <= border_tol for v in nus.values()):
        return UmbilicType.BORDER
    below = [k for k, v in nus.items() if v < 1.0]
    if not below:
        return UmbilicType.I
    assert len(below) == 1  # two ratios below one would force a negative viscosity
    return UmbilicType[f"II_{below[0]}"]


def rh_residual(Um, Up, sigma: float, p: FluidParams) -> np.ndarray:
    """Rankine-Hugoniot residual ``F(Up) - F(Um) - sigma*(Up - Um)``."""
    Um = np.asarray(Um, dtype=float)
    Up = np.asarray(Up, dtype=float)
    return flux(Up, p) - flux(Um, p) - sigma * (Up - Um)


def shock_speed(
    Um,
    Up,
    p: FluidParams,
    rel_tol: float = 1e-8,
    min_sep: float = 1e-10,
) -> float:
    """Shock speed of a pair on the same Hugoniot locus.

    The speed comes from the saturation component with the larger jump;
    the other component must agree to ``rel_tol*(1+|sigma|)`` or the pair
    is rejected with InconsistentSpeeds.
    """
    Um = np.asarray(Um, dtype=float)
    Up = np.asarray(Up, dtype=float)
    dU = Up - Um
    if math.hypot(dU[0], dU[1]) <= min_sep:
        raise CoincidentStates(f"states coincide within {min_sep}")
    dF = flux(Up, p) - flux(Um, p)
    k = 0 if abs(dU[0]) >= abs(dU[1]) else 1
    sigma = dF[k] / dU[k]
    other = 1 - k
    resid = abs(dF[other] - sigma * dU[other])
    if resid > rel_tol * (1.0 + abs(sigma)):
        raise InconsistentSpeeds(
            f"component speeds disagree: residual {resid:.3e} at sigma={sigma:.6g}"
        )
    return float(sigma)
