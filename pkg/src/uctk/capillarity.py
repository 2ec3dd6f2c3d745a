"""Capillarity viscosity matrix and the rescaled traveling-wave field.

The viscosity matrix is ``B(U) = Q(U) P'(U)`` with

    Q = [[lam_w (1-f_w), -lam_w f_o],
         [-lam_o f_w,    lam_o (1-f_o)]],
    P' = [[sig + tau, tau],
          [tau,       tau]],
    sig = (c_ow/2) (1+s_w) / s_w**(3/2),
    tau = (c_og/2) (1+s_g) / s_g**(3/2).

``sig`` and ``tau`` blow up on the boundary of the triangle, but every
entry of ``B`` pairs them with vanishing mobilities, so ``B`` itself (and
its adjugate) extends continuously to the closed triangle.  Traveling
waves of the parabolic regularization solve ``B(U) dU/dxi = G(U)`` with

    G(U) = F(U) - F(U-) - sigma (U - U-);

rescaling the independent variable by ``det B`` gives the polynomial
(division-free) planar field ``dU/deta = Adj(B(U)) G(U)`` used for all
connection finding.  Identity mode keeps ``dU/deta = G(U)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corey import FluidParams, flux, jacobian
from .errors import BoundaryState, Degenerate, NotEquilibrium

__all__ = [
    "ViscosityMode",
    "EquilibriumType",
    "TwField",
    "q_matrix",
    "p_prime",
    "capillarity_matrix",
    "capillarity_matrix_safe",
    "capillarity_matrix_grad",
    "adjugate",
    "classify_equilibrium",
]

_EPS_BOUNDARY = 1e-12


class ViscosityMode(Enum):
    IDENTITY = "identity"
    CAPILLARITY = "capillarity"


class EquilibriumType(Enum):
    REPELLER = "repeller"
    ATTRACTOR = "attractor"
    SADDLE = "saddle"
    REPELLER_SADDLE = "repeller-saddle"
    SADDLE_ATTRACTOR = "saddle-attractor"
    CENTER_LIKE = "center-like"


def _check_interior(U):
    sw, so = float(U[0]), float(U[1])
    sg = 1.0 - sw - so
    if sw <= _EPS_BOUNDARY or sg <= _EPS_BOUNDARY:
        raise BoundaryState(
            f"capillary coefficients diverge at s_w={sw:.3e}, s_g={sg:.3e}"
        )


def sigma_tau(U, p: FluidParams) -> tuple[float, float]:
    """Raw capillary-pressure derivative coefficients (interior only)."""
    _check_interior(U)
    sw, so = float(U[0]), float(U[1])
    sg = 1.0 - sw - so
    sig = 0.5 * p.c_ow * (1.0 + sw) / sw**1.5
    tau = 0.5 * p.c_og * (1.0 + sg) / sg**1.5
    return sig, tau


def p_prime(U, p: FluidParams) -> np.ndarray:
    sig, tau = sigma_tau(U, p)
    return np.array([[sig + tau, tau], [tau, tau]])


def q_matrix(U, p: FluidParams) -> np.ndarray:
    sw, so = float(U[0]), float(U[1])
    lw = sw * sw / p.mu_w
    lo = so * so / p.mu_o
    fw, fo = flux(U, p)
    return np.array([[lw * (1.0 - fw), -lw * fo], [-lo * fw, lo * (1.0 - fo)]])


def capillarity_matrix(U, p: FluidParams) -> np.ndarray:
    """``B = Q P'`` at a strictly interior state.

    Raises BoundaryState within 1e-12 of the ``s_w = 0`` or ``s_g = 0``
    edges; use :func:`capillarity_matrix_safe` for the continuous
    extension to the closed triangle.
    """
    return q_matrix(U, p) @ p_prime(U, p)


def capillarity_matrix_safe(U, p: FluidParams) -> np.ndarray:
    """``B`` via boundary-continuous groupings; broadcasts over leading axes.

    Writing ``Ew = lam_w * sig`` and ``Tg = f_g * tau`` (both O(sqrt(s))
    near their edges) the entries are

        B = [[Ew (1-f_w) + lam_w Tg, lam_w Tg],
             [-(lam_o/lam_T) Ew,     lam_o Tg]] + [[0,0],[Tg lam_o, 0]] ...

    see the source for the exact expressions.
    """
    U = np.asarray(U, dtype=float)
    sw = np.maximum(U[..., 0], 0.0)
    so = np.maximum(U[..., 1], 0.0)
    sg = np.maximum(1.0 - U[..., 0] - U[..., 1], 0.0)
    lw = sw * sw / p.mu_w
    lo = so * so / p.mu_o
    lg = sg * sg / p.mu_g
    lt = lw + lo + lg
    fw = lw / lt
    ew = 0.5 * p.c_ow / p.mu_w * (1.0 + sw) * np.sqrt(sw)  # lam_w * sig
    tg = 0.5 * p.c_og / p.mu_g * (1.0 + sg) * np.sqrt(sg) / lt  # f_g * tau
    b00 = ew * (1.0 - fw) + lw * tg
    b01 = lw * tg
    b10 = -(lo / lt) * ew + lo * tg
    b11 = lo * tg
    return np.stack(
        [np.stack([b00, b01], axis=-1), np.stack([b10, b11], axis=-1)], axis=-2
    )


def capillarity_matrix_grad(U, p: FluidParams) -> tuple[np.ndarray, np.ndarray]:
    """``B`` and its saturation gradient ``dB[..., i, j, k] = dB_ij/ds_k``.

    Uses the same boundary-continuous groupings as
    :func:`capillarity_matrix_safe`; the gradient has the usual sqrt kink
    on the boundary, so callers clip saturations away from the edges.
    """
    U = np.asarray(U, dtype=float)
    sw = np.maximum(U[..., 0], 1e-300)
    so = U[..., 1]
    sg = np.maximum(1.0 - U[..., 0] - U[..., 1], 1e-300)
    lw = sw * sw / p.mu_w
    lo = so * so / p.mu_o
    lg = sg * sg / p.mu_g
    lt = lw + lo + lg
    fw = lw / lt

    dlw = 2.0 * sw / p.mu_w  # d lam_w / d s_w
    dlo = 2.0 * so / p.mu_o  # d lam_o / d s_o
    dlg = -2.0 * sg / p.mu_g  # d lam_g / d s_w = d lam_g / d s_o
    dlt_w = dlw + dlg
    dlt_o = dlo + dlg
    dfw_w = (dlw - fw * dlt_w) / lt
    dfw_o = (-fw * dlt_o) / lt

    rw = np.sqrt(sw)
    rg = np.sqrt(sg)
    cw = 0.5 * p.c_ow / p.mu_w
    cg = 0.5 * p.c_og / p.mu_g
    ew = cw * (1.0 + sw) * rw
    dew_w = cw * (rw + 0.5 * (1.0 + sw) / rw)
    gg = cg * (1.0 + sg) * rg  # f_g * tau * lam_T
    dgg_g = cg * (rg + 0.5 * (1.0 + sg) / rg)
    tg = gg / lt
    dtg_w = (-dgg_g - tg * dlt_w) / lt
    dtg_o = (-dgg_g - tg * dlt_o) / lt

    lo_lt = lo / lt
    dlolt_w = -lo_lt * dlt_w / lt
    dlolt_o = (dlo - lo_lt * dlt_o) / lt

    b00 = ew * (1.0 - fw) + lw * tg
    b01 = lw * tg
    b10 = -lo_lt * ew + lo * tg
    b11 = lo * tg

    db = np.empty(np.shape(sw) + (2, 2, 2))
    db[..., 0, 0, 0] = dew_w * (1.0 - fw) - ew * dfw_w + dlw * tg + lw * dtg_w
    db[..., 0, 0, 1] = -ew * dfw_o + lw * dtg_o
    db[..., 0, 1, 0] = dlw * tg + lw * dtg_w
    db[..., 0, 1, 1] = lw * dtg_o
    db[..., 1, 0, 0] = -dlolt_w * ew - lo_lt * dew_w + lo * dtg_w
    db[..., 1, 0, 1] = -dlolt_o * ew + lo * dtg_o + dlo * tg
    db[..., 1, 1, 0] = lo * dtg_w
    db[..., 1, 1, 1] = dlo * tg + lo * dtg_o

    B = np.stack(
        [np.stack([b00, b01], axis=-1), np.stack([b10, b11], axis=-1)], axis=-2
    )
    return B, db


def adjugate(M: np.ndarray) -> np.ndarray:
    """Adjugate of 2x2 matrices (transpose of the cofactor matrix)."""
    out = np.empty_like(M)
    out[..., 0, 0] = M[..., 1, 1]
    out[..., 0, 1] = -M[..., 0, 1]
    out[..., 1, 0] = -M[..., 1, 0]
    out[..., 1, 1] = M[..., 0, 0]
    return out


@dataclass(frozen=True)
class TwField:
    """Autonomous traveling-wave field on the closed saturation triangle.

    Identity mode: ``V(x) = G(x) = F(x) - F(Um) - sigma (x - Um)``.
    Capillarity mode: ``V(x) = Adj(B(x)) G(x)``.

    Equilibria coincide with the Hugoniot partners of ``Um`` at speed
    ``sigma`` (plus ``Um`` itself).
    """

    Um: np.ndarray
    sigma: float
    p: FluidParams
    mode: ViscosityMode = ViscosityMode.IDENTITY

    def g_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return flux(x, self.p) - flux(self.Um, self.p) - self.sigma * (x - self.Um)

    def __call__(self, x) -> np.ndarray:
        g = self.g_vector(x)
        if self.mode is ViscosityMode.IDENTITY:
            return g
        adj = adjugate(capillarity_matrix_safe(x, self.p))
        return adj @ g

    def compiled(self):
        """Scalar fast path ``f(x, y) -> (vx, vy)`` for the integrators."""
        mw, mo, mg = self.p.mu_w, self.p.mu_o, self.p.mu_g
        x0, y0 = float(self.Um[0]), float(self.Um[1])
        fm = flux(self.Um, self.p)
        fw0, fo0 = float(fm[0]), float(fm[1])
        sig = float(self.sigma)
        sqrt = math.sqrt

        if self.mode is ViscosityMode.IDENTITY:

            def field(x, y):
                sg = 1.0 - x - y
                lw = x * x / mw
                lo = y * y / mo
                lt = lw + lo + sg * sg / mg
                return lw / lt - fw0 - sig * (x - x0), lo / lt - fo0 - sig * (y - y0)

            return field

        cw = 0.5 * self.p.c_ow / mw
        cg = 0.5 * self.p.c_og / mg

        def field(x, y):
            sg = 1.0 - x - y
            sw = x if x > 0.0 else 0.0
            sgc = sg if sg > 0.0 else 0.0
            lw = x * x / mw
            lo = y * y / mo
            lt = lw + lo + sg * sg / mg
            g0 = lw / lt - fw0 - sig * (x - x0)
            g1 = lo / lt - fo0 - sig * (y - y0)
            ew = cw * (1.0 + sw) * sqrt(sw)
            tg = cg * (1.0 + sgc) * sqrt(sgc) / lt
            fw = lw / lt
            b00 = ew * (1.0 - fw) + lw * tg
            b01 = lw * tg
            b10 = (lo / lt) * (tg * lt - ew)
            b11 = lo * tg
            # Adj(B) * G
            return b11 * g0 - b01 * g1, b00 * g1 - b10 * g0

        return field

    def linearization(self, x, fd_step: float = 1e-7) -> np.ndarray:
        """Jacobian of the field at ``x``.

        Analytic via the product rule; falls back to central finite
        differences when the analytic entries are not finite (boundary
        sqrt kinks).
        """
        x = np.asarray(x, dtype=float)
        dg = jacobian(x, self.p) - self.sigma * np.eye(2)
        if self.mode is ViscosityMode.IDENTITY:
            return dg
        try:
            B, db = capillarity_matrix_grad(x, self.p)
            adj = adjugate(B)
            g = self.g_vector(x)
            out = adj @ dg
            for k in range(2):
                out[:, k] += adjugate(db[..., k]) @ g
            if np.all(np.isfinite(out)):
                return out
        except FloatingPointError:
            pass
        out = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = fd_step
            out[:, k] = (self(x + e) - self(x - e)) / (2.0 * fd_step)
        return out


def classify_equilibrium(
    x,
    field: TwField,
    tol_sn: float = 1e-7,
    eq_tol: float = 1e-9,
) -> EquilibriumType:
    """Classify an equilibrium of the traveling-wave field.

    ``tol_sn`` is relative to the spectral radius of the linearization:
    an eigenvalue within ``tol_sn`` of zero marks a saddle-node
    (repeller-saddle or saddle-attractor depending on the other sign).
    """
    x = np.asarray(x, dtype=float)
    v = field(x)
    if math.hypot(v[0], v[1]) >= eq_tol:
        raise NotEquilibrium(f"field norm {math.hypot(v[0], v[1]):.3e} at {x}")
    A = field.linearization(x)
    eig = np.linalg.eigvals(A)
    rho = max(abs(eig[0]), abs(eig[1]))
    if rho <= 1e-14:
        raise Degenerate(f"both linearization eigenvalues vanish at {x}")
    if abs(eig.imag).max() > tol_sn * rho:
        re = eig.real
        if abs(re).max() <= tol_sn * rho:
            return EquilibriumType.CENTER_LIKE
        return EquilibriumType.REPELLER if re[0] > 0.0 else EquilibriumType.ATTRACTOR
    lam = np.sort(eig.real)
    near_zero = [abs(v) <= tol_sn * rho for v in lam]
    if all(near_zero):
        raise Degenerate(f"both eigenvalues within tol_sn of zero at {x}")
    if near_zero[0]:
        return (
            EquilibriumType.REPELLER_SADDLE
            if lam[1] > 0.0
            else EquilibriumType.SADDLE_ATTRACTOR
        )
    if near_zero[1]:
        return (
            EquilibriumType.SADDLE_ATTRACTOR
            if lam[0] < 0.0
            else EquilibriumType.REPELLER_SADDLE
        )
    if lam[0] > 0.0:
        return EquilibriumType.REPELLER
    if lam[1] < 0.0:
        return EquilibriumType.ATTRACTOR
    return EquilibriumType.SADDLE
