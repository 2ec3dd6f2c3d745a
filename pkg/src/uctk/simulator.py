"""Crank-Nicolson / Newton solver for the regularized two-equation system

    dU/dt + dF(U)/dx = eps * d(B(U) dU/dx)/dx

with Riemann initial data, plus wave-group extraction from the final
self-similar profile.  Space and time are both second order: centered
interface fluxes ``(F_j + F_{j+1})/2``, midpoint diffusion coefficients
``B((U_j + U_{j+1})/2)``, trapezoidal averaging in time, and a damped
Newton iteration with the analytic block-tridiagonal Jacobian solved as a
banded system.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded
from scipy.linalg.lapack import dgbtrf, dgbtrs

from .capillarity import ViscosityMode, capillarity_matrix_grad, capillarity_matrix_safe
from .corey import FluidParams, eigen, flux, jacobian
from .errors import NewtonDiverged, ValidationError, CFLWarning

__all__ = [
    "SimConfig",
    "Profile",
    "simulate",
    "extract_wave_groups",
    "default_half_width",
]


@dataclass(frozen=True)
class SimConfig:
    """Riemann-problem run configuration.

    The grid covers ``[-X, X]`` with the jump at ``x = 0``; ``X=None``
    picks 1.2 * t_final * (max characteristic speed) so no wave reaches
    the Dirichlet boundaries.
    """

    left: np.ndarray
    right: np.ndarray
    dx: float = 0.01
    dt: float = 0.01
    t_final: float = 100.0
    eps: float = 1.0
    mode: ViscosityMode = ViscosityMode.CAPILLARITY
    half_width: Optional[float] = None
    newton_tol: float = 1e-10
    newton_max: int = 30
    clip: float = 1e-9
    store_times: tuple = ()

    def __post_init__(self):
        for name in ("dx", "dt", "t_final", "eps"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive and finite, got {v!r}")
        for name in ("left", "right"):
            U = np.asarray(getattr(self, name), dtype=float)
            if U.shape != (2,) or U.min() < -1e-12 or U.sum() > 1.0 + 1e-12:
                raise ValidationError(f"{name} must be a state inside the triangle")
            object.__setattr__(self, name, U)
        if self.half_width is not None and self.half_width <= 0:
            raise ValidationError("half_width must be positive")


@dataclass
class Profile:
    """Stored saturation profiles; ``states[k]`` belongs to ``times[k]``."""

    x: np.ndarray
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)  # arrays (n, 2)
    newton_iterations: int = 0
    conservation_residuals: list = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def rows(self) -> np.ndarray:
        """Flat CSV rows (t, x, v, s_w, s_o)."""
        out = []
        for t, U in zip(self.times, self.states):
            v = self.x / t if t > 0 else np.zeros_like(self.x)
            out.append(
                np.column_stack([np.full_like(self.x, t), self.x, v, U[:, 0], U[:, 1]])
            )
        return np.vstack(out)


def default_half_width(cfg: SimConfig, p: FluidParams, samples: int = 200) -> float:
    """1.2 * t_final * (max characteristic speed observed along the
    segment of states between the Riemann data)."""
    best = 0.0
    for t in np.linspace(0.0, 1.0, samples):
        U = cfg.left + t * (cfg.right - cfg.left)
        best = max(best, eigen(U, p).lam_f)
    return 1.2 * cfg.t_final * best


def _clip_interior(Umid: np.ndarray, clip: float) -> np.ndarray:
    """Pull interface states a hair inside the triangle: the capillary
    coefficients have square-root kinks on the boundary."""
    Uc = Umid.copy()
    Uc[:, 0] = np.clip(Uc[:, 0], clip, 1.0)
    Uc[:, 1] = np.clip(Uc[:, 1], clip, 1.0)
    sg = 1.0 - Uc[:, 0] - Uc[:, 1]
    shrink = np.where(sg < clip, (1.0 - clip) / np.maximum(Uc[:, 0] + Uc[:, 1], 1e-30), 1.0)
    Uc *= shrink[:, None]
    return Uc


def simulate(cfg: SimConfig, p: FluidParams) -> Profile:
    """Run the Crank-Nicolson scheme to ``t_final``.

    Newton iterates to ``newton_tol`` (max-norm of the residual), halving
    the update while the residual grows.  A step whose Newton iteration
    stalls is retried as two half steps (recursively, a few levels deep);
    NewtonDiverged is raised only when that fails too.  Boundary cells
    hold the Dirichlet data.
    """
    X = cfg.half_width if cfg.half_width is not None else default_half_width(cfg, p)
    n = int(round(2.0 * X / cfg.dx)) + 1
    x = -X + cfg.dx * np.arange(n)
    U = np.where((x < 0.0)[:, None], cfg.left[None, :], cfg.right[None, :]).astype(float)

    lam_max = max(eigen(cfg.left, p).lam_f, eigen(cfg.right, p).lam_f)
    if lam_max * cfg.dt / cfg.dx > 20.0:
        warnings.warn(
            f"waves cross ~{lam_max * cfg.dt / cfg.dx:.0f} cells per step; "
            "the implicit scheme is stable but accuracy degrades",
            CFLWarning,
        )

    prof = Profile(x=x)
    store = sorted(set(float(t) for t in cfg.store_times))
    steps = int(round(cfg.t_final / cfg.dt))
    identity = cfg.mode is ViscosityMode.IDENTITY

    def band_slice(a, b, delta, m):
        # interleaved unknowns make each (a, b, neighbor) block a single
        # LAPACK band row with stride-2 columns
        row = 6 + a - b - 2 * delta
        start = 2 * (1 + delta) + b
        return row, slice(start, start + 2 * (m - 2), 2)

    def parts(V):
        """Flux, flux divergence, and diffusion term (no gradients)."""
        F = flux(V, p)
        conv = 0.5 * (F[2:] - F[:-2])
        dU = V[1:] - V[:-1]
        if identity:
            w = dU
        else:
            Umid = _clip_interior(0.5 * (V[1:] + V[:-1]), cfg.clip)
            B = capillarity_matrix_safe(Umid, p)
            w = np.einsum("nij,nj->ni", B, dU)
        diff = w[1:] - w[:-1]
        return F, conv, diff, w

    def diffusion_jacobian_parts(V):
        dU = V[1:] - V[:-1]
        Umid = _clip_interior(0.5 * (V[1:] + V[:-1]), cfg.clip)
        B, dB = capillarity_matrix_grad(Umid, p)
        dBdU = np.einsum("nijk,nj->nik", dB, dU)
        return B, dBdU

    def boundary_flux(F, w):
        fl = -(0.5 * (F[-1] + F[-2]) - 0.5 * (F[0] + F[1]))
        return fl + cfg.eps * (w[-1] - w[0]) / cfg.dx

    def advance(U, dt, depth=0, guess=None):
        """One Crank-Nicolson step of size dt on one cell range (the two
        end cells are held fixed); returns (U_new, None)."""
        m = U.shape[0]
        r = dt / cfg.dx
        q = cfg.eps * dt / (cfg.dx * cfg.dx)
        F0, conv0, diff0, w0 = parts(U)
        target = U[1:-1] - 0.5 * r * conv0 + 0.5 * q * diff0
        V = guess if guess is not None else U.copy()

        def residual(V):
            F, conv, diff, w = parts(V)
            res = V[1:-1] - target + 0.5 * r * conv - 0.5 * q * diff
            return res, F, conv, diff, w

        res, F, conv, diff, w = residual(V)
        rnorm = np.abs(res).max()
        # LAPACK banded LU storage: entry (i, j) lives in row kl+ku+i-j
        ab = np.zeros((10, 2 * m))
        lu = piv = None
        ok = rnorm < cfg.newton_tol
        eye = np.eye(2)
        stale = 0
        for _ in range(cfg.newton_max):
            if ok:
                break
            if lu is None or stale >= 5:
                ab[:] = 0.0
                ab[6, 0] = ab[6, 1] = ab[6, -1] = ab[6, -2] = 1.0
                J = jacobian(V, p)
                Jm = 0.25 * r * J[:-2]
                Jp = 0.25 * r * J[2:]
                if identity:
                    for a in range(2):
                        for b in range(2):
                            row, cols = band_slice(a, b, -1, m)
                            ab[row, cols] += -Jm[:, a, b] - 0.5 * q * eye[a, b]
                            row, cols = band_slice(a, b, 0, m)
                            ab[row, cols] += eye[a, b] + q * eye[a, b]
                            row, cols = band_slice(a, b, 1, m)
                            ab[row, cols] += Jp[:, a, b] - 0.5 * q * eye[a, b]
                else:
                    B, dBdU = diffusion_jacobian_parts(V)
                    Wp = B + 0.5 * dBdU
                    Wm = -B + 0.5 * dBdU
                    for a in range(2):
                        for b in range(2):
                            row, cols = band_slice(a, b, -1, m)
                            ab[row, cols] += -Jm[:, a, b] + 0.5 * q * Wm[:-1, a, b]
                            row, cols = band_slice(a, b, 0, m)
                            ab[row, cols] += eye[a, b] - 0.5 * q * (
                                Wm[1:, a, b] - Wp[:-1, a, b]
                            )
                            row, cols = band_slice(a, b, 1, m)
                            ab[row, cols] += Jp[:, a, b] - 0.5 * q * Wp[1:, a, b]
                lu, piv, info = dgbtrf(ab, 3, 3)
                if info != 0:
                    raise NewtonDiverged(f"banded factorization failed (info={info})")
                stale = 0
            full = np.zeros(2 * m)
            full[2:-2] = res.reshape(-1)
            delta, info = dgbtrs(lu, 3, 3, full, piv)
            if info != 0:
                raise NewtonDiverged(f"banded solve failed (info={info})")
            delta = delta.reshape(m, 2)
            scale = 1.0
            improved = False
            for _ in range(8):
                V_try = V - scale * delta
                res_t, F_t, conv_t, diff_t, w_t = residual(V_try)
                rn = np.abs(res_t).max()
                if rn < rnorm or rn < cfg.newton_tol:
                    V, res, rnorm = V_try, res_t, rn
                    F, conv, diff, w = F_t, conv_t, diff_t, w_t
                    improved = True
                    break
                scale *= 0.5
            if not improved:
                if stale == 0:
                    break  # even a fresh Jacobian made no progress
                lu = None  # stale factorization: rebuild and retry
                continue
            stale += 1
            prof.newton_iterations += 1
            ok = rnorm < cfg.newton_tol
        if not ok:
            if depth >= 8:
                raise NewtonDiverged(
                    f"Newton stalled at dt={dt:.3e}, residual {rnorm:.3e}"
                )
            U_half, _ = advance(U, 0.5 * dt, depth + 1)
            return advance(U_half, 0.5 * dt, depth + 1)

        # discrete conservation bookkeeping (trapezoidal boundary fluxes)
        mass_change = (V - U).sum(axis=0) * cfg.dx
        bflux = 0.5 * dt * (boundary_flux(F0, w0) + boundary_flux(F, w))
        prof.conservation_residuals.append(float(np.abs(mass_change - bflux).max()))
        return V, None

    def active_window(U):
        """Index range outside which the state still equals the Riemann
        data; the discrete update vanishes identically there, so the
        Newton system only needs the window (plus a safety pad)."""
        moved_l = np.abs(U - cfg.left[None, :]).max(axis=1) > 1e-13
        moved_r = np.abs(U - cfg.right[None, :]).max(axis=1) > 1e-13
        moved = moved_l & moved_r
        if not moved.any():
            k = int(np.argmax(x >= 0.0))
            lo, hi = k - 1, k + 1
        else:
            nz = np.nonzero(moved)[0]
            lo, hi = int(nz[0]), int(nz[-1])
        pad = 8 + int(math.ceil(lam_max * cfg.dt / cfg.dx))
        return max(lo - pad, 0), min(hi + pad, n - 1)

    t = 0.0
    U_prev = None
    for _ in range(steps):
        i0, i1 = active_window(U)
        sub = U[i0 : i1 + 1]
        guess = None
        if U_prev is not None and U_prev.shape == sub.shape:
            guess = sub + (sub - U_prev)
            np.clip(guess, 0.0, 1.0, out=guess)
            guess[0] = sub[0]
            guess[-1] = sub[-1]
        new_sub, _ = advance(sub, cfg.dt, guess=guess)
        U_prev = sub.copy()
        U = U.copy()
        U[i0 : i1 + 1] = new_sub
        t += cfg.dt
        while store and store[0] <= t + 1e-9:
            prof.times.append(store.pop(0))
            prof.states.append(U.copy())

    if not prof.times or abs(prof.times[-1] - t) > 1e-9:
        prof.times.append(t)
        prof.states.append(U.copy())

    bad = (U[:, 0] < -1e-9) | (U[:, 1] < -1e-9) | (U.sum(axis=1) > 1.0 + 1e-9)
    if bad.any():
        warnings.warn(f"{int(bad.sum())} samples left the triangle beyond 1e-9", CFLWarning)
    np.clip(U[:, 0], 0.0, 1.0, out=U[:, 0])
    np.clip(U[:, 1], 0.0, 1.0, out=U[:, 1])
    return prof


@dataclass(frozen=True)
class WaveGroup:
    v_start: float
    v_end: float


@dataclass(frozen=True)
class Plateau:
    state: np.ndarray
    v_start: float
    v_end: float


def extract_wave_groups(
    x: np.ndarray,
    t: float,
    U: np.ndarray,
    plateau_tol: float = 0.2,
    min_width: float = 0.05,
):
    """Plateaus and wave groups of a self-similar profile.

    A plateau is a maximal interval of the similarity variable
    ``v = x/t`` where ``|dU/dv|`` stays below ``plateau_tol`` for at
    least ``min_width``; wave groups are the gaps between consecutive
    plateaus.  Returns ``(plateaus, groups)``.
    """
    if t <= 0:
        raise ValidationError("profile time must be positive")
    v = x / t
    dv = np.diff(v)
    slope = np.linalg.norm(np.diff(U, axis=0), axis=1) / dv
    quiet = slope < plateau_tol

    plateaus = []
    i = 0
    n = len(quiet)
    while i < n:
        if quiet[i]:
            j = i
            while j + 1 < n and quiet[j + 1]:
                j += 1
            if v[j + 1] - v[i] >= min_width:
                seg = U[i : j + 2]
                plateaus.append(
                    Plateau(np.median(seg, axis=0), float(v[i]), float(v[j + 1]))
                )
            i = j + 1
        i += 1

    groups = [
        WaveGroup(a.v_end, b.v_start) for a, b in zip(plateaus, plateaus[1:])
    ]
    return plateaus, groups
