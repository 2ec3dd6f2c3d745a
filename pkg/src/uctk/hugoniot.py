"""Hugoniot loci: tracing, shock classification, and extensions of sets.

For a base state ``Um`` the locus is the zero set of

    H(U) = (f_w(U) - f_w(Um)) (s_o - s_o^-) - (f_o(U) - f_o(Um)) (s_w - s_w^-),

which removes the shock speed from the jump condition.  The tracer runs a
marching-squares scan of ``H`` over the saturation square, links the cell
segments into chains, polishes every vertex onto the locus along the
gradient direction, and splits chains at the base state and at
self-intersection cells.  Speeds and Lax-type tags are attached per point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .corey import FluidParams, eigen, flux, jacobian, shock_speed, umbilic_point
from .errors import CoincidentStates, InconsistentSpeeds
from .reduced import InvariantLine, char_speeds, distinguished_states

__all__ = [
    "LaxTag",
    "ShockTriple",
    "HugoniotBranch",
    "classify_pair",
    "hugoniot_value",
    "hugoniot_gradient",
    "trace_hugoniot",
    "solve_rh_partner",
    "extension_of_set",
    "extension_points_detailed",
    "mixed_contact_state",
]


class LaxTag(Enum):
    LAX_S = "lax_s"
    LAX_F = "lax_f"
    CROSSING = "crossing"
    OVERCOMPRESSIVE = "overcompressive"
    LEFT_CHAR_S = "left_char_s"
    RIGHT_CHAR_F = "right_char_f"
    LEFT_CHAR_U = "left_char_u"
    CHAR_OTHER = "char_other"
    OTHER = "other"


@dataclass(frozen=True)
class ShockTriple:
    """A jump-condition solution ``(U-, U+, sigma)`` with its Lax-type tag."""

    Um: np.ndarray
    Up: np.ndarray
    sigma: float
    tag: Optional[LaxTag] = None

    def as_row(self) -> list[float]:
        return [
            float(self.Um[0]),
            float(self.Um[1]),
            float(self.Up[0]),
            float(self.Up[1]),
            float(self.sigma),
        ]


@dataclass
class HugoniotBranch:
    """One polished chain of the locus of ``base``; points ordered along it."""

    base: np.ndarray
    points: np.ndarray  # (n, 2)
    sigmas: np.ndarray  # (n,)
    tags: list[LaxTag] = field(default_factory=list)


def classify_pair(
    Um, Up, sigma: float, p: FluidParams, char_tol: float = 1e-9
) -> LaxTag:
    """Lax-type of a shock from the strict speed inequalities.

    Equality of the speed with a characteristic speed within ``char_tol``
    produces the matching characteristic-limit tag.
    """
    em = eigen(Um, p)
    ep = eigen(Up, p)
    sm, fm = em.lam_s, em.lam_f
    sp, fp = ep.lam_s, ep.lam_f

    def near(a, b):
        return abs(a - b) <= char_tol * (1.0 + abs(a) + abs(b))

    if near(sigma, sm) and sigma < fp - char_tol and sp < sigma:
        return LaxTag.LEFT_CHAR_S
    if near(sigma, fp) and sigma < fm - char_tol and sm < sigma:
        return LaxTag.RIGHT_CHAR_F
    if near(sigma, fm) and sm < sigma and sp < sigma < fp - char_tol:
        return LaxTag.LEFT_CHAR_U
    if near(sigma, sm) or near(sigma, fm) or near(sigma, sp) or near(sigma, fp):
        return LaxTag.CHAR_OTHER
    if sp < sigma < sm and sigma < fp:
        return LaxTag.LAX_S
    if fp < sigma < fm and sm < sigma:
        return LaxTag.LAX_F
    if sm < sigma < fm and sp < sigma < fp:
        return LaxTag.CROSSING
    if fp < sigma < sm:
        return LaxTag.OVERCOMPRESSIVE
    return LaxTag.OTHER


def hugoniot_value(U, Um, p: FluidParams):
    """Speed-free jump-condition residual; broadcasts over leading axes."""
    U = np.asarray(U, dtype=float)
    Um = np.asarray(Um, dtype=float)
    f = flux(U, p)
    fm = flux(Um, p)
    return (f[..., 0] - fm[0]) * (U[..., 1] - Um[1]) - (f[..., 1] - fm[1]) * (
        U[..., 0] - Um[0]
    )


def hugoniot_gradient(U, Um, p: FluidParams) -> np.ndarray:
    """Analytic gradient of :func:`hugoniot_value` at one state."""
    U = np.asarray(U, dtype=float)
    Um = np.asarray(Um, dtype=float)
    f = flux(U, p)
    fm = flux(Um, p)
    J = jacobian(U, p)
    dw = U[0] - Um[0]
    do = U[1] - Um[1]
    gx = J[0, 0] * do - (f[1] - fm[1]) - J[1, 0] * dw
    gy = J[0, 1] * do + (f[0] - fm[0]) - J[1, 1] * dw
    return np.array([gx, gy])


def _polish_point(U, Um, p: FluidParams, cell: float, tol: float = 1e-13) -> np.ndarray:
    """Newton along the gradient direction, step capped to one cell."""
    U = np.array(U, dtype=float)
    for _ in range(40):
        h = float(hugoniot_value(U, Um, p))
        if abs(h) < tol:
            break
        g = hugoniot_gradient(U, Um, p)
        g2 = g[0] * g[0] + g[1] * g[1]
        if g2 < 1e-30:
            break
        step = h / g2
        dx, dy = -step * g[0], -step * g[1]
        norm = math.hypot(dx, dy)
        if norm > cell:
            dx *= cell / norm
            dy *= cell / norm
        U[0] += dx
        U[1] += dy
    return U


def _inside_triangle(U, tol: float = 1e-9) -> bool:
    return U[0] >= -tol and U[1] >= -tol and U[0] + U[1] <= 1.0 + tol


def trace_hugoniot(
    Um,
    p: FluidParams,
    resolution: int = 400,
    exclude_radius: float = 1e-6,
    refine_near_umbilic: bool = True,
) -> list[HugoniotBranch]:
    """Trace every branch of the Hugoniot locus of ``Um``.

    Marching squares on a ``resolution x resolution`` grid of the unit
    square (the locus extends smoothly past the gas edge, which lets edge
    branches be captured cleanly and clipped afterwards), followed by
    per-point polishing.  Chains are split at the base state, where the
    trivial solution branch crosses everything, and at ambiguous
    (self-intersection) cells.  Near the umbilic point the scan is redone
    at four times the resolution because the locus is degenerate there.
    """
    Um = np.asarray(Um, dtype=float)
    n = resolution
    cell = 1.0 / n

    segments = _scan_segments(Um, p, 0.0, 1.0, 0.0, 1.0, n)
    if refine_near_umbilic:
        Uu = umbilic_point(p)
        r = max(8.0 * cell, 0.02)
        lo_x, hi_x = max(Uu[0] - r, 0.0), min(Uu[0] + r, 1.0)
        lo_y, hi_y = max(Uu[1] - r, 0.0), min(Uu[1] + r, 1.0)
        # drop coarse segments inside the refinement window, rescan finer
        def in_window(seg):
            mx = 0.5 * (seg[0][0] + seg[1][0])
            my = 0.5 * (seg[0][1] + seg[1][1])
            return lo_x <= mx <= hi_x and lo_y <= my <= hi_y

        segments = [s for s in segments if not in_window(s)]
        fine = _scan_segments(
            Um, p, lo_x, hi_x, lo_y, hi_y, max(int((hi_x - lo_x) / cell) * 4, 8)
        )
        segments.extend(s for s in fine if in_window(s))

    chains = _link_chains(segments)

    exclude = max(exclude_radius, 1.5 * cell)
    branches: list[HugoniotBranch] = []
    for chain in chains:
        pts = [
            _polish_point(q, Um, p, cell)
            for q in chain
        ]
        # split at the base state and clip to the triangle; polishing can
        # collapse neighbors, so drop consecutive duplicates
        runs: list[list[np.ndarray]] = [[]]
        for q in pts:
            ok = _inside_triangle(q) and math.hypot(q[0] - Um[0], q[1] - Um[1]) > exclude
            if ok:
                if runs[-1] and math.hypot(*(q - runs[-1][-1])) < 1e-12:
                    continue
                runs[-1].append(q)
            elif runs[-1]:
                runs.append([])
        for run in runs:
            if len(run) < 2:
                continue
            arr = np.array(run)
            try:
                sig = np.array([shock_speed(Um, q, p) for q in arr])
            except (InconsistentSpeeds, CoincidentStates):
                continue
            branches.append(HugoniotBranch(Um.copy(), arr, sig))

    for b in branches:
        b.tags = [classify_pair(Um, q, s, p) for q, s in zip(b.points, b.sigmas)]

    def branch_key(b: HugoniotBranch):
        q = b.points[0]
        return (math.atan2(q[1] - Um[1], q[0] - Um[0]), math.hypot(q[0] - Um[0], q[1] - Um[1]))

    oriented = []
    for b in branches:
        a0 = math.atan2(b.points[0][1] - Um[1], b.points[0][0] - Um[0])
        a1 = math.atan2(b.points[-1][1] - Um[1], b.points[-1][0] - Um[0])
        if (a1, -len(b.points)) < (a0, 0):
            b.points = b.points[::-1].copy()
            b.sigmas = b.sigmas[::-1].copy()
            b.tags = b.tags[::-1]
        oriented.append(b)
    oriented.sort(key=branch_key)
    return oriented


def _scan_segments(Um, p, x0, x1, y0, y1, n):
    """Marching-squares segments of H = 0 on [x0,x1] x [y0,y1]."""
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    SW, SO = np.meshgrid(xs, ys, indexing="ij")
    grid = np.stack([SW, SO], axis=-1)
    H = hugoniot_value(grid, Um, p)

    sign = np.sign(H)
    sign[sign == 0.0] = 1.0
    cx = sign[:-1, :-1]
    cy = sign[1:, :-1]
    cz = sign[1:, 1:]
    cw = sign[:-1, 1:]
    active = ~((cx == cy) & (cy == cz) & (cz == cw))
    idx = np.argwhere(active)

    def interp(pa, pb, ha, hb):
        t = ha / (ha - hb)
        return (
            pa[0] + t * (pb[0] - pa[0]),
            pa[1] + t * (pb[1] - pa[1]),
        )

    segments = []
    for i, j in idx:
        corners = [
            (xs[i], ys[j]),
            (xs[i + 1], ys[j]),
            (xs[i + 1], ys[j + 1]),
            (xs[i], ys[j + 1]),
        ]
        hv = [H[i, j], H[i + 1, j], H[i + 1, j + 1], H[i, j + 1]]
        crossings = []
        for k in range(4):
            a, b = k, (k + 1) % 4
            if (hv[a] > 0) != (hv[b] > 0):
                crossings.append((k, interp(corners[a], corners[b], hv[a], hv[b])))
        if len(crossings) == 2:
            segments.append((crossings[0][1], crossings[1][1], False))
        elif len(crossings) == 4:
            # ambiguous cell: pair by the sign at the cell center and mark
            # both segments as chain breakers (self-intersection nearby)
            hc = float(hugoniot_value(np.array([
                0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])
            ]), Um, p))
            same_as_corner0 = (hc > 0) == (hv[0] > 0)
            if same_as_corner0:
                pairs = [(0, 3), (1, 2)]
            else:
                pairs = [(0, 1), (2, 3)]
            for a, b in pairs:
                segments.append((crossings[a][1], crossings[b][1], True))
    return segments


def _link_chains(segments):
    """Join marching-squares segments into ordered chains.

    Endpoints are keyed on a snapped grid so shared cell-edge points
    match exactly; breaker segments (ambiguous cells) terminate chains.
    """

    def key(pt):
        return (round(pt[0] * 1e9), round(pt[1] * 1e9))

    adjacency: dict[tuple, list[int]] = {}
    for s_id, (a, b, brk) in enumerate(segments):
        adjacency.setdefault(key(a), []).append(s_id)
        adjacency.setdefault(key(b), []).append(s_id)

    used = [False] * len(segments)
    chains = []

    def walk(start_seg, start_pt):
        chain = [start_pt]
        seg_id = start_seg
        pt = start_pt
        while True:
            a, b, brk = segments[seg_id]
            used[seg_id] = True
            nxt = b if key(a) == key(pt) else a
            chain.append(nxt)
            if brk:
                break
            candidates = [
                s for s in adjacency.get(key(nxt), []) if not used[s]
            ]
            if not candidates:
                break
            seg_id = candidates[0]
            pt = nxt
        return chain

    # start at endpoints of degree one (open chains), then sweep leftovers
    for s_id, (a, b, brk) in enumerate(segments):
        if used[s_id]:
            continue
        for pt in (a, b):
            if len([t for t in adjacency.get(key(pt), []) if not used[t]]) == 1:
                chains.append(walk(s_id, pt))
                break
    for s_id, (a, b, brk) in enumerate(segments):
        if not used[s_id]:
            chains.append(walk(s_id, a))
    return [c for c in chains if len(c) >= 2]


def solve_rh_partner(
    Um,
    sigma: float,
    p: FluidParams,
    guess,
    tol: float = 1e-13,
    max_iter: int = 60,
    min_sep: float = 1e-8,
    max_drift: Optional[float] = 0.2,
) -> Optional[np.ndarray]:
    """Damped Newton solve for a Hugoniot partner of ``Um`` at fixed speed.

    Solves ``F(U) - F(Um) - sigma (U - Um) = 0`` from ``guess``; the
    residual-monotone backtracking keeps the iteration in the basin of
    the nearby root (the system is near-singular close to characteristic
    points, where full steps jump branches).  Returns None when the
    iteration leaves the triangle, stalls, drifts more than ``max_drift``
    from the guess, or collapses onto the trivial solution ``Um``.
    """
    Um = np.asarray(Um, dtype=float)
    U = np.array(guess, dtype=float)
    fm = flux(Um, p)

    def residual(V):
        g = flux(V, p) - fm - sigma * (V - Um)
        return g, math.hypot(g[0], g[1])

    g, gn = residual(U)
    for _ in range(max_iter):
        if gn < tol:
            break
        J = jacobian(U, p)
        J[0, 0] -= sigma
        J[1, 1] -= sigma
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        if abs(det) < 1e-16:
            return None
        dx = (-g[0] * J[1, 1] + g[1] * J[0, 1]) / det
        dy = (-J[0, 0] * g[1] + J[1, 0] * g[0]) / det
        step = math.hypot(dx, dy)
        if step > 0.25:
            dx *= 0.25 / step
            dy *= 0.25 / step
        scale = 1.0
        for _ in range(10):
            trial = np.array([U[0] + scale * dx, U[1] + scale * dy])
            g_t, gn_t = residual(trial)
            if gn_t < gn:
                U, g, gn = trial, g_t, gn_t
                break
            scale *= 0.5
        else:
            return None
        if not (-0.2 <= U[0] <= 1.2 and -0.2 <= U[1] <= 1.2):
            return None
    else:
        return None
    if not _inside_triangle(U, tol=1e-9):
        return None
    if math.hypot(U[0] - Um[0], U[1] - Um[1]) < min_sep:
        return None
    if max_drift is not None:
        guess = np.asarray(guess, dtype=float)
        if math.hypot(U[0] - guess[0], U[1] - guess[1]) > max_drift:
            return None
    return U


def _char_mismatch(base, q, sigma, p, family, side):
    st = eigen(base if side == "left" else q, p)
    lam = st.lam_s if family == "s" else st.lam_f
    return sigma - lam


def extension_points_detailed(
    C,
    family: str,
    side: str,
    p: FluidParams,
    resolution: int = 200,
    char_tol: float = 1e-9,
) -> list[tuple[np.ndarray, np.ndarray, float]]:
    """Extension states with their base points and speeds.

    For every ``base`` in ``C`` (treated as one side of the shock) this
    returns the locus points ``U`` whose shock speed equals the selected
    characteristic speed: evaluated at the base state for ``side='left'``
    or at the returned state for ``side='right'``.
    """
    if family not in ("s", "f"):
        raise ValueError("family must be 's' or 'f'")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    out = []
    for base in C:
        base = np.asarray(base, dtype=float)
        for branch in trace_hugoniot(base, p, resolution=resolution):
            vals = [
                _char_mismatch(base, q, s, p, family, side)
                for q, s in zip(branch.points, branch.sigmas)
            ]
            for k in range(len(vals) - 1):
                if vals[k] == 0.0 or (vals[k] > 0) != (vals[k + 1] > 0):
                    lo, hi = branch.points[k], branch.points[k + 1]
                    glo = vals[k]
                    point = lo
                    sig = branch.sigmas[k]
                    for _ in range(60):
                        mid = _polish_point(0.5 * (lo + hi), base, p, 1.0 / resolution)
                        try:
                            sig = shock_speed(base, mid, p)
                        except (InconsistentSpeeds, CoincidentStates):
                            break
                        gm = _char_mismatch(base, mid, sig, p, family, side)
                        if (gm > 0) == (glo > 0):
                            lo, glo = mid, gm
                        else:
                            hi = mid
                        point = mid
                        if abs(gm) < char_tol and math.hypot(*(hi - lo)) < 1e-12:
                            break
                    out.append((point, base, sig))
    return out


def extension_of_set(
    C, family: str, side: str, p: FluidParams, resolution: int = 200
) -> list[np.ndarray]:
    """Extension of a set of states (see :func:`extension_points_detailed`)."""
    return [q for q, _, _ in extension_points_detailed(C, family, side, p, resolution)]


def mixed_contact_state(
    line: InvariantLine,
    resolution: int = 250,
    n_scan: int = 17,
    tol: float = 1e-6,
) -> Optional[float]:
    """Numeric effective saturation of the mixed double-contact state.

    Searches the segment above the umbilic point for the state whose fast
    characteristic speed is attained as a slow-characteristic shock speed
    from a partner on the nonlocal Hugoniot branch.  Returns None when no
    such state is found at these tolerances.
    """
    ds = distinguished_states(line)
    s_u = ds.s_umbilic
    p = line.p

    def mismatch(s: float) -> Optional[float]:
        base = line.embed(s)
        lam_f = char_speeds(s, line)[1]
        best = None
        for branch in trace_hugoniot(base, p, resolution=resolution):
            # skip the primary branch along the line itself
            mid = branch.points[len(branch.points) // 2]
            if line.distance(mid) < 1e-3:
                continue
            g1 = branch.sigmas - lam_f
            for k in range(len(g1) - 1):
                if (g1[k] > 0) != (g1[k + 1] > 0):
                    lo, hi = branch.points[k], branch.points[k + 1]
                    flo = g1[k]
                    q = lo
                    for _ in range(50):
                        q = _polish_point(0.5 * (lo + hi), base, p, 1.0 / resolution)
                        try:
                            fm = shock_speed(base, q, p) - lam_f
                        except (InconsistentSpeeds, CoincidentStates):
                            break
                        if (fm > 0) == (flo > 0):
                            lo, flo = q, fm
                        else:
                            hi = q
                    cand = eigen(q, p).lam_s - lam_f
                    if best is None or abs(cand) < abs(best):
                        best = cand
        return best

    svals = np.linspace(s_u + 0.02, 1.0, n_scan)
    gvals = [mismatch(s) for s in svals]
    for k in range(len(svals) - 1):
        ga, gb = gvals[k], gvals[k + 1]
        if ga is None or gb is None:
            continue
        if (ga > 0) != (gb > 0):
            lo, hi = svals[k], svals[k + 1]
            glo = ga
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                gm = mismatch(mid)
                if gm is None:
                    break
                if (gm > 0) == (glo > 0):
                    lo, glo = mid, gm
                else:
                    hi = mid
                if hi - lo < tol:
                    return 0.5 * (lo + hi)
            return 0.5 * (lo + hi)
    return None
