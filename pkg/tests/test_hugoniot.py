import numpy as np
import pytest

from uctk.corey import FluidParams, eigen, rh_residual, shock_speed, umbilic_point
from uctk.hugoniot import (
    LaxTag,
    classify_pair,
    extension_of_set,
    extension_points_detailed,
    hugoniot_gradient,
    hugoniot_value,
    solve_rh_partner,
    trace_hugoniot,
)
from uctk.reduced import (
    InvariantLine,
    char_speeds,
    distinguished_states,
    effective_shock_partner,
    effective_sigma,
)

P = FluidParams(1.0, 2.0, 0.75)
LINE_G = InvariantLine("G", P)
LINE_O = InvariantLine("O", P)
D_POINT = np.array([1.0 / 3.0, 2.0 / 3.0])


def three_lines_of_d():
    """H(D) decomposes into three straight segments."""
    E = np.array([0.0, 2.0 / 2.75])
    B = np.array([1.0 / 1.75, 0.0])
    return [
        (np.array([1.0, 0.0]), np.array([0.0, 1.0])),  # edge [W,O]
        (np.array([0.0, 0.0]), D_POINT),  # line through G
        (E, B),  # nonlocal branch
    ]


def seg_distance(pts, a, b):
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-30:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip(((pts - a) @ ab) / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


def test_hugoniot_value_and_gradient():
    Um = LINE_G.embed(0.6)
    for s in (0.3, 0.8, 0.95):
        assert abs(hugoniot_value(LINE_G.embed(s), Um, P)) < 1e-14
    U0 = np.array([0.42, 0.17])
    g = hugoniot_gradient(U0, Um, P)
    h = 1e-7
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = (hugoniot_value(U0 + e, Um, P) - hugoniot_value(U0 - e, Um, P)) / (2 * h)
        assert g[k] == pytest.approx(fd, rel=1e-6, abs=1e-10)


def test_trace_from_d_gives_three_straight_lines():
    branches = trace_hugoniot(D_POINT, P, resolution=400)
    assert branches, "no branches traced"
    segs = three_lines_of_d()
    pts = np.vstack([b.points for b in branches])
    # every traced point close to one of the three segments
    dists = np.min([seg_distance(pts, a, b) for a, b in segs], axis=0)
    assert dists.max() < 1e-5
    # every segment covered by the trace (symmetric Hausdorff away from
    # the excluded trivial-solution disk at the base state)
    chains = [b.points for b in branches]
    for a, b in segs:
        samples = a + np.linspace(0.02, 0.98, 300)[:, None] * (b - a)
        # exclude the trivial-solution disk at the base state and the
        # branch self-intersection, where chains split cell-wise
        crossing = np.array([2.0 / 9.0, 4.0 / 9.0])
        keep = (np.linalg.norm(samples - D_POINT, axis=1) > 6e-3) & (
            np.linalg.norm(samples - crossing, axis=1) > 6e-3
        )
        samples = samples[keep]
        best = np.full(len(samples), np.inf)
        for chain in chains:
            for p0, p1 in zip(chain[:-1], chain[1:]):
                best = np.minimum(best, seg_distance(samples, p0, p1))
        assert best.max() < 1e-5


def test_traced_points_satisfy_residuals():
    branches = trace_hugoniot(D_POINT, P, resolution=300)
    for b in branches:
        for q, s in zip(b.points, b.sigmas):
            assert abs(hugoniot_value(q, D_POINT, P)) < 1e-10
            assert np.linalg.norm(rh_residual(D_POINT, q, s, P)) < 1e-8


def test_trace_contains_invariant_line_branch():
    Um = LINE_G.embed(0.9)
    # the whole line solves the speed-free jump equation identically
    for s in np.linspace(0.0, 1.0, 101):
        assert abs(hugoniot_value(LINE_G.embed(s), Um, P)) < 1e-14
    # and the tracer recovers it: on-line traced points span the segment
    branches = trace_hugoniot(Um, P, resolution=300)
    pts = np.vstack([b.points for b in branches])
    on_line = pts[np.array([LINE_G.distance(q) for q in pts]) < 1e-6]
    assert len(on_line) > 50
    s_vals = np.sort([LINE_G.project(q) for q in on_line])
    assert s_vals[0] < 0.05 and s_vals[-1] > 0.97
    assert np.diff(s_vals).max() < 0.05  # no large gap along the segment


def test_trace_symmetry_membership():
    rng = np.random.default_rng(5)
    done = 0
    for _ in range(40):
        if done >= 20:
            break
        Um = rng.uniform(0.1, 0.6, 2)
        if Um.sum() > 0.88:
            continue
        branches = trace_hugoniot(Um, P, resolution=200)
        pts = np.vstack([b.points for b in branches])
        if not len(pts):
            continue
        Up = pts[len(pts) // 3]
        back = trace_hugoniot(Up, P, resolution=200)
        back_pts = np.vstack([b.points for b in back])
        dist = np.linalg.norm(back_pts - Um, axis=1).min()
        assert dist < 1e-2  # the return trace passes through the base cellwise
        # membership to full precision: the base solves the other state's
        # equation, with calibrated distance |H| / |grad H|
        g = hugoniot_gradient(Um, Up, P)
        assert abs(hugoniot_value(Um, Up, P)) / max(np.hypot(*g), 1e-12) < 1e-6
        done += 1
    assert done >= 20


def test_classify_pair_taxonomy():
    # slow Lax shock on the G line
    Um, Up = LINE_G.embed(0.86), LINE_G.embed(0.95)
    sig = float(effective_sigma(0.86, 0.95, 4.0))
    assert classify_pair(Um, Up, sig, P) is LaxTag.LAX_S
    # crossing example
    from uctk.uc_identity import uc_shock

    trip = uc_shock(LINE_G, 0.6, 1.0)
    assert classify_pair(trip.Um, trip.Up, trip.sigma, P) is LaxTag.CROSSING
    # speed below both slow speeds is outside the four-type taxonomy
    assert classify_pair(Um, Up, 0.05, P) is LaxTag.OTHER
    # left-characteristic slow limit
    from uctk.uc_identity import uc_interval

    iv = uc_interval(LINE_G, 0.9)
    sig = float(effective_sigma(iv.s_slow, 0.9, 4.0))
    tag = classify_pair(LINE_G.embed(iv.s_slow), LINE_G.embed(0.9), sig, P)
    assert tag is LaxTag.LEFT_CHAR_S
    # left-characteristic undercompressive limit (case B fast endpoint)
    sig = float(effective_sigma(iv.s_fast, 0.9, 4.0))
    tag = classify_pair(LINE_G.embed(iv.s_fast), LINE_G.embed(0.9), sig, P)
    assert tag is LaxTag.LEFT_CHAR_U
    # right-characteristic fast limit (case A fast endpoint)
    iv_a = uc_interval(LINE_G, 0.82)
    sig = float(effective_sigma(iv_a.s_fast, 0.82, 4.0))
    tag = classify_pair(LINE_G.embed(iv_a.s_fast), LINE_G.embed(0.82), sig, P)
    assert tag is LaxTag.RIGHT_CHAR_F


def test_branch_tags_crossing_interval():
    Um = LINE_G.embed(0.9)
    from uctk.uc_identity import uc_interval

    iv = uc_interval(LINE_G, 0.9)
    branches = trace_hugoniot(Um, P, resolution=300)
    found_crossing = False
    for b in branches:
        for q, tag in zip(b.points, b.tags):
            if LINE_G.distance(q) < 1e-6:
                s = LINE_G.project(q)
                if iv.s_fast + 1e-3 < s < iv.s_slow - 1e-3:
                    assert tag is LaxTag.CROSSING
                    found_crossing = True
    assert found_crossing


def test_triple_shock_rule():
    # a state in the blocked gap sees equal speeds to two distinct partners;
    # all three states are then mutually related at one speed
    nu = LINE_O.nu
    s_m = 0.48
    s = 0.35
    sig = float(effective_sigma(s, s_m, nu))
    lower = effective_shock_partner(s_m, sig, nu, "lower")
    upper = effective_shock_partner(s_m, sig, nu, "upper")
    other = upper if abs(lower - s) < 1e-9 else lower
    assert abs(float(effective_sigma(other, s_m, nu)) - sig) < 1e-12
    assert abs(float(effective_sigma(s, other, nu)) - sig) < 1e-8
    A, Bq, C = LINE_O.embed(s), LINE_O.embed(other), LINE_O.embed(s_m)
    assert shock_speed(A, C, P) == pytest.approx(sig, abs=1e-10)
    assert shock_speed(Bq, C, P) == pytest.approx(sig, abs=1e-10)
    assert shock_speed(A, Bq, P) == pytest.approx(sig, abs=1e-8)


def test_solve_rh_partner():
    Um = LINE_G.embed(0.5)
    up = solve_rh_partner(Um, 1.6, P, LINE_G.embed(0.95))
    assert up is not None
    assert LINE_G.project(up) == pytest.approx(1.0, abs=1e-10)
    assert solve_rh_partner(Um, 1.6, P, Um + 1e-9) is None  # trivial branch
    assert solve_rh_partner(Um, 50.0, P, LINE_G.embed(0.9)) is None


def test_extension_of_set_variants():
    ds = distinguished_states(LINE_G)
    # slow right-extension of the edge point: the state whose slow speed
    # equals its shock speed to the edge point
    # the slow extension state sits exactly where the nonlocal branch
    # crosses the line, so the locus gradient degenerates and position
    # accuracy is limited; the characteristic condition stays sharp
    detailed = extension_points_detailed([LINE_G.embed(1.0)], "s", "right", P, resolution=250)
    cands = [
        (q, sig)
        for q, _, sig in detailed
        if LINE_G.distance(q) < 1e-4
        and abs(LINE_G.project(q, tol=1e-3) - ds.s_ext_slow) < 1e-4
    ]
    assert cands
    q, sig = min(cands, key=lambda t: abs(LINE_G.project(t[0], tol=1e-3) - ds.s_ext_slow))
    assert abs(sig - eigen(q, P).lam_s) < 1e-8
    # fast right-extension contains the fast edge extension
    pts = extension_of_set([LINE_G.embed(1.0)], "f", "right", P, resolution=250)
    s_vals = [LINE_G.project(q, tol=1e-5) for q in pts if LINE_G.distance(q) < 1e-5]
    assert any(abs(s - ds.s_ext_fast) < 1e-5 for s in s_vals)
    # left-extension of the umbilic point: characteristic at the base
    pts = extension_of_set([umbilic_point(P)], "s", "left", P, resolution=250)
    s_vals = [LINE_G.project(q, tol=1e-4) for q in pts if LINE_G.distance(q) < 1e-4]
    assert any(abs(s - 0.5) < 1e-4 for s in s_vals)


def test_edge_extension_passes_through_line_states():
    # the slow extension of the edge opposite G meets the G line at the
    # slow edge-extension state; the fast extension at the fast one
    # the extension states of the line sit on the extension curve of the
    # opposite edge exactly where the base is the edge-line intersection
    edge = [np.array([t, 1.0 - t]) for t in np.linspace(0.25, 0.45, 21)]
    edge.append(D_POINT.copy())
    ds = distinguished_states(LINE_G)
    detailed = extension_points_detailed(edge, "s", "right", P, resolution=150)
    best = min(
        abs(LINE_G.project(q, tol=1.0) - ds.s_ext_slow) + LINE_G.distance(q)
        for q, _, _ in detailed
    )
    assert best < 1e-4
    detailed = extension_points_detailed(edge, "f", "right", P, resolution=150)
    best = min(
        abs(LINE_G.project(q, tol=1.0) - ds.s_ext_fast) + LINE_G.distance(q)
        for q, _, _ in detailed
    )
    assert best < 1e-4
