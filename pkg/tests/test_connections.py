import math

import numpy as np
import pytest

from uctk.capillarity import ViscosityMode
from uctk.connections import (
    FieldParams,
    IntegrationLimits,
    SotomayorLine,
    connection_exists,
    default_section,
    difference_vector,
    find_boundary_point,
    find_saddle_saddle,
    find_saddle_saddlenode,
    identity_interval_endpoints,
    integrate_manifold,
    line_projector,
    resolve_connection,
    seed_from_line,
    sweep_uc_region,
    verify_triple,
    _branch_toward,
    _manifold_direction,
)
from uctk.corey import FluidParams, eigen, rh_residual
from uctk.errors import BracketLost, NoSectionHit, ValidationError
from uctk.hugoniot import solve_rh_partner
from uctk.reduced import InvariantLine, char_speeds, distinguished_states, effective_sigma
from uctk.uc_identity import uc_interval

P = FluidParams(1.0, 2.0, 0.75, 1.0, 1.0)
LINE_G = InvariantLine("G", P)
LINE_O = InvariantLine("O", P)
FP_ID = FieldParams(P, ViscosityMode.IDENTITY)
FP_CAP = FieldParams(P, ViscosityMode.CAPILLARITY)
LIMITS = IntegrationLimits()


@pytest.fixture(scope="module")
def cap_seed():
    return seed_from_line(LINE_G, [0.72], FP_CAP, delta=1e-6)


def test_identity_orbit_stays_on_line_and_hits_section():
    s_minus, s_plus = 0.68, 0.9
    sigma = float(effective_sigma(s_minus, s_plus, LINE_G.nu))
    Um, Up = LINE_G.embed(s_minus), LINE_G.embed(s_plus)
    fld = FP_ID.field(Um, sigma)
    section = default_section(Um, Up)
    v, lam = _manifold_direction(fld, Um, "unstable")
    assert lam > 0
    limits = IntegrationLimits(store_every=10)
    orb = integrate_manifold(Um, "unstable", _branch_toward(v, Up - Um), fld, section, limits)
    assert orb.terminal == "hit_section"
    drift = max(LINE_G.distance(q) for q in orb.points)
    assert drift < 1e-9
    # consecutive stored points advance along the local field direction
    f = fld.compiled()
    for a, b in zip(orb.points[:-1], orb.points[1:]):
        step = b - a
        n = np.linalg.norm(step)
        if n < 1e-13:
            continue
        fx, fy = f(*a)
        fn = math.hypot(fx, fy)
        if fn < 1e-12:
            continue
        assert np.dot(step / n, (fx / fn, fy / fn)) > 0.5


def test_branch_sign_gives_mirror_orbit():
    sigma = float(effective_sigma(0.68, 0.9, LINE_G.nu))
    Um = LINE_G.embed(0.68)
    fld = FP_ID.field(Um, sigma)
    v, _ = _manifold_direction(fld, Um, "unstable")
    limits = IntegrationLimits(store_every=5)
    plus = integrate_manifold(Um, "unstable", 1, fld, None, limits)
    minus = integrate_manifold(Um, "unstable", -1, fld, None, limits)
    d_plus = plus.points[1] - Um
    d_minus = minus.points[1] - Um
    assert np.dot(d_plus, d_minus) < 0


def test_difference_vector_signs_straddle_connection(cap_seed):
    trip = cap_seed
    section = default_section(trip.Um, trip.Up)
    dv0 = difference_vector(trip.Um, trip.Up, trip.sigma, FP_CAP, section, LIMITS)
    assert dv0.norm <= 1e-5
    # moving the speed off the connection moves the hits to opposite sides
    up_lo = solve_rh_partner(trip.Um, trip.sigma - 0.01, P, trip.Up)
    up_hi = solve_rh_partner(trip.Um, trip.sigma + 0.01, P, trip.Up)
    d_lo = difference_vector(trip.Um, up_lo, trip.sigma - 0.01, FP_CAP, section, LIMITS)
    d_hi = difference_vector(trip.Um, up_hi, trip.sigma + 0.01, FP_CAP, section, LIMITS)
    assert d_lo.scalar * d_hi.scalar < 0


def test_difference_vector_no_section_hit(cap_seed):
    trip = cap_seed
    # a distant tiny section cannot be crossed
    section = SotomayorLine(np.array([0.05, 0.05]), np.array([1.0, 0.0]), 0.01)
    with pytest.raises(NoSectionHit):
        difference_vector(trip.Um, trip.Up, trip.sigma, FP_CAP, section, LIMITS)


def test_find_saddle_saddle_capillarity(cap_seed):
    trip = cap_seed
    up_prev = solve_rh_partner(trip.Um, trip.sigma - 0.015, P, trip.Up)
    up_next = solve_rh_partner(trip.Um, trip.sigma + 0.015, P, trip.Up)
    section = default_section(trip.Um, trip.Up)
    found = find_saddle_saddle(trip.Um, up_prev, up_next, section, 1e-6, FP_CAP)
    assert abs(found.sigma - trip.sigma) < 5e-4
    assert np.linalg.norm(found.Up - trip.Up) < 5e-3
    assert np.linalg.norm(rh_residual(found.Um, found.Up, found.sigma, P)) < 1e-8
    # the right state lies past the umbilic point along the line direction
    s_minus = LINE_G.project(found.Um, tol=1.0)
    s_plus = LINE_G.project(found.Up, tol=1.0)
    assert s_minus < 0.8 < s_plus
    checks = verify_triple(found, FP_CAP, 1e-6)
    assert checks["ok"]


def test_find_saddle_saddle_rejects_one_sided_bracket(cap_seed):
    trip = cap_seed
    up_a = solve_rh_partner(trip.Um, trip.sigma + 0.008, P, trip.Up)
    up_b = solve_rh_partner(trip.Um, trip.sigma + 0.016, P, trip.Up)
    section = default_section(trip.Um, trip.Up)
    with pytest.raises(BracketLost):
        find_saddle_saddle(trip.Um, up_a, up_b, section, 1e-9, FP_CAP)


def test_find_saddle_saddle_identity_degenerate_bracket():
    # on the invariant line the manifolds coincide, the gap is noise-level,
    # and a tight bracket around any admissible speed returns its partner
    s_minus = 0.6
    iv_target = 0.95  # inside the partner window of s=0.6
    sigma0 = float(effective_sigma(s_minus, iv_target, LINE_G.nu))
    Um = LINE_G.embed(s_minus)
    up_prev = solve_rh_partner(Um, sigma0 - 1e-7, P, LINE_G.embed(iv_target))
    up_next = solve_rh_partner(Um, sigma0 + 1e-7, P, LINE_G.embed(iv_target))
    section = default_section(Um, LINE_G.embed(iv_target))
    found = find_saddle_saddle(Um, up_prev, up_next, section, 1e-6, FP_ID)
    s_found = LINE_G.project(found.Up, tol=1e-5)
    assert s_found == pytest.approx(iv_target, abs=1e-6)


def test_connection_exists_interval_membership():
    iv = uc_interval(LINE_G, 0.9)
    proj = line_projector(LINE_G)
    M = LINE_G.embed(0.9)
    for s, expect in ((0.65, True), (0.70, True), (0.74, False), (0.58, False)):
        sigma = float(effective_sigma(s, 0.9, LINE_G.nu))
        ok, _ = connection_exists(LINE_G.embed(s), sigma, FP_ID, M, LIMITS, project=proj)
        assert ok == (iv.s_fast < s < iv.s_slow) == expect


def test_identity_interval_endpoints_match_closed_forms():
    for line, s_m in ((LINE_G, 0.9), (LINE_O, 0.7)):
        iv = uc_interval(line, s_m)
        res = identity_interval_endpoints(line, s_m)
        assert res is not None
        assert abs(res[0] - iv.s_fast) < 1e-6
        assert abs(res[1] - iv.s_slow) < 1e-6


def test_identity_gap_yields_no_connection():
    proj = line_projector(LINE_O)
    for s_m in (0.47, 0.485):
        M = LINE_O.embed(s_m)
        for s in np.linspace(0.05, 0.45, 25):
            sigma = float(effective_sigma(s, s_m, LINE_O.nu))
            ok, _ = connection_exists(LINE_O.embed(s), sigma, FP_ID, M, LIMITS, project=proj)
            assert not ok
        assert identity_interval_endpoints(LINE_O, s_m) is None


def test_find_boundary_point_identity_fixed_partner():
    iv = uc_interval(LINE_G, 0.9)
    proj = line_projector(LINE_G)
    M = LINE_G.embed(0.9)

    def tester(U):
        s = LINE_G.project(np.asarray(U), tol=1e-6)
        sigma = float(effective_sigma(s, 0.9, LINE_G.nu))
        ok, _ = connection_exists(np.asarray(U), sigma, FP_ID, M, LIMITS, project=proj)
        return ok

    found = find_boundary_point(
        LINE_G.embed(0.71), LINE_G.embed(0.745), 1e-7, tester
    )
    assert LINE_G.project(found) == pytest.approx(iv.s_slow, abs=1e-6)
    with pytest.raises(ValidationError):
        find_boundary_point(LINE_G.embed(0.71), LINE_G.embed(0.72), 1e-7, tester)


def test_find_saddle_saddlenode_scb_identity():
    iv = uc_interval(LINE_G, 0.9)
    S = LINE_G.embed(iv.s_slow)
    M = LINE_G.embed(0.9)
    section = default_section(S, M)
    ULm = S - 1e-3 * LINE_G.normal
    ULp = S + 1e-3 * LINE_G.normal
    B_minus, B_plus, sigma = find_saddle_saddlenode(
        ULm, ULp, M, section, 1e-8, FP_ID, kind="scb"
    )
    assert np.linalg.norm(B_minus - S) < 1e-6
    assert np.linalg.norm(B_plus - M) < 1e-5
    lam_s = float(char_speeds(iv.s_slow, LINE_G)[0])
    assert sigma == pytest.approx(lam_s, abs=1e-6)


def test_find_saddle_saddlenode_fcb_capillarity(cap_seed):
    # the fast-characteristic variant pins the speed to the fold of the
    # partner branch; only the capillarity field makes it transversal
    from uctk.capillarity import EquilibriumType, classify_equilibrium
    from uctk.connections import _ssn_gap
    from uctk.errors import DegenerateDirection, PartnerNotFound

    seed = cap_seed
    # section placed near where the boundary is expected, so the center
    # manifolds still cross it during the bisection
    section = default_section(seed.Um + 0.012 * LINE_G.normal, seed.Up)
    probes = []
    for k in range(0, 10):
        L = seed.Um + k * 0.002 * LINE_G.normal
        try:
            dv, sig, up = _ssn_gap(L, seed.Up, FP_CAP, "fcb", section, LIMITS)
        except (PartnerNotFound, NoSectionHit, DegenerateDirection):
            continue
        probes.append((k, dv.scalar, up))
    bracket = next(
        ((a, b) for a, b in zip(probes, probes[1:]) if a[1] * b[1] < 0), None
    )
    assert bracket is not None, "no fast-characteristic bracket near the seed"
    (ka, da, upa), (kb, db, upb) = bracket
    B_minus, B_plus, sigma = find_saddle_saddlenode(
        seed.Um + ka * 0.002 * LINE_G.normal,
        seed.Um + kb * 0.002 * LINE_G.normal,
        upa,
        section,
        1e-6,
        FP_CAP,
        kind="fcb",
    )
    assert abs(sigma - eigen(B_plus, P).lam_f) < 1e-4
    fld = FP_CAP.field(B_minus, sigma)
    assert (
        classify_equilibrium(B_plus, fld, tol_sn=1e-3)
        is EquilibriumType.SADDLE_ATTRACTOR
    )


def test_find_saddle_saddlenode_ucb_identity():
    # case-B fast endpoint: the left state is the degenerate one
    iv = uc_interval(LINE_G, 0.95)
    F = LINE_G.embed(iv.s_fast)
    M = LINE_G.embed(0.95)
    section = default_section(F, M)
    ULm = F - 1e-3 * LINE_G.normal
    ULp = F + 1e-3 * LINE_G.normal
    B_minus, B_plus, sigma = find_saddle_saddlenode(
        ULm, ULp, M, section, 1e-8, FP_ID, kind="ucb"
    )
    lam_f_left = float(char_speeds(iv.s_fast, LINE_G)[1])
    assert sigma == pytest.approx(lam_f_left, abs=1e-5)
    assert np.linalg.norm(B_minus - F) < 5e-5


def test_resolve_connection_capillarity_warm_and_miss(cap_seed):
    trip = cap_seed
    again = resolve_connection(trip.Um, trip.sigma + 0.004, trip.Up, FP_CAP, 1e-6)
    assert again is not None
    assert abs(again.sigma - trip.sigma) < 1e-3
    # far off the band nothing resolves
    off = trip.Um + 0.08 * LINE_G.normal
    assert resolve_connection(off, trip.sigma, trip.Up, FP_CAP, 1e-6) is None


def test_identity_sweep_collapses_onto_line():
    seed = seed_from_line(LINE_G, [0.7], FP_ID, delta=1e-6)
    surf = sweep_uc_region(
        seed,
        h=0.01,
        delta=1e-6,
        fp=FP_ID,
        max_cells=40,
        project=line_projector(LINE_G),
        boundary_tol=1e-6,
        max_boundary_points=8,
    )
    rows = surf.interior_rows()
    assert len(rows) >= 12
    assert max(LINE_G.distance(r[:2]) for r in rows) < 1e-6
    ds = distinguished_states(LINE_G)
    lam_f_b2 = float(char_speeds(ds.s_ext_fast, LINE_G)[1])
    sigmas = [bp.sigma for bp in surf.boundary_points]
    assert min(sigmas) == pytest.approx(lam_f_b2, abs=1e-5)
    assert max(sigmas) == pytest.approx(2.0, abs=1e-5)
    for trip in surf.triples.values():
        assert np.linalg.norm(rh_residual(trip.Um, trip.Up, trip.sigma, P)) < 1e-8
        em = eigen(trip.Um, P)
        ep = eigen(trip.Up, P)
        assert em.lam_s < trip.sigma < em.lam_f
        assert ep.lam_s < trip.sigma < ep.lam_f


def test_verify_triple_richardson(cap_seed):
    checks = verify_triple(cap_seed, FP_CAP, 1e-5)
    assert checks["ok"]
    assert checks["rh_norm"] < 1e-8
    assert checks["crossing_margin"] > 1e-9
    assert checks["richardson_shift"] < 1e-4
