import numpy as np
import pytest
from scipy.optimize import brentq

from uctk.corey import FluidParams, rh_residual
from uctk.errors import GapRegion, NotInInterval, OutOfRange
from uctk.hugoniot import LaxTag
from uctk.reduced import (
    InvariantLine,
    char_speeds,
    distinguished_states,
    effective_sigma,
)
from uctk.uc_identity import (
    build_surface_identity,
    transitional_rarefaction,
    uc_interval,
    uc_shock,
)

P = FluidParams(1.0, 2.0, 0.75)
LINE_G = InvariantLine("G", P)
LINE_O = InvariantLine("O", P)
P_NU9 = FluidParams(1.5, 1.5, 1.0 / 3.0)  # nu_G = 9
LINE_9 = InvariantLine("G", P_NU9)


def check_interval_identities(line, iv, tol=1e-10):
    nu = line.nu
    sig_s = effective_sigma(iv.s_slow, iv.s_right, nu)
    assert abs(sig_s - char_speeds(iv.s_slow, line)[0]) < tol * (1 + abs(sig_s))
    sig_f = effective_sigma(iv.s_fast, iv.s_right, nu)
    where = iv.s_right if iv.case_tag == "A" else iv.s_fast
    assert abs(sig_f - char_speeds(where, line)[1]) < tol * (1 + abs(sig_f))


def test_interval_at_edge_state():
    iv = uc_interval(LINE_G, 1.0)
    ds = distinguished_states(LINE_G)
    assert iv.s_slow == pytest.approx(2.0 / 3.0, abs=1e-14)
    assert iv.s_fast == pytest.approx(ds.s_ext_fast, abs=1e-12)
    assert iv.case_tag == "B"
    check_interval_identities(LINE_G, iv)


def test_interval_case_b_example():
    iv = uc_interval(LINE_G, 0.9)
    assert iv.case_tag == "B"
    assert iv.s_slow == pytest.approx(0.734694, abs=1e-6)
    assert iv.s_fast == pytest.approx(0.609612, abs=1e-6)
    # the fast endpoint solves 4 s^2 - 9 s + 4 = 0
    assert abs(4 * iv.s_fast**2 - 9 * iv.s_fast + 4) < 1e-12
    check_interval_identities(LINE_G, iv, tol=1e-9)


def test_interval_case_a_example():
    iv = uc_interval(LINE_G, 0.82)
    assert iv.case_tag == "A"
    assert iv.s_slow == pytest.approx(4 * 0.82 / (10 * 0.6724 + 4 * (1 - 1.64)), abs=1e-12)
    assert abs(8.2 * iv.s_fast**2 - 10.56 * iv.s_fast + 3.28) < 1e-12
    assert iv.s_fast == pytest.approx(0.764776, abs=1e-6)
    check_interval_identities(LINE_G, iv, tol=1e-9)


def test_interval_validation():
    with pytest.raises(OutOfRange):
        uc_interval(LINE_G, 0.5)  # below the umbilic point
    with pytest.raises(OutOfRange):
        uc_interval(LINE_G, 1.2)
    with pytest.raises(GapRegion):
        uc_interval(LINE_O, 0.48)
    with pytest.raises(OutOfRange):
        uc_interval(LINE_O, 0.3)
    # the degenerate right state at one half is allowed below ratio one
    iv = uc_interval(LINE_O, 0.5)
    s_u = distinguished_states(LINE_O).s_umbilic
    assert iv.s_slow == pytest.approx(s_u, abs=1e-12)
    assert iv.s_fast == pytest.approx(s_u, abs=1e-12)


@pytest.mark.parametrize(
    "line,lo_attr",
    [
        (LINE_G, None),
        (LINE_9, None),
        (LINE_O, None),
    ],
)
def test_characteristic_identities_sampled(line, lo_attr):
    ds = distinguished_states(line)
    lo = ds.s_umbilic if line.nu > 1 else 0.5
    for s_m in np.linspace(lo + 1e-6, 1.0, 500):
        iv = uc_interval(line, float(s_m))
        check_interval_identities(line, iv)


def test_monotone_speed_across_interval():
    for line, s_m in ((LINE_G, 0.9), (LINE_G, 0.82), (LINE_9, 0.95), (LINE_O, 0.7)):
        iv = uc_interval(line, s_m)
        s = np.linspace(iv.s_fast + 1e-9, iv.s_slow - 1e-9, 200)
        sig = effective_sigma(s, s_m, line.nu)
        diffs = np.diff(sig)
        assert (diffs > 0).all() or (diffs < 0).all()


def test_case_seam_continuity():
    from uctk.reduced import solve_quadratic

    ds = distinguished_states(LINE_G)
    nu = LINE_G.nu
    seam = ds.s_contact_plus
    # both quadratics give the lower double-contact state exactly at the seam
    roots_a = solve_quadratic(2 * seam * (1 + nu), -(2 * seam + 1) * nu, nu * seam)
    roots_b = solve_quadratic((2 * seam - 1) * (nu + 1), -2 * seam * (nu + 1), nu)
    assert abs(roots_a[-1] - ds.s_contact_minus) < 1e-8
    assert abs(roots_b[0] - ds.s_contact_minus) < 1e-8
    # approaching the seam: the case-A root converges like a square root,
    # the case-B root linearly
    for eps in (1e-10, 1e-12):
        below = uc_interval(LINE_G, seam - eps)
        above = uc_interval(LINE_G, seam + eps)
        assert below.case_tag == "A" and above.case_tag == "B"
        assert abs(below.s_fast - above.s_fast) < 50.0 * eps**0.5
    assert abs(uc_interval(LINE_G, seam + 1e-12).s_fast - ds.s_contact_minus) < 1e-8


def test_high_ratio_interval_uses_case_a_throughout():
    ds = distinguished_states(LINE_9)
    iv = uc_interval(LINE_9, 1.0)
    assert iv.case_tag == "A"
    assert iv.s_fast == pytest.approx(ds.s_ext_fast_star, abs=1e-12)


def test_uc_shock():
    trip = uc_shock(LINE_G, 0.6, 1.0)
    assert trip.tag is LaxTag.CROSSING
    assert trip.sigma == pytest.approx(1.6, abs=1e-12)
    assert np.linalg.norm(rh_residual(trip.Um, trip.Up, trip.sigma, P)) < 1e-12
    for s in (0.6, 1.0):
        lam_s, lam_f = char_speeds(s, LINE_G)
        assert lam_s < trip.sigma < lam_f
    iv = uc_interval(LINE_G, 1.0)
    with pytest.raises(NotInInterval):
        uc_shock(LINE_G, iv.s_slow, 1.0)
    with pytest.raises(NotInInterval):
        uc_shock(LINE_G, iv.s_fast, 1.0)


def test_gap_admits_no_crossing_pair():
    # below ratio one, right states between the umbilic point and its
    # extension admit no undercompressive shock.  At these parameters the
    # obstruction is already scalar: no on-line left state satisfies the
    # two-sided crossing inequalities that a saddle-saddle pair requires,
    # so the putative interval is empty before any orbit is integrated.
    nu = LINE_O.nu
    ds = distinguished_states(LINE_O)
    s = np.linspace(1e-4, ds.s_umbilic - 1e-6, 4000)
    lam_s_arr, lam_f_arr = char_speeds(s, LINE_O)
    for s_m in (0.468, 0.47, 0.48, 0.49, 0.499):
        lam_m = char_speeds(s_m, LINE_O)
        sig = effective_sigma(s, s_m, nu)
        crossing = (lam_s_arr < sig) & (sig < lam_f_arr) & (lam_m[0] < sig) & (sig < lam_m[1])
        assert not crossing.any()


def test_gap_blocking_root_where_speed_matches():
    # where a candidate shares its speed with the right state's branch,
    # root-finding locates the equal-speed state between them (the
    # triple-shock configuration that blocks orbits)
    nu = LINE_O.nu
    s_u = distinguished_states(LINE_O).s_umbilic
    for R in (0.48, 0.49):
        found = 0
        for M in np.linspace(s_u + 1e-3, R - 1e-3, 25):
            sig = float(effective_sigma(M, R, nu))
            qs = np.linspace(M + 1e-7, R - 1e-7, 500)
            vals = np.array([float(effective_sigma(q, R, nu)) - sig for q in qs])
            flips = np.nonzero(vals[:-1] * vals[1:] <= 0.0)[0]
            if flips.size:
                k = int(flips[0])
                root = brentq(lambda q: float(effective_sigma(q, R, nu)) - sig, qs[k], qs[k + 1])
                assert M < root < R
                found += 1
        assert found >= 3


# ---------------------------------------------------------------------------
# identity surface


def corner(surface, tag, side, which):
    arr = surface.boundaries[tag][side]
    return arr[0] if which == "start" else arr[-1]


def test_surface_regime_contact():
    surf = build_surface_identity(LINE_G, n_m=48)
    ds = distinguished_states(LINE_G)
    assert surf.regime == "contact"
    assert surf.boundary_tags() == ["SCB", "FCB", "UCB", "GUB"]
    line = LINE_G

    def s_of(row):
        return line.project(np.array(row[:2]))

    assert s_of(corner(surf, "SCB", "minus", "start")) == pytest.approx(ds.s_umbilic, abs=1e-10)
    assert s_of(corner(surf, "SCB", "minus", "end")) == pytest.approx(ds.s_ext_slow, abs=1e-10)
    assert s_of(corner(surf, "FCB", "minus", "end")) == pytest.approx(ds.s_contact_minus, abs=1e-10)
    assert s_of(corner(surf, "UCB", "minus", "start")) == pytest.approx(ds.s_contact_minus, abs=1e-10)
    assert s_of(corner(surf, "UCB", "minus", "end")) == pytest.approx(ds.s_ext_fast, abs=1e-10)
    assert s_of(corner(surf, "GUB", "minus", "start")) == pytest.approx(ds.s_ext_fast, abs=1e-10)
    assert s_of(corner(surf, "GUB", "minus", "end")) == pytest.approx(ds.s_ext_slow, abs=1e-10)
    # plus-side corners sit over the right states
    assert s_of(corner(surf, "SCB", "plus", "end")) == pytest.approx(1.0, abs=1e-12)
    assert corner(surf, "SCB", "plus", "start")[2] == pytest.approx(2.0, abs=1e-12)
    assert s_of(corner(surf, "FCB", "plus", "end")) == pytest.approx(ds.s_contact_plus, abs=1e-10)


def test_surface_regime_high():
    surf = build_surface_identity(LINE_9, n_m=48)
    ds = distinguished_states(LINE_9)
    assert surf.regime == "high"
    assert surf.boundary_tags() == ["SCB", "FCB", "GUB"]
    line = LINE_9

    def s_of(row):
        return line.project(np.array(row[:2]))

    assert s_of(corner(surf, "FCB", "minus", "end")) == pytest.approx(ds.s_ext_fast_star, abs=1e-10)
    assert corner(surf, "FCB", "minus", "end")[2] == pytest.approx(2.0, abs=1e-10)
    assert s_of(corner(surf, "GUB", "minus", "start")) == pytest.approx(ds.s_ext_fast_star, abs=1e-10)


def test_surface_regime_low():
    surf = build_surface_identity(LINE_O, n_m=48)
    ds = distinguished_states(LINE_O)
    assert surf.regime == "low"
    assert surf.boundary_tags() == ["SCB", "UCB", "GUB"]
    line = LINE_O

    def s_of(row):
        return line.project(np.array(row[:2]))

    # gap between the umbilic point and its extension on the plus side
    assert s_of(corner(surf, "SCB", "plus", "start")) == pytest.approx(0.5, abs=1e-10)
    assert corner(surf, "SCB", "plus", "start")[2] == pytest.approx(2.0, abs=1e-10)
    assert s_of(corner(surf, "UCB", "minus", "start")) == pytest.approx(ds.s_umbilic, abs=1e-10)
    assert (surf.s_right_values >= 0.5 - 1e-12).all()


def test_surface_curves_consistent_with_intervals():
    surf = build_surface_identity(LINE_G, n_m=16, n_s=9)
    for s_m, cm, cp in zip(surf.s_right_values, surf.curves_minus, surf.curves_plus):
        iv = uc_interval(LINE_G, float(s_m))
        assert LINE_G.project(cm[0, :2]) == pytest.approx(iv.s_fast, abs=1e-12)
        assert LINE_G.project(cm[-1, :2]) == pytest.approx(iv.s_slow, abs=1e-12)
        assert np.allclose(cm[:, 2], cp[:, 2])
        # every sampled triple satisfies the jump condition
        for a, b in zip(cm[::4], cp[::4]):
            resid = rh_residual(a[:2], b[:2], a[2], P)
            assert np.linalg.norm(resid) < 1e-12


def test_surface_compat_loss_points():
    surf = build_surface_identity(LINE_G, n_m=16, mixed_contact_s=0.9)
    assert surf.compat_loss_points is not None
    assert (surf.compat_loss_points[:, 0] <= 0.8).all()
    none = build_surface_identity(LINE_G, n_m=16)
    assert none.compat_loss_points is None


# ---------------------------------------------------------------------------
# transitional rarefactions


def test_transitional_two_legs():
    seq = transitional_rarefaction(LINE_O, 0.2, 0.47)
    assert [leg.kind for leg in seq.legs] == ["R_f", "R_s"]
    assert seq.is_speed_compatible()
    assert seq.legs[0].v_end == pytest.approx(2.0, abs=1e-12)
    # speeds increase monotonically along each rarefaction
    assert seq.legs[0].v_start < seq.legs[0].v_end
    assert seq.legs[1].v_start < seq.legs[1].v_end


def test_transitional_three_legs():
    seq = transitional_rarefaction(LINE_O, 0.2, 0.49)
    assert [leg.kind for leg in seq.legs] == ["R_f", "R_s", "'S_s"]
    assert seq.is_speed_compatible()
    s_m3 = LINE_O.project(seq.legs[1].end)
    assert s_m3 == pytest.approx(0.4716506, abs=1e-6)
    sig = seq.legs[2].v_start
    assert abs(sig - char_speeds(s_m3, LINE_O)[0]) < 1e-9
    assert abs(sig - effective_sigma(s_m3, 0.49, LINE_O.nu)) < 1e-12


def test_transitional_degenerate_at_half():
    seq = transitional_rarefaction(LINE_O, 0.1, 0.5)
    ds = distinguished_states(LINE_O)
    if len(seq.legs) == 3:
        s_m3 = LINE_O.project(seq.legs[1].end)
        assert s_m3 == pytest.approx(ds.s_umbilic, abs=1e-9)
    else:
        assert LINE_O.project(seq.legs[1].end) == pytest.approx(0.5, abs=1e-12)


def test_transitional_validation():
    with pytest.raises(OutOfRange):
        transitional_rarefaction(LINE_G, 0.3, 0.9)  # ratio above one
    with pytest.raises(OutOfRange):
        transitional_rarefaction(LINE_O, 0.5, 0.49)  # left state beyond umbilic
    with pytest.raises(OutOfRange):
        transitional_rarefaction(LINE_O, 0.2, 0.6)  # right state beyond 1/2
