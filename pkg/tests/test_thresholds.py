import math

import numpy as np
import pytest
from scipy.special import gamma

from xxzdrf import MomentumMap, ModelParams, build_atlas, solve_core
from xxzdrf.thresholds import (ThresholdKind, default_grid, figure1_dataset, figure_kinds,
                               singular_profile, tangent_slope, threshold_curve, wrap_momentum)

HOLE = ThresholdKind("one_hole", ell=(1, 0), name="C_h1")


def test_one_hole_curve_closes_at_origin(fig1):
    _, mm, at = fig1
    s = threshold_curve(HOLE, [mm.p_F * (1 - 1e-12)], mm, at)[0]
    assert abs(s.P0) < 1e-10 and abs(s.E0) < 1e-10
    assert s.side_weights[1] == 0.0


def test_free_fermion_one_hole_curve(ff):
    _, mm, at = ff
    t = np.linspace(-0.9, 0.9, 7) * mm.p_F
    for s in threshold_curve(HOLE, t, mm, at):
        assert s.P0 == pytest.approx(mm.p_F - s.param, abs=1e-12)
        assert s.E0 == pytest.approx(4 * math.cos(s.param) - 2.0, abs=1e-8)
        # Delta_+ = 1, Delta_- = 0 puts the theorem outside its hypotheses
        assert any(f.startswith("nonpositive_delta") for f in s.flags)


@pytest.mark.parametrize("name", ["C_ph1", "C_ph2", "C_p2h"])
def test_equal_velocity_tangent(fig1, name):
    _, mm, at = fig1
    kind = next(k for k in figure_kinds(mm) if k.label == name)
    for k0 in np.linspace(at.K_m, at.K_M, 9)[1:-1]:
        assert tangent_slope(kind, k0, mm, at) == pytest.approx(float(mm.v1(k0)), abs=1e-6)


def test_exponent_formulas_per_variant(fig1):
    _, mm, at = fig1
    kinds = {k.label: k for k in figure_kinds(mm)}
    k0 = 0.5 * (at.K_m + at.K_M) + 0.1
    ph = threshold_curve(kinds["C_ph1"], [k0], mm, at)[0]
    p2h = threshold_curve(kinds["C_p2h"], [k0], mm, at)[0]
    h = threshold_curve(HOLE, [0.1], mm, at)[0]
    assert ph.exponent == pytest.approx(ph.delta_plus + ph.delta_minus - 0.5, abs=1e-15)
    assert p2h.exponent == pytest.approx(p2h.delta_plus + p2h.delta_minus + 1.0, abs=1e-15)
    assert h.exponent == pytest.approx(h.delta_plus + h.delta_minus - 1.0, abs=1e-15)
    assert ph.side_weights == pytest.approx((math.cos(math.pi * ph.exponent) / math.pi, 1 / math.pi))
    assert p2h.side_weights[1] == 0.0


def test_multi_reduces_to_particle_two_holes(fig1):
    _, mm, at = fig1
    p2h = next(k for k in figure_kinds(mm) if k.label == "C_p2h")
    multi = ThresholdKind("multi", ell=(1, 0), n_p=1, n_h=2)
    for k0 in np.linspace(at.K_m, at.K_M, 7)[1:-1]:
        a = threshold_curve(p2h, [k0], mm, at)[0]
        b = threshold_curve(multi, [at.t_map(k0)], mm, at)[0]
        assert b.delta_plus == pytest.approx(a.delta_plus, abs=1e-10)
        assert b.delta_minus == pytest.approx(a.delta_minus, abs=1e-10)
        assert b.exponent == pytest.approx(a.exponent, abs=1e-10)
        assert (b.P0, b.E0) == pytest.approx((a.P0, a.E0), abs=1e-9)


def test_amplitude_sign_follows_gamma(fig1):
    _, mm, at = fig1
    for kind in figure_kinds(mm):
        for s in threshold_curve(kind, default_grid(kind, mm, at, 9), mm, at):
            if s.degenerate:
                continue
            carried = 1.0
            supersonic_particle = kind.variant == "one_particle" and "subsonic" not in s.flags
            if kind.variant in ("particle_hole", "particle_two_holes") or supersonic_particle:
                carried = gamma(-s.exponent)
            if kind.variant == "particle_two_holes":
                carried = -carried
            assert s.amplitude * carried > 0, (kind.label, s.param)


def test_multi_string_curve():
    obs = solve_core(ModelParams(zeta=math.pi / 3, density=0.2, strings=((2, 0),)))
    mm = MomentumMap(obs)
    at = build_atlas(mm)
    kind = ThresholdKind("multi_string", n_st=1, n_h=2, r=2)
    t = np.linspace(-0.8, 0.8, 5) * mm.p_F
    for s in threshold_curve(kind, t, mm, at):
        assert np.isfinite(s.amplitude) and np.isfinite(s.exponent)
        k = s.config.strings[2][0]
        assert float(mm.v_r(2, k)) == pytest.approx(float(mm.v1(s.param)), abs=1e-8)
    for tt in t:
        assert tangent_slope(kind, tt, mm, at) == pytest.approx(float(mm.v1(tt)), abs=1e-6)


def test_singular_profile(fig1):
    _, mm, at = fig1
    s = threshold_curve(HOLE, [0.2], mm, at)[0]
    dw = np.array([-1e-3, -1e-6, 1e-6, 1e-3])
    prof = singular_profile(s, dw)
    assert np.all(prof[:2] == 0) and np.all(prof[2:] > 0)
    assert singular_profile(s, 0.0) == (math.inf if s.exponent < 0 else 0.0)
    ph_kind = next(k for k in figure_kinds(mm) if k.label == "C_ph1")
    ph = threshold_curve(ph_kind, [0.5 * (at.K_m + at.K_M)], mm, at)[0]
    ratio = singular_profile(ph, 1e-4) / singular_profile(ph, -1e-4)
    assert ratio == pytest.approx(math.cos(math.pi * ph.exponent), rel=1e-12)


def test_figure_dataset_structure(fig1):
    _, mm, at = fig1
    rows, samples = figure1_dataset(mm, at, 21)
    assert len(samples) >= 9
    pts = np.array([(r["k"], r["omega"]) for r in rows])
    mirrored = np.column_stack([2 * math.pi - pts[:, 0], pts[:, 1]])
    gap = np.abs(mirrored[:, None, :] - pts[None, :, :]).max(axis=2).min(axis=1)
    assert gap.max() < 1e-12
    ks = [wrap_momentum(s.P0) for s in samples["C_h1"]]
    assert min(ks) > -1e-9 and max(ks) < 2 * mm.p_F + 1e-9
