"""Singularity curves of the response functions: thresholds, edge exponents,
universal amplitudes (form factor set to 1) and side weights."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from .excitations import ExcitationConfig, edge_exponents
from .kernels import barnes_g
from .momentum import MomentumMap
from .velocity import VelocityAtlas

TWO_PI = 2.0 * math.pi
POLE_TOL = 1e-6
_NUDGE = 1e-9  # relative inward shift of grid ends sitting on a Fermi point

VARIANTS = ("one_hole", "one_particle", "one_string", "particle_hole",
            "particle_two_holes", "multi", "multi_string")


@dataclass(frozen=True)
class ThresholdKind:
    variant: str
    ell: tuple | None = None
    branch: int | None = None  # one-particle family 1..4
    r: int | None = None
    n_p: int = 0
    n_h: int = 0
    n_st: int = 0
    name: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def label(self) -> str:
        return self.name or self.variant


@dataclass
class ThresholdSample:
    kind: str
    param: float
    P0: float
    E0: float
    delta_plus: float
    delta_minus: float
    exponent: float
    amplitude: float
    side_weights: tuple
    flags: tuple = ()
    config: ExcitationConfig | None = field(default=None, repr=False)

    @property
    def degenerate(self) -> bool:
        return any(f.startswith(("gamma_pole", "nonpositive_delta")) for f in self.flags)


# ---- helpers -----------------------------------------------------------------
def _near_nonneg_int(x, tol=POLE_TOL) -> bool:
    return x > -tol and abs(x - round(x)) < tol


def _sgn(x) -> int:
    return int(np.sign(x))


def _velocity_denominator(v_F, v, d_plus, d_minus):
    return abs(v_F + v) ** d_minus * abs(v_F - v) ** d_plus


def general_side_phases(species, s_frak, d_plus, d_minus, u1_prime, v):
    """nu_+ and nu_- of the multi-dimensional theorem.

    species: iterable of (n_r, eps_r) with eps_r = -zeta_r sgn(u_r'').
    """
    nu = {}
    for side in (1, -1):
        val = 0.5 * sum(n * n for n, eps in species if eps == -side)
        val -= (1 - side * s_frak) / 4.0
        for ups, d in ((1, d_plus), (-1, d_minus)):
            if side * (v - ups * u1_prime) > 0:
                val += d
        nu[side] = val
    return nu[1], nu[-1]


def _base_flags(d_plus, d_minus):
    flags = []
    if d_plus <= 0 or d_minus <= 0:
        flags.append("nonpositive_delta")
    return flags


def _grid_ends(a, b, n, nudge_lo=False, nudge_hi=False):
    g = np.linspace(a, b, n)
    eps = _NUDGE * (b - a)
    if nudge_lo:
        g[0] += eps
    if nudge_hi:
        g[-1] -= eps
    return g


# ---- individual variants -------------------------------------------------------
def _one_hole(kind, t0, mm, atlas):
    lp, lm = kind.ell or (1, 0)
    cfg = ExcitationConfig(lp, lm, (float(t0),))
    dp, dm = edge_exponents(cfg, mm)
    v, v_F = float(mm.v1(t0)), mm.obs.v_F
    P0 = mm.p_F * (lp - lm) - t0
    E0 = -float(mm.e1(t0))
    flags = _base_flags(dp, dm)
    amp = TWO_PI**2 / (gamma(dp + dm) * _velocity_denominator(v_F, v, dp, dm))
    return ThresholdSample(kind.label, float(t0), P0, E0, dp, dm, dp + dm - 1.0, amp,
                           (1.0, 0.0), tuple(flags), cfg)


def _massive_single(label, param, P0, E0, v, v_F, dp, dm, cfg, supersonic=None):
    """One particle or one r-string: supersonic two-sided, subsonic one-sided."""
    flags = _base_flags(dp, dm)
    mu = dp + dm - 1.0
    den = _velocity_denominator(v_F, v, dp, dm)
    if abs(abs(v) - v_F) < 1e-8 * v_F:
        flags.append("sonic_point")
    if supersonic is None:
        supersonic = abs(v) > v_F
    if supersonic:
        if _near_nonneg_int(mu):
            flags.append("gamma_pole")
        amp = TWO_PI**2 * gamma(1.0 - dp - dm) / den
        eta = -_sgn(v)
        d = {1: dp, -1: dm}
        w = (math.sin(math.pi * d[eta]) / math.pi, math.sin(math.pi * d[-eta]) / math.pi)
    else:
        amp = TWO_PI**2 / (gamma(dp + dm) * den)
        w = (1.0, 0.0)
        flags.append("subsonic")
    return ThresholdSample(label, float(param), P0, E0, dp, dm, mu, amp, w, tuple(flags), cfg)


PARTICLE_FAMILIES = {1: (-1, 0), 2: (0, -1), 3: (-1, 0), 4: (0, -1)}


def _one_particle(kind, k0, mm, atlas):
    lp, lm = kind.ell or PARTICLE_FAMILIES[kind.branch or 1]
    cfg = ExcitationConfig(lp, lm, (), {1: (float(k0),)})
    dp, dm = edge_exponents(cfg, mm)
    P0 = k0 + mm.p_F * (lp - lm)
    outside = not atlas.K_m < k0 < atlas.K_M
    return _massive_single(kind.label, k0, P0, float(mm.e1(k0)), float(mm.v1(k0)),
                           mm.obs.v_F, dp, dm, cfg, supersonic=outside)


def _one_string(kind, k0, mm, atlas):
    r = kind.r
    lp, lm = kind.ell or (-r, 0)
    cfg = ExcitationConfig(lp, lm, (), {r: (float(k0),)})
    dp, dm = edge_exponents(cfg, mm)
    P0 = k0 + mm.p_F * (lp - lm)
    return _massive_single(kind.label, k0, P0, float(mm.e_r(r, k0)), float(mm.v_r(r, k0)),
                           mm.obs.v_F, dp, dm, cfg)


def _particle_hole(kind, k0, mm, atlas):
    lp, lm = kind.ell or (0, 0)
    t = atlas.t_map(k0)
    cfg = ExcitationConfig(lp, lm, (t,), {1: (float(k0),)})
    dp, dm = edge_exponents(cfg, mm)
    mu = dp + dm - 0.5
    tp = float(atlas.t_prime(k0))
    v, v_F = float(mm.v1(k0)), mm.obs.v_F
    flags = _base_flags(dp, dm)
    if _near_nonneg_int(mu):
        flags.append("gamma_pole")
    amp = (TWO_PI**2 / math.sqrt(1.0 - tp) * math.sqrt(TWO_PI / float(mm.v1_prime(t)))
           * gamma(-mu) / _velocity_denominator(v_F, v, dp, dm))
    P0 = k0 - t + mm.p_F * (lp - lm)
    E0 = float(mm.e1(k0)) - float(mm.e1(t))
    w = (math.cos(math.pi * mu) / math.pi, 1.0 / math.pi)
    return ThresholdSample(kind.label, float(k0), P0, E0, dp, dm, mu, amp, w, tuple(flags), cfg)


def _particle_two_holes(kind, k0, mm, atlas):
    lp, lm = kind.ell or (1, 0)
    t = atlas.t_map(k0)
    cfg = ExcitationConfig(lp, lm, (t, t), {1: (float(k0),)})
    dp, dm = edge_exponents(cfg, mm)
    mu = dp + dm + 1.0
    tp = float(atlas.t_prime(k0))
    v, v_F = float(mm.v1(k0)), mm.obs.v_F
    flags = _base_flags(dp, dm)
    if _near_nonneg_int(mu):
        flags.append("gamma_pole")
    amp = (-TWO_PI**3 / math.sqrt(1.0 - 2.0 * tp) * (1.0 / float(mm.v1_prime(t))) ** 2
           * gamma(-mu) / _velocity_denominator(v_F, v, dp, dm))
    P0 = k0 - 2.0 * t + mm.p_F * (lp - lm)
    E0 = float(mm.e1(k0)) - 2.0 * float(mm.e1(t))
    w = (math.sin(math.pi * mu) / math.pi, 0.0)
    return ThresholdSample(kind.label, float(k0), P0, E0, dp, dm, mu, amp, w, tuple(flags), cfg)


def _multi_common(kind, t0, mm, n_m, n_h, k_m, e_m, vp_m, ell, cfg, extra_flags=()):
    """Shared assembly for the equal-velocity multi variants, parametrised by the
    hole momentum t0; the massive species sits at k_m with energy e_m and velocity
    derivative vp_m."""
    dp, dm = edge_exponents(cfg, mm)
    v_F = mm.obs.v_F
    v_t = float(mm.v1(t0))
    vp_t = float(mm.v1_prime(t0))
    theta = dp + dm + 0.5 * (n_m**2 + n_h**2) - 1.5
    flags = _base_flags(dp, dm) + list(extra_flags)
    if n_m:
        dP = n_m * vp_t / vp_m - n_h
    else:
        dP = -float(n_h)
    if abs(dP) < 1e-10:
        flags.append("momentum_map_degenerate")
    if _near_nonneg_int(theta):
        flags.append("gamma_pole")
    amp = 1.0 / math.sqrt(abs(dP))
    if n_m:
        amp *= (1.0 / abs(vp_m)) ** (0.5 * n_m**2)
    amp *= (1.0 / vp_t) ** (0.5 * (n_h**2 - 1))
    amp *= barnes_g(n_m + 1) * barnes_g(n_h + 1) * math.sqrt(TWO_PI) ** (3 + n_m + n_h)
    amp *= gamma(-theta) / _velocity_denominator(v_F, v_t, dp, dm)
    s_frak = -_sgn(dP / vp_t)
    species = [(n_h, _sgn(vp_t))]
    if n_m:
        species.append((n_m, -_sgn(vp_m)))
    nu_p, nu_m = general_side_phases(species, s_frak, dp, dm, v_t, v_F)
    w = (math.sin(math.pi * nu_p) / math.pi, math.sin(math.pi * nu_m) / math.pi)
    lp, lm = ell
    P0 = n_m * k_m - n_h * t0 + mm.p_F * (lp - lm)
    E0 = n_m * e_m - n_h * float(mm.e1(t0))
    return ThresholdSample(kind.label, float(t0), P0, E0, dp, dm, theta, amp, w, tuple(flags), cfg)


def _multi(kind, t0, mm, atlas):
    n_p, n_h = kind.n_p, kind.n_h
    if n_h < 1 or n_p + n_h < 2:
        raise ValueError("multi needs n_h >= 1 and n_p + n_h >= 2")
    ell = kind.ell or (n_h - n_p, 0)
    if n_p:
        k = float(atlas.p_map(t0))
        e_k, vp_k = float(mm.e1(k)), float(mm.v1_prime(k))
    else:
        k, e_k, vp_k = 0.0, 0.0, 1.0
    cfg = ExcitationConfig(ell[0], ell[1], (float(t0),) * n_h, {1: (k,) * n_p} if n_p else {})
    return _multi_common(kind, t0, mm, n_p, n_h, k, e_k, vp_k, ell, cfg)


def _multi_string(kind, t0, mm, atlas):
    n_st, n_h, r = kind.n_st, kind.n_h, kind.r
    if n_h < 1 or n_st + n_h < 2 or n_st < 1:
        raise ValueError("multi_string needs n_h >= 1, n_st >= 1 and n_st + n_h >= 2")
    ell = kind.ell or (n_h - r * n_st, 0)
    k = float(atlas.h_map(r, t0))
    cfg = ExcitationConfig(ell[0], ell[1], (float(t0),) * n_h, {r: (k,) * n_st})
    return _multi_common(kind, t0, mm, n_st, n_h, k, float(mm.e_r(r, k)),
                         float(mm.v_r_prime(r, k)), ell, cfg)


_DISPATCH = {"one_hole": _one_hole, "one_particle": _one_particle, "one_string": _one_string,
             "particle_hole": _particle_hole, "particle_two_holes": _particle_two_holes,
             "multi": _multi, "multi_string": _multi_string}


def parameter_domain(kind: ThresholdKind, mm: MomentumMap, atlas: VelocityAtlas) -> tuple:
    """Natural parameter interval of a variant."""
    pF = mm.p_F
    v = kind.variant
    if v in ("one_hole", "multi", "multi_string"):
        return (-pF, pF)
    if v == "one_particle":
        return (pF, atlas.K_m) if (kind.branch or 1) in (1, 2) else (atlas.K_M, mm.k_max)
    if v == "one_string":
        return mm.intervals.strings[kind.r]
    return (atlas.K_m, atlas.K_M)


def default_grid(kind, mm, atlas, n=101):
    a, b = parameter_domain(kind, mm, atlas)
    fermi_lo = kind.variant in ("one_hole", "multi", "multi_string", "one_particle") and (
        kind.variant != "one_particle" or (kind.branch or 1) in (1, 2))
    fermi_hi = kind.variant in ("one_hole", "multi", "multi_string")
    if kind.variant == "one_particle" and (kind.branch or 1) in (3, 4):
        fermi_lo, fermi_hi = False, True
    return _grid_ends(a, b, n, nudge_lo=fermi_lo, nudge_hi=fermi_hi)


def threshold_curve(kind: ThresholdKind, grid, mm: MomentumMap, atlas: VelocityAtlas):
    fun = _DISPATCH[kind.variant]
    return [fun(kind, float(x), mm, atlas) for x in np.atleast_1d(grid)]


def tangent_slope(kind: ThresholdKind, param: float, mm: MomentumMap, atlas: VelocityAtlas,
                  step: float = 1e-5) -> float:
    """dE0/dP0 along a curve by central differences in the curve parameter."""
    fun = _DISPATCH[kind.variant]
    hi = fun(kind, param + step, mm, atlas)
    lo = fun(kind, param - step, mm, atlas)
    return (hi.E0 - lo.E0) / (hi.P0 - lo.P0)


def singular_profile(sample: ThresholdSample, d_omega):
    """Predicted non-smooth part A |dw|^mu {w+ Xi(dw) + w- Xi(-dw)} with F := 1."""
    dw = np.atleast_1d(np.asarray(d_omega, dtype=float))
    wp, wm = sample.side_weights
    mu = sample.exponent
    out = np.zeros_like(dw)
    pos, neg = dw > 0, dw < 0
    out[pos] = sample.amplitude * wp * np.abs(dw[pos]) ** mu
    out[neg] = sample.amplitude * wm * np.abs(dw[neg]) ** mu
    zero = dw == 0
    if np.any(zero):
        out[zero] = 0.0 if mu > 0 else (math.inf if mu < 0 else sample.amplitude * 0.5 * (wp + wm))
    return out if np.ndim(d_omega) else float(out[0])


# ---- closed-form exponents of the two-excitation families ------------------------------
def family_deltas(family: str, param: float, mm: MomentumMap, atlas: VelocityAtlas):
    """delta_+- written family by family in terms of the rapidity-space dressed
    phase, independently of the generic shift function."""
    o = mm.obs
    q = o.q
    s = o.shift_sign
    z_edge = float(o.Z_at(q))

    def phi(edge, k):
        lam, br, _ = mm.hat_p1_inverse(k)
        return float(o.dressed_phase(1, edge, lam, br)[0, 0])

    def phi_edge(edge, other):
        return float(o.dressed_phase(1, edge, other, 0)[0, 0])

    pp, pm = phi_edge(q, q), phi_edge(q, -q)
    mp, mm_ = phi_edge(-q, q), phi_edge(-q, -q)
    p_inf = math.pi - o.zeta - (math.pi - 2 * o.zeta) * o.p_F / math.pi
    i_minus_lo = TWO_PI - 2 * o.p_F * s - p_inf

    if family == "C_h1":
        t = param
        return (phi(q, t) - pp - 1) ** 2, (phi(-q, t) - mp) ** 2
    if family == "C_h2":
        t = param
        return (phi(q, t) - pm) ** 2, (phi(-q, t) - mm_ + 1) ** 2
    if family in ("C_p1", "C_p2", "C_p3", "C_p4"):
        k = param
        ind = s * z_edge if k > i_minus_lo else 0.0
        if family in ("C_p1", "C_p3"):
            return (1 - phi(q, k) + pp + ind) ** 2, (mp - phi(-q, k) + ind) ** 2
        return (pm - phi(q, k) + ind) ** 2, (-1 + mm_ - phi(-q, k) + ind) ** 2
    if family in ("C_ph1", "C_ph2"):
        k = param
        t = atlas.t_map(k)
        if family == "C_ph1":
            return (phi(q, t) - phi(q, k)) ** 2, (phi(-q, t) - phi(-q, k)) ** 2
        a = s if s else 1
        return ((-a + phi(q, t) - phi(q, k) - a * pp + a * pm) ** 2,
                (-a + phi(-q, t) - phi(-q, k) - a * mp + a * mm_) ** 2)
    if family == "C_p2h":
        k = param
        t = atlas.t_map(k)
        return ((-1 + 2 * phi(q, t) - phi(q, k) - pp) ** 2,
                (2 * phi(-q, t) - phi(-q, k) - mp) ** 2)
    raise ValueError(f"unknown family {family!r}")


def figure_kinds(mm: MomentumMap) -> list:
    """Two-excitation families: two one-hole, four one-particle, two
    particle-hole and the particle-two-hole curve."""
    s = mm.obs.shift_sign or 1
    return [
        ThresholdKind("one_hole", ell=(1, 0), name="C_h1"),
        ThresholdKind("one_hole", ell=(0, 1), name="C_h2"),
        ThresholdKind("one_particle", branch=1, name="C_p1"),
        ThresholdKind("one_particle", branch=2, name="C_p2"),
        ThresholdKind("one_particle", branch=3, name="C_p3"),
        ThresholdKind("one_particle", branch=4, name="C_p4"),
        ThresholdKind("particle_hole", ell=(0, 0), name="C_ph1"),
        ThresholdKind("particle_hole", ell=(s, -s), name="C_ph2"),
        ThresholdKind("particle_two_holes", ell=(1, 0), name="C_p2h"),
    ]


CSV_COLUMNS = ("kind", "param", "k", "omega", "delta_plus", "delta_minus", "exponent",
               "amp_universal", "w_plus", "w_minus", "flags")


def _row(sample, k, kind=None, extra_flags=()):
    return {"kind": kind or sample.kind, "param": sample.param, "k": k, "omega": sample.E0,
            "delta_plus": sample.delta_plus, "delta_minus": sample.delta_minus,
            "exponent": sample.exponent, "amp_universal": sample.amplitude,
            "w_plus": sample.side_weights[0], "w_minus": sample.side_weights[1],
            "flags": ";".join(tuple(sample.flags) + tuple(extra_flags))}


def wrap_momentum(P):
    """Reduce to [0, 2 pi], keeping 2 pi itself."""
    w = math.fmod(P, TWO_PI)
    if w < 0:
        w += TWO_PI
    if abs(w) < 1e-13 and P > 1.0:
        w = TWO_PI
    return w


def figure1_dataset(mm: MomentumMap, atlas: VelocityAtlas, n_points: int = 101):
    """Rows for all two-excitation curves plus their mirror images about k = pi."""
    rows, samples = [], {}
    for kind in figure_kinds(mm):
        grid = default_grid(kind, mm, atlas, n_points)
        curve = threshold_curve(kind, grid, mm, atlas)
        samples[kind.label] = curve
        for smp in curve:
            k = wrap_momentum(smp.P0)
            rows.append(_row(smp, k))
            rows.append(_row(smp, TWO_PI - k, kind=smp.kind + "_mirror", extra_flags=("mirror",)))
    return rows, samples
