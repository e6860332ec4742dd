"""Equal-velocity structure of the one-particle/hole dispersion."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .momentum import MomentumMap

_XTOL = 1e-15


class HypothesisError(RuntimeError):
    pass


def _root(f, a, b):
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise HypothesisError("no sign change in equal-velocity bracket")
    return brentq(f, a, b, xtol=_XTOL, rtol=1e-15, maxiter=200)


@dataclass
class VelocityAtlas:
    mm: MomentumMap
    P_m: float
    P_M: float
    K_m: float
    K_M: float
    v_max: float
    flags: list = field(default_factory=list)
    string_windows: dict = field(default_factory=dict)

    @property
    def obs(self):
        return self.mm.obs

    @property
    def v_F(self):
        return self.obs.v_F

    @property
    def margin(self) -> float:
        """Endpoint margin for derivative-based quantities on the window."""
        return 1e-4 * (self.K_M - self.K_m)

    # ---- hole-zone velocity in rapidity ------------------------------------
    def _hole_lambda(self, vel):
        q, mm = self.obs.q, self.mm
        if vel >= self.v_F:
            return q
        if vel <= -self.v_F:
            return -q
        return _root(lambda lam: mm.velocity_at(lam) - vel, -q, q)

    # ---- maps ------------------------------------------------------------------
    def t_map(self, k):
        """Hole momentum with the same velocity as the particle at k in [K_m, K_M]."""
        ks = np.atleast_1d(np.asarray(k, dtype=float))
        if np.any(ks < self.K_m - 1e-12) or np.any(ks > self.K_M + 1e-12):
            raise ValueError("t_map is defined on [K_m, K_M]")
        vel = self.mm.v1(ks)
        lam = np.array([self._hole_lambda(v) for v in vel])
        out = self.obs.p1(lam)
        return out if np.ndim(k) else float(out[0])

    def t_prime(self, k):
        t = self.t_map(k)
        return self.mm.v1_prime(k) / self.mm.v1_prime(t)

    def p_map(self, t):
        """Inverse of t_map: particle momentum in [K_m, K_M] matching hole momentum t."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        vel = self.mm.v1(ts)
        out = np.array([self._particle_window_root(v) for v in vel])
        return out if np.ndim(t) else float(out[0])

    def _particle_window_root(self, vel):
        if vel >= self.v_F:
            return self.K_m
        if vel <= -self.v_F:
            return self.K_M
        return _root(lambda k: self.mm.v1(k) - vel, self.K_m, self.K_M)

    def p_left(self, k):
        """[p_F, P_m] -> [P_m, K_m], equal velocity."""
        return self._pair(k, self.P_m, self.K_m)

    def p_right(self, k):
        """[P_M, p_+] -> [K_M, P_M], equal velocity."""
        return self._pair(k, self.K_M, self.P_M)

    def _pair(self, k, a, b):
        ks = np.atleast_1d(np.asarray(k, dtype=float))
        vel = self.mm.v1(ks)
        out = np.array([_root(lambda x: self.mm.v1(x) - v, a, b) for v in vel])
        return out if np.ndim(k) else float(out[0])

    def h_map(self, r: int, t):
        """r-string momentum whose velocity equals that of the hole at t."""
        lo, hi = self.string_windows[r]
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        vel = self.mm.v1(ts)
        out = np.array([_root(lambda k: self.mm.v_r(r, k) - v, lo, hi) for v in vel])
        return out if np.ndim(t) else float(out[0])


def _string_window(mm: MomentumMap, r: int, v_F: float, n: int = 801):
    lo, hi = mm.intervals.strings[r]
    ks = np.linspace(lo, hi, n)[1:-1]
    v = mm.v_r(r, ks)
    # longest monotone run crossing [-v_F, v_F]
    sgn = np.sign(np.diff(v))
    best = None
    start = 0
    for i in range(1, len(sgn) + 1):
        if i == len(sgn) or sgn[i] != sgn[start]:
            seg_v = v[start:i + 1]
            if seg_v.min() < -v_F and seg_v.max() > v_F:
                a = start + int(np.argmin(np.abs(seg_v + v_F * sgn[start])))
                b = start + int(np.argmin(np.abs(seg_v - v_F * sgn[start])))
                cand = (ks[max(a - 1, start)], ks[min(b + 1, i)])
                if best is None or cand[1] - cand[0] > best[1] - best[0]:
                    best = cand
            start = i
    if best is None:
        return None, float(np.abs(v).max())
    f_lo = lambda k: mm.v_r(r, k) + v_F * np.sign(mm.v_r(r, best[1]) - mm.v_r(r, best[0]))
    f_hi = lambda k: mm.v_r(r, k) - v_F * np.sign(mm.v_r(r, best[1]) - mm.v_r(r, best[0]))
    a = _root(f_lo, *_local_bracket(f_lo, best))
    b = _root(f_hi, *_local_bracket(f_hi, best))
    return (min(a, b), max(a, b)), float(np.abs(v).max())


def _local_bracket(f, window, n=200):
    ks = np.linspace(window[0], window[1], n)
    vals = np.array([f(k) for k in ks])
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(idx) == 0:
        raise HypothesisError("string velocity window not bracketed")
    i = idx[0]
    return ks[i], ks[i + 1]


def build_atlas(mm: MomentumMap, n_scan: int = 801) -> VelocityAtlas:
    o = mm.obs
    v_F, mid, pF = o.v_F, mm.midpoint, mm.p_F
    flags = []
    ks = np.linspace(pF, mid, n_scan)[1:-1]
    v = mm.v1(ks)
    i = int(np.argmax(v))
    a, b = ks[max(i - 1, 0)], ks[min(i + 1, len(ks) - 1)]
    da, db = mm.v1_prime(a), mm.v1_prime(b)
    if da > 0 > db:
        P_m = brentq(mm.v1_prime, a, b, xtol=_XTOL, rtol=1e-15)
    else:
        P_m = minimize_scalar(lambda k: -mm.v1(k), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-13}).x
        flags.append("velocity maximum located without a derivative sign change")
    v_max = float(mm.v1(P_m))
    if v_max <= v_F:
        flags.append("particle velocity never exceeds v_F")
        K_m = P_m
    else:
        K_m = _root(lambda k: mm.v1(k) - v_F, P_m, mid)
    atlas = VelocityAtlas(mm=mm, P_m=float(P_m), P_M=float(2 * mid - P_m), K_m=float(K_m),
                          K_M=float(2 * mid - K_m), v_max=v_max, flags=flags)
    for r, _ in o.params.strings:
        win, vr_max = _string_window(mm, r, v_F)
        if win is None:
            flags.append(f"{r}-string velocity range does not cover [-v_F, v_F]")
        else:
            atlas.string_windows[r] = win
    return atlas


def verify_hypotheses(atlas: VelocityAtlas, grid_size: int = 1000) -> dict:
    """Check the velocity-structure statements on dense grids; report only."""
    mm, v_F = atlas.mm, atlas.v_F
    pF, kmax = mm.p_F, mm.k_max
    bullets = []

    def add(name, margin):
        bullets.append({"name": name, "pass": bool(margin > 0), "margin": float(margin)})

    kh = np.linspace(-pF, pF, grid_size)[1:-1]
    vh = mm.v1(kh)
    add("subsonic_fermi_zone", v_F - np.abs(vh).max())
    add("increasing_on_fermi_zone", np.diff(vh).min())

    def mono(a, b, sign):
        k = np.linspace(a, b, grid_size)[1:-1]
        return (sign * np.diff(mm.v1(k))).min()

    add("increasing_below_P_m", mono(pF, atlas.P_m, 1))
    add("decreasing_between_extrema", mono(atlas.P_m, atlas.P_M, -1))
    add("increasing_above_P_M", mono(atlas.P_M, kmax, 1))
    add("ordering_P_m_K_m_K_M_P_M", min(atlas.K_m - atlas.P_m, atlas.K_M - atlas.K_m, atlas.P_M - atlas.K_M))
    kw = np.linspace(atlas.K_m, atlas.K_M, grid_size)[1:-1]
    add("subsonic_window", v_F - np.abs(mm.v1(kw)).max())
    ko = np.concatenate([np.linspace(pF, atlas.K_m, grid_size // 2)[1:-1],
                         np.linspace(atlas.K_M, kmax, grid_size // 2)[1:-1]])
    add("supersonic_outside_window", np.abs(mm.v1(ko)).min() - v_F)
    for r, (lo, hi) in atlas.string_windows.items():
        k = np.linspace(lo, hi, grid_size)
        vr = mm.v_r(r, k)
        d = np.diff(vr)
        add(f"string_{r}_monotone_window", max(d.min(), (-d).min()))
    for msg in atlas.flags:
        bullets.append({"name": msg, "pass": False, "margin": float("nan")})
    return {"pass": all(b["pass"] for b in bullets), "bullets": bullets}
