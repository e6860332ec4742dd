"""Momentum representation: the piecewise shifted momentum, its inverse,
dispersions, velocities, and phases/charge as functions of momenta."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .observables import Observables

SEGMENTS = ("hole", "right", "top", "left")
SEGMENT_BRANCH = {"hole": 0, "right": 0, "top": 1, "left": 0}
_FAR = 40.0  # rapidity standing in for infinity (kernels are ~e^-80 there)
_T_EDGE = 1.0 - 2.0**-50


class MomentumDomainError(ValueError):
    pass


@dataclass(frozen=True)
class MomentumIntervals:
    hole: tuple
    particle: tuple
    strings: dict


def _cheb_nodes(a, b, n):
    x = 0.5 * (1 - np.cos(np.linspace(0.0, math.pi, n)))
    return a + (b - a) * x


class _MonotoneBranch:
    """Monotone scalar map t -> k on [a, b] with an inverse via PCHIP + Newton."""

    def __init__(self, fun, dfun, a, b, n=513):
        self.fun, self.dfun, self.a, self.b = fun, dfun, a, b
        t = _cheb_nodes(a, b, n)
        k = fun(t)
        dk = np.diff(k)
        if not (np.all(dk > 0) or np.all(dk < 0)):
            raise MomentumDomainError("map is not strictly monotone on its segment")
        self.increasing = bool(dk[0] > 0)
        order = slice(None) if self.increasing else slice(None, None, -1)
        self.k_lo, self.k_hi = float(min(k[0], k[-1])), float(max(k[0], k[-1]))
        self._inv = PchipInterpolator(k[order], t[order])

    def inverse(self, k):
        k = np.asarray(k, dtype=float)
        t = np.clip(self._inv(np.clip(k, self.k_lo, self.k_hi)), self.a, self.b)
        for _ in range(3):
            d = self.dfun(t)
            step = np.where(np.abs(d) > 0, (self.fun(t) - k) / np.where(d == 0, 1.0, d), 0.0)
            t = np.clip(t - step, self.a, self.b)
        res = np.abs(self.fun(t) - k)
        bad = np.nonzero(res > 1e-11)[0]
        for i in bad:
            ki = float(k.flat[i])
            fa, fb = self.fun(np.array([self.a]))[0] - ki, self.fun(np.array([self.b]))[0] - ki
            if fa * fb < 0:
                t.flat[i] = brentq(lambda s: self.fun(np.array([s]))[0] - ki, self.a, self.b,
                                   xtol=1e-15, rtol=1e-15)
        return t


class MomentumMap:
    """k = hat p_1(lam) over the oriented concatenation hole | right | top | left,
    plus the r-string momenta p_r for the enabled strings."""

    def __init__(self, obs: Observables):
        self.obs = obs
        o = obs
        q, pF, s = o.q, o.p_F, o.shift_sign
        self.p_F = pF
        self.shift = 2.0 * pF * s
        tq = math.tanh(q)
        self._branches = {
            "hole": _MonotoneBranch(lambda t: o.p1(t), lambda t: o.p1_prime(t), -q, q),
            "right": _MonotoneBranch(lambda t: o.p1(self._lam(t)),
                                     lambda t: o.p1_prime(self._lam(t)) * self._jac(t), tq, _T_EDGE),
            "top": _MonotoneBranch(lambda t: o.p1(-self._lam(t), 1) + 2 * math.pi,
                                   lambda t: -o.p1_prime(-self._lam(t), 1) * self._jac(t),
                                   -_T_EDGE, _T_EDGE),
            "left": _MonotoneBranch(lambda t: o.p1(self._lam(t)) - self.shift + 2 * math.pi,
                                    lambda t: o.p1_prime(self._lam(t)) * self._jac(t), -_T_EDGE, -tq),
        }
        far = o.p1(_FAR)
        self.junctions = np.array([
            -pF, pF, far, o.p1(-_FAR, 1) + 2 * math.pi, 2 * math.pi - pF - self.shift])
        self.k_min, self.k_max = float(self.junctions[0]), float(self.junctions[-1])
        self._strings = {}
        for r, par in o.params.strings:
            self._strings[r] = _MonotoneBranch(
                lambda t, r=r, par=par: o.dressed_momentum_r(r, self._lam(t), par),
                lambda t, r=r, par=par: o.dressed_momentum_r(r, self._lam(t), par, deriv=1) * self._jac(t),
                -_T_EDGE, _T_EDGE)

    @staticmethod
    def _lam(t):
        return np.arctanh(np.asarray(t, dtype=float))

    @staticmethod
    def _jac(t):
        t = np.asarray(t, dtype=float)
        return 1.0 / (1.0 - t * t)

    # ---- intervals ------------------------------------------------------
    @property
    def intervals(self) -> MomentumIntervals:
        strings = {r: (b.k_lo, b.k_hi) for r, b in self._strings.items()}
        return MomentumIntervals(hole=(-self.p_F, self.p_F),
                                 particle=(self.p_F, self.k_max), strings=strings)

    @property
    def midpoint(self) -> float:
        """Reflection centre of the particle interval: pi - p_F sgn(pi - 2 zeta)."""
        return 0.5 * (self.p_F + self.k_max)

    # ---- hat p_1 and its inverse -----------------------------------------
    def hat_p1(self, lam, segment: str):
        o = self.obs
        lam = np.asarray(lam, dtype=float)
        if segment in ("hole", "right"):
            out = o.p1(np.atleast_1d(lam))
        elif segment == "top":
            out = o.p1(np.atleast_1d(lam), 1) + 2 * math.pi
        elif segment == "left":
            out = o.p1(np.atleast_1d(lam)) - self.shift + 2 * math.pi
        else:
            raise ValueError(f"unknown segment {segment!r}")
        return out if lam.ndim else float(out[0])

    def segment_of(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        tol = 1e-12
        if np.any(k < self.k_min - tol) or np.any(k > self.k_max + tol):
            raise MomentumDomainError(f"momentum outside [{self.k_min}, {self.k_max}]")
        idx = np.clip(np.searchsorted(self.junctions, k, side="right") - 1, 0, 3)
        return idx

    def hat_p1_inverse(self, k):
        """Rapidity real parts, branch tags and segment names for momenta k."""
        scalar = np.ndim(k) == 0
        k = np.atleast_1d(np.asarray(k, dtype=float))
        idx = self.segment_of(k)
        lam = np.empty_like(k)
        for j, name in enumerate(SEGMENTS):
            sel = idx == j
            if not np.any(sel):
                continue
            t = self._branches[name].inverse(k[sel])
            lam[sel] = t if name == "hole" else (-self._lam(t) if name == "top" else self._lam(t))
        branch = np.where(idx == 2, 1, 0)
        segs = np.array(SEGMENTS, dtype=object)[idx]
        if scalar:
            return float(lam[0]), int(branch[0]), str(segs[0])
        return lam, branch, segs

    # ---- dispersion and velocity in momentum ------------------------------
    def _by_branch(self, k, fun):
        scalar = np.ndim(k) == 0
        lam, br, _ = self.hat_p1_inverse(np.atleast_1d(k))
        out = np.empty_like(lam)
        for b in (0, 1):
            sel = br == b
            if np.any(sel):
                out[sel] = fun(lam[sel], b)
        return float(out[0]) if scalar else out

    def velocity_at(self, lam, branch=0):
        o = self.obs
        return o.eps1(lam, branch, 1) / o.p1_prime(lam, branch, 1)

    def velocity_prime_at(self, lam, branch=0):
        o = self.obs
        e1, e2 = o.eps1(lam, branch, 1), o.eps1(lam, branch, 2)
        p1, p2 = o.p1_prime(lam, branch, 1), o.p1_prime(lam, branch, 2)
        return (e2 * p1 - e1 * p2) / p1**3

    def e1(self, k):
        return self._by_branch(k, lambda lam, b: self.obs.eps1(lam, b))

    def v1(self, k):
        return self._by_branch(k, self.velocity_at)

    def v1_prime(self, k):
        return self._by_branch(k, self.velocity_prime_at)

    # ---- r-strings ----------------------------------------------------------
    def _string(self, r):
        if r not in self._strings:
            raise MomentumDomainError(f"{r}-strings are not enabled")
        return self._strings[r]

    def p_r_inverse(self, r: int, k):
        if r == 1:
            return self.hat_p1_inverse(k)
        br = self._string(r)
        kk = np.atleast_1d(np.asarray(k, dtype=float))
        if np.any(kk < br.k_lo - 1e-12) or np.any(kk > br.k_hi + 1e-12):
            raise MomentumDomainError(f"momentum outside the {r}-string interval")
        lam = self._lam(br.inverse(kk))
        par = self.obs.string_branch(r)
        if np.ndim(k) == 0:
            return float(lam[0]), par, "string"
        return lam, np.full(lam.shape, par), np.array(["string"] * lam.size, dtype=object)

    def _string_lam(self, r, k):
        lam, _, _ = self.p_r_inverse(r, k)
        return lam, self.obs.string_branch(r)

    def e_r(self, r: int, k):
        if r == 1:
            return self.e1(k)
        lam, par = self._string_lam(r, k)
        return self.obs.dressed_energy_r(r, lam, par)

    def v_r(self, r: int, k):
        if r == 1:
            return self.v1(k)
        lam, par = self._string_lam(r, k)
        o = self.obs
        return o.dressed_energy_r(r, lam, par, 1) / o.dressed_momentum_r(r, lam, par, 1)

    def v_r_prime(self, r: int, k):
        if r == 1:
            return self.v1_prime(k)
        lam, par = self._string_lam(r, k)
        o = self.obs
        e1, e2 = o.dressed_energy_r(r, lam, par, 1), o.dressed_energy_r(r, lam, par, 2)
        p1, p2 = o.dressed_momentum_r(r, lam, par, 1), o.dressed_momentum_r(r, lam, par, 2)
        return (e2 * p1 - e1 * p2) / p1**3

    # ---- phases and charge ----------------------------------------------------
    def Z_momentum(self, s):
        lam, br, _ = self.hat_p1_inverse(s)
        if np.any(np.asarray(br) != 0):
            raise MomentumDomainError("dressed charge is only evaluated at real rapidities")
        return self.obs.Z_at(lam)

    def phi_momentum(self, r: int, s, k):
        """phi_r(hat p_1^{-1}(s), p_r^{-1}(k)) as an array of shape (len(s), len(k))."""
        lam_s, br_s, _ = self.hat_p1_inverse(np.atleast_1d(s))
        if np.any(br_s != 0):
            raise MomentumDomainError("first phase argument must map to a real rapidity")
        mu, br, _ = self.p_r_inverse(r, np.atleast_1d(k))
        out = np.empty((lam_s.size, mu.size))
        for b in (0, 1):
            sel = br == b
            if np.any(sel):
                out[:, sel] = self.obs.dressed_phase(r, lam_s, mu[sel], b)
        return out
