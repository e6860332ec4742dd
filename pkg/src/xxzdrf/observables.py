"""Dressed energy, momentum, charge and phase of the massless XXZ chain in
rapidity variables.

The anisotropy is Delta = cos(zeta) with 0 < zeta < pi.  All linear integral
equations live on [-q, q] and share the operator I + K(.|zeta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .fredholm import NumericalError, NystromOperator, QuadratureGrid, build_grid
from .kernels import (bare_phase, bare_phase_r, kernel, kernel_r, reduce_angle,
                      sgn0, wrap_angle)

Q_MIN, Q_MAX = 1e-6, 50.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    zeta: float
    J: float = 1.0
    h: float | None = None
    density: float | None = None
    q: float | None = None
    N: int = 128
    strings: tuple = ()  # ((r, parity), ...) with r >= 2, parity in {0, 1}

    @classmethod
    def from_delta(cls, delta: float, **kw) -> "ModelParams":
        if not -1.0 < delta < 1.0:
            raise ConfigError("need |Delta| < 1")
        return cls(zeta=float(np.arccos(delta)), **kw)

    @property
    def delta(self) -> float:
        return math.cos(self.zeta)

    @property
    def h_c(self) -> float:
        return 4.0 * self.J * (1.0 + math.cos(self.zeta))

    def validate(self) -> None:
        if not 0.0 < self.zeta < math.pi:
            raise ConfigError("zeta must lie in (0, pi)")
        if self.J <= 0:
            raise ConfigError("J must be positive")
        if int(self.N) != self.N or self.N < 8:
            raise ConfigError("N must be an integer >= 8")
        given = [x is not None for x in (self.h, self.density, self.q)]
        if sum(given) != 1:
            raise ConfigError("give exactly one of h, density, q")
        if self.h is not None and not 0.0 < self.h < self.h_c:
            raise ConfigError(f"h must lie in (0, h_c={self.h_c:.6g})")
        if self.density is not None and not 0.0 < self.density < 0.5:
            raise ConfigError("density must lie in (0, 1/2)")
        if self.q is not None and not 0.0 < self.q < Q_MAX:
            raise ConfigError("q must lie in (0, 50)")
        for item in self.strings:
            r, par = item
            if int(r) != r or r < 2 or par not in (0, 1):
                raise ConfigError(f"bad string spec {item!r}")


def ell_r(r: int, zeta: float) -> int:
    return 1 - r + 2 * math.floor(r * zeta / (2 * math.pi))


def m_r(r: int, zeta: float) -> int:
    out = 2 - r - (1 if r == 1 else 0)
    for ups in (1, -1):
        out += 2 * math.floor(zeta * (r + ups) / (2 * math.pi))
    return out


def _charge_and_aux(Q: float, zeta: float, N: int):
    grid = build_grid(Q, N)
    op = NystromOperator(grid, lambda x: kernel(x, zeta))
    lam = grid.nodes
    sol = op.solve(np.column_stack([np.ones_like(lam), kernel(lam, 0.5 * zeta)]))
    return grid, op, sol[:, 0], sol[:, 1]


def _edge_values(Q, zeta, N):
    """Z_Q(Q) and g_Q(Q), where g_Q solves the equation driven by K(.|zeta/2)."""
    grid, op, Z, g = _charge_and_aux(Q, zeta, N)
    z_q = op.extend(Z, Q, lambda x: np.ones_like(x))[0]
    g_q = op.extend(g, Q, lambda x: kernel(x, 0.5 * zeta))[0]
    return grid, z_q, g_q, g


def _bracket_root(fun, lo=Q_MIN, hi=Q_MAX):
    pts = [lo] + [0.25 * 2.0**k for k in range(8)] + [hi]
    pts = sorted(p for p in pts if lo <= p <= hi)
    prev_x, prev_f = pts[0], fun(pts[0])
    for x in pts[1:]:
        fx = fun(x)
        if prev_f == 0.0:
            return prev_x, prev_x
        if np.sign(fx) != np.sign(prev_f):
            return prev_x, x
        prev_x, prev_f = x, fx
    return None


def fermi_rapidity_from_field(zeta, J, h, N) -> float:
    amp = 4.0 * math.pi * J * math.sin(zeta)

    def f(Q):
        _, z_q, g_q, _ = _edge_values(Q, zeta, N)
        return h * z_q - amp * g_q

    br = _bracket_root(f)
    if br is None:
        raise ConfigError("field outside massless window: no Fermi rapidity in (1e-6, 50)")
    if br[0] == br[1]:
        return br[0]
    return brentq(f, *br, xtol=1e-15, rtol=1e-15, maxiter=200)


def resolve_field(zeta, J, D, N) -> tuple[float, float]:
    """Fermi rapidity and field from the magnon density D = p_1(q)/pi."""
    def f(Q):
        grid, _, _, g = _charge_and_aux(Q, zeta, N)
        return grid.integrate(g) - D

    br = _bracket_root(f)
    if br is None:
        raise ConfigError(f"density {D} not reachable for Q in (1e-6, 50)")
    q = br[0] if br[0] == br[1] else brentq(f, *br, xtol=1e-15, rtol=1e-15, maxiter=200)
    _, z_q, g_q, _ = _edge_values(q, zeta, N)
    h = 4.0 * math.pi * J * math.sin(zeta) * g_q / z_q
    return q, h


@dataclass
class Observables:
    """Solved rapidity-space data.  Treat as immutable after construction."""

    params: ModelParams
    zeta: float
    J: float
    h: float
    q: float
    grid: QuadratureGrid
    op: NystromOperator = field(repr=False)
    Z: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    eps: np.ndarray = field(repr=False)
    eps_d1: np.ndarray = field(repr=False)
    eps_d2: np.ndarray = field(repr=False)
    p1_d1: np.ndarray = field(repr=False)
    p1_d2: np.ndarray = field(repr=False)
    p_F: float = 0.0
    v_F: float = 0.0
    shift_sign: int = 0  # sgn(pi - 2 zeta), zero at the free-fermion point

    # ---- driving terms -------------------------------------------------
    def _amp(self):
        return 4.0 * math.pi * self.J * math.sin(self.zeta)

    def _k(self, branch, deriv=0):
        return lambda x: kernel(x, self.zeta, branch, deriv)

    def _extend(self, values, lam, rhs, branch):
        return self.op.extend(values, lam, rhs, kernel=self._k(branch))

    # ---- r = 1 ----------------------------------------------------------
    def Z_at(self, lam):
        return self._scalar(lam, self.op.extend(self.Z, lam, lambda x: np.ones_like(x)))

    def eps1(self, lam, branch: int = 0, deriv: int = 0):
        z, amp, h, q = self.zeta, self._amp(), self.h, self.q
        if deriv == 0:
            rhs = lambda x: h - amp * kernel(x, 0.5 * z, branch)
            vals = self.eps
        elif deriv == 1:
            rhs = lambda x: -amp * kernel(x, 0.5 * z, branch, 1)
            vals = self.eps_d1
        elif deriv == 2:
            e1p, e1m = self._edge(self.eps_d1, lambda x: -amp * kernel(x, 0.5 * z, 0, 1))
            kb = self._k(branch)
            rhs = lambda x: (-amp * kernel(x, 0.5 * z, branch, 2)
                             + kb(x - q) * e1p - kb(x + q) * e1m)
            vals = self.eps_d2
        else:
            raise ValueError("deriv must be 0, 1 or 2")
        return self._scalar(lam, self._extend(vals, lam, rhs, branch))

    def p1_prime(self, lam, branch: int = 0, deriv: int = 1):
        z, q = self.zeta, self.q
        if deriv == 1:
            rhs = lambda x: 2 * math.pi * kernel(x, 0.5 * z, branch)
            vals = self.p1_d1
        elif deriv == 2:
            pp, pm = self._edge(self.p1_d1, lambda x: 2 * math.pi * kernel(x, 0.5 * z, 0))
            kb = self._k(branch)
            rhs = lambda x: (2 * math.pi * kernel(x, 0.5 * z, branch, 1)
                             + kb(x - q) * pp - kb(x + q) * pm)
            vals = self.p1_d2
        else:
            raise ValueError("deriv must be 1 or 2")
        return self._scalar(lam, self._extend(vals, lam, rhs, branch))

    def p1(self, lam, branch: int = 0):
        return self.dressed_momentum_r(1, lam, branch)

    def _edge(self, vals, rhs):
        out = self.op.extend(vals, np.array([self.q, -self.q]), rhs)
        return out[0], out[1]

    @staticmethod
    def _scalar(lam, arr):
        return arr if np.ndim(lam) else float(arr[0])

    # ---- general r ------------------------------------------------------
    def string_branch(self, r: int) -> int:
        if r == 1:
            return 0
        for rr, par in self.params.strings:
            if rr == r:
                return par
        raise ConfigError(f"{r}-strings are not enabled in the model parameters")

    def dressed_energy_r(self, r: int, lam, branch: int | None = None, deriv: int = 0):
        """eps_r on its rapidity line (branch defaults to the string parity)."""
        if branch is None:
            branch = self.string_branch(r)
        if r == 1:
            return self.eps1(lam, branch, deriv)
        self.string_branch(r)
        x = np.atleast_1d(np.asarray(lam, dtype=float))
        nodes, w = self.grid.nodes, self.grid.weights
        kr = kernel_r(x[:, None] - nodes[None, :], r, self.zeta, branch, deriv)
        out = -self._amp() * kernel(x, 0.5 * r * self.zeta, branch, deriv) - kr @ (w * self.eps)
        if deriv == 0:
            out = out + r * self.h
        return self._scalar(lam, out)

    def momentum_constant(self, r: int, branch: int) -> float:
        """pi l_r - p_F m_r - 2 p_F sum_sigma (...) 1_A, the piecewise constant part of p_r."""
        z = self.zeta
        out = math.pi * ell_r(r, z) - self.p_F * m_r(r, z)
        for sig in (1, -1):
            if sig == -1 and r == 1:
                continue
            wv = wrap_angle(0.5 * (r + sig) * z)
            edge = min(wv, math.pi - wv)
            inside = branch == 1 or edge < 1e-13
            if inside:
                out -= 2 * self.p_F * sgn0(1.0 - 2.0 * wv / math.pi)
        return out

    def dressed_momentum_r(self, r: int, lam, branch: int | None = None, deriv: int = 0):
        if branch is None:
            branch = self.string_branch(r)
        if r > 1:
            self.string_branch(r)
        if r == 1 and deriv >= 1:
            return self.p1_prime(lam, branch, deriv)
        x = np.atleast_1d(np.asarray(lam, dtype=float))
        nodes, w = self.grid.nodes, self.grid.weights
        diff = x[:, None] - nodes[None, :]
        eta = 0.5 * r * self.zeta
        if deriv == 0:
            out = (bare_phase(x, eta, branch)
                   - bare_phase_r(diff, r, self.zeta, branch) @ (w * self.p1_d1) / (2 * math.pi)
                   + self.momentum_constant(r, branch))
        else:
            out = (2 * math.pi * kernel(x, eta, branch, deriv - 1)
                   - kernel_r(diff, r, self.zeta, branch, deriv - 1) @ (w * self.p1_d1))
        return self._scalar(lam, out)

    def dressed_phase(self, r: int, lam, mu, mu_branch: int = 0):
        """phi_r(lam, mu) for real lam and mu on the given branch; returns an
        array of shape (len(lam), len(mu))."""
        if r > 1:
            self.string_branch(r)
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        const = 0.5 * m_r(r, self.zeta)

        def rhs(x):
            return bare_phase_r(x[:, None] - mu[None, :], r, self.zeta, mu_branch) / (2 * math.pi) + const

        nodes, w = self.grid.nodes, self.grid.weights
        phi_nodes = self.op.solve(rhs(nodes))
        kmat = kernel(lam[:, None] - nodes[None, :], self.zeta)
        return rhs(lam) - (kmat * w[None, :]) @ phi_nodes


def solve_core(params: ModelParams) -> Observables:
    params.validate()
    zeta, J, N = params.zeta, params.J, int(params.N)
    if params.h is not None:
        h = float(params.h)
        q = fermi_rapidity_from_field(zeta, J, h, N)
    elif params.density is not None:
        q, h = resolve_field(zeta, J, params.density, N)
    else:
        q = float(params.q)
        _, z_q, g_q, _ = _edge_values(q, zeta, N)
        h = 4.0 * math.pi * J * math.sin(zeta) * g_q / z_q
        if not 0.0 < h < params.h_c:
            raise ConfigError("Fermi rapidity gives a field outside the massless window")

    grid, op, Z, g = _charge_and_aux(q, zeta, N)
    lam = grid.nodes
    amp = 4.0 * math.pi * J * math.sin(zeta)
    eps = h * Z - amp * g
    p1_d1 = 2 * math.pi * g
    eps_d1 = op.solve(-amp * kernel(lam, 0.5 * zeta, 0, 1))
    kq = lambda x: kernel(x, zeta)
    e1 = op.extend(eps_d1, np.array([q, -q]), lambda x: -amp * kernel(x, 0.5 * zeta, 0, 1))
    eps_d2 = op.solve(-amp * kernel(lam, 0.5 * zeta, 0, 2) + kq(lam - q) * e1[0] - kq(lam + q) * e1[1])
    pp = op.extend(p1_d1, np.array([q, -q]), lambda x: 2 * math.pi * kernel(x, 0.5 * zeta))
    p1_d2 = op.solve(2 * math.pi * kernel(lam, 0.5 * zeta, 0, 1) + kq(lam - q) * pp[0] - kq(lam + q) * pp[1])
    if not np.all(np.isfinite(eps_d2)):
        raise NumericalError("non-finite dressed-energy derivatives")
    p_F = math.pi * grid.integrate(g)
    v_F = float(e1[0] / pp[0])
    _, degenerate = reduce_angle(zeta)
    return Observables(params=params, zeta=zeta, J=J, h=h, q=q, grid=grid, op=op, Z=Z, g=g,
                       eps=eps, eps_d1=eps_d1, eps_d2=eps_d2, p1_d1=p1_d1, p1_d2=p1_d2,
                       p_F=p_F, v_F=v_F, shift_sign=sgn0(math.pi - 2 * zeta))


def identity_residuals(obs: Observables) -> dict:
    """Sup-norm residuals of the two charge/phase identities:
    phi_1(lam, q) - phi_1(lam, -q) + 1 = Z(lam) on the nodes, and
    1 + phi_1(q, q) - phi_1(-q, q) = 1/Z(q)."""
    q, lam = obs.q, obs.grid.nodes
    phi = obs.dressed_phase(1, lam, np.array([q, -q]))
    on_nodes = float(np.max(np.abs(phi[:, 0] - phi[:, 1] + 1.0 - obs.Z)))
    edge = obs.dressed_phase(1, np.array([q, -q]), np.array([q]))
    at_edge = abs(1.0 + edge[0, 0] - edge[1, 0] - 1.0 / float(obs.Z_at(q)))
    return {"charge_from_phase": on_nodes, "inverse_charge_at_edge": float(at_edge)}
