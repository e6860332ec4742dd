"""Elementary kernels, bare phases and special-function values.

Everything here is real arithmetic.  A rapidity is a real number together with
a branch tag: branch 0 is the real line, branch 1 is the line shifted by i*pi/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# |sin 2eta| below this is treated as an exactly vanishing kernel
DEGENERATE_TOL = 1e-13
# |denominator| below this is a pole hit
POLE_TOL = 1e-12
_LAM_CLIP = 300.0


class KernelDomainError(ValueError):
    pass


@dataclass(frozen=True)
class Rapidity:
    re: float
    branch: int = 0  # 0: real line, 1: shifted by i*pi/2

    def __post_init__(self):
        if self.branch not in (0, 1):
            raise ValueError("branch must be 0 or 1")

    def __sub__(self, other: "Rapidity") -> "Rapidity":
        return Rapidity(self.re - other.re, (self.branch + other.branch) % 2)

    def __add__(self, other: "Rapidity") -> "Rapidity":
        return Rapidity(self.re + other.re, (self.branch + other.branch) % 2)


def sgn0(x: float, tol: float = DEGENERATE_TOL) -> int:
    """Sign with sgn(0) = 0 inside a tiny tolerance."""
    if abs(x) <= tol:
        return 0
    return 1 if x > 0 else -1


def reduce_angle(eta: float) -> tuple[float, bool]:
    """Return eta mod pi and whether the kernel vanishes identically there."""
    e = math.fmod(float(eta), math.pi)
    if e < 0:
        e += math.pi
    return e, abs(math.sin(2.0 * e)) < DEGENERATE_TOL


def wrap_angle(eta: float) -> float:
    """eta - pi*floor(eta/pi)."""
    return eta - math.pi * math.floor(eta / math.pi)


def _denominator(lam, s2, branch):
    sh = np.sinh(lam)
    if branch == 0:
        return sh * sh + s2
    ch = np.cosh(lam)
    return -ch * ch + s2


def kernel(lam, eta: float, branch: int = 0, deriv: int = 0):
    """K(lam|eta) = sin 2eta / (2 pi sinh(lam+i eta) sinh(lam-i eta)) and its
    first two lam-derivatives, on the real line or the i*pi/2 line."""
    lam = np.asarray(lam, dtype=float)
    e, degenerate = reduce_angle(eta)
    if degenerate:
        return np.zeros_like(lam)
    amp = math.sin(2.0 * e) / (2.0 * math.pi)
    s2 = math.sin(e) ** 2
    lc = np.clip(lam, -_LAM_CLIP, _LAM_CLIP)
    den = _denominator(lc, s2, branch)
    if np.any(np.abs(den) < POLE_TOL):
        raise KernelDomainError(f"kernel pole hit (eta={eta}, branch={branch})")
    if deriv == 0:
        return amp / den
    sign = 1.0 if branch == 0 else -1.0
    d1 = sign * np.sinh(2.0 * lc)
    if deriv == 1:
        return -amp * d1 / den**2
    if deriv == 2:
        d2 = sign * 2.0 * np.cosh(2.0 * lc)
        return amp * (2.0 * d1 * d1 - den * d2) / den**3
    raise ValueError("deriv must be 0, 1 or 2")


def kernel_r(lam, r: int, zeta: float, branch: int = 0, deriv: int = 0):
    """K_r = K(.|zeta(r+1)/2) + K(.|zeta(r-1)/2); the r=1 second term is zero."""
    if r < 1:
        raise ValueError("r must be >= 1")
    out = kernel(lam, 0.5 * zeta * (r + 1), branch, deriv)
    if r > 1:
        out = out + kernel(lam, 0.5 * zeta * (r - 1), branch, deriv)
    return out


def bare_phase(lam, eta: float, branch: int = 0):
    """theta(lam|eta), the primitive of 2 pi K vanishing at 0.

    Real line: 2 atan(cot eta tanh lam).  On the i*pi/2 line the contour runs
    up the imaginary axis (passing the pole on its left) and then along the
    shifted line, giving -pi sgn(pi - 2 eta) - 2 atan(tan eta tanh x).
    """
    lam = np.asarray(lam, dtype=float)
    e, degenerate = reduce_angle(eta)
    if degenerate:
        return np.zeros_like(lam)
    th = np.tanh(lam)
    if branch == 0:
        return 2.0 * np.arctan(th / math.tan(e))
    return -math.pi * sgn0(math.pi - 2.0 * e) - 2.0 * np.arctan(math.tan(e) * th)


def bare_phase_r(lam, r: int, zeta: float, branch: int = 0):
    out = bare_phase(lam, 0.5 * zeta * (r + 1), branch)
    if r > 1:
        out = out + bare_phase(lam, 0.5 * zeta * (r - 1), branch)
    return out


def barnes_g(n: int) -> float:
    """Barnes G at a positive integer: prod_{k=1}^{n-2} k!."""
    if int(n) != n or n < 1:
        raise ValueError("barnes_g needs an integer n >= 1")
    out = 1
    for k in range(1, int(n) - 1):
        out *= math.factorial(k)
    return float(out)


def gaudin_mehta_value(n: int) -> float:
    """int_{R^n} exp(-y.y) prod_{a<b} (y_a - y_b)^2 dy."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 0.5 ** (n * n / 2.0) * (2.0 * math.pi) ** (n / 2.0) * barnes_g(n + 2)
