"""Excitation configurations, their momentum and energy, and the shift function."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .momentum import MomentumMap


class ExcitationError(ValueError):
    pass


@dataclass(frozen=True)
class ExcitationConfig:
    """Umklapp integers, hole momenta and r-string momenta (r=1 are particles)."""

    ell_plus: int = 0
    ell_minus: int = 0
    holes: tuple = ()
    strings: dict = field(default_factory=dict)
    spin_sector: int = 0

    @property
    def n_holes(self) -> int:
        return len(self.holes)

    @property
    def particles(self) -> tuple:
        return tuple(self.strings.get(1, ()))

    def string_count(self, r: int) -> int:
        return len(self.strings.get(r, ()))

    def validate(self, mm: MomentumMap | None = None) -> None:
        for r in self.strings:
            if int(r) != r or r < 1:
                raise ExcitationError(f"bad string length {r!r}")
        weight = sum(r * len(ks) for r, ks in self.strings.items())
        if self.n_holes != weight + self.ell_plus + self.ell_minus:
            raise ExcitationError(
                f"counting constraint violated: n_h={self.n_holes} but "
                f"sum r n_r + l_+ + l_- = {weight + self.ell_plus + self.ell_minus}")
        if mm is None:
            return
        tol = 1e-12
        pF = mm.p_F
        for t in self.holes:
            if not -pF - tol <= t <= pF + tol:
                raise ExcitationError(f"hole momentum {t} outside [-p_F, p_F]")
        for k in self.particles:
            if not pF - tol <= k <= mm.k_max + tol:
                raise ExcitationError(f"particle momentum {k} outside the particle interval")
        for r, ks in self.strings.items():
            if r == 1:
                continue
            lo, hi = mm.intervals.strings.get(r, (None, None))
            if lo is None:
                raise ExcitationError(f"{r}-strings are not enabled")
            for k in ks:
                if not lo - tol <= k <= hi + tol:
                    raise ExcitationError(f"{r}-string momentum {k} outside [{lo}, {hi}]")

    def __add__(self, other: "ExcitationConfig") -> "ExcitationConfig":
        strings = {r: tuple(self.strings.get(r, ())) + tuple(other.strings.get(r, ()))
                   for r in set(self.strings) | set(other.strings)}
        return ExcitationConfig(self.ell_plus + other.ell_plus, self.ell_minus + other.ell_minus,
                                tuple(self.holes) + tuple(other.holes), strings,
                                self.spin_sector + other.spin_sector)

    def to_json(self) -> str:
        doc = {"ell_plus": self.ell_plus, "ell_minus": self.ell_minus,
               "holes": [repr(float(t)) for t in self.holes],
               "strings": {str(r): [repr(float(k)) for k in ks] for r, ks in sorted(self.strings.items())},
               "spin_sector": self.spin_sector}
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExcitationConfig":
        doc = json.loads(text)
        return cls(int(doc.get("ell_plus", 0)), int(doc.get("ell_minus", 0)),
                   tuple(float(t) for t in doc.get("holes", ())),
                   {int(r): tuple(float(k) for k in ks) for r, ks in doc.get("strings", {}).items()},
                   int(doc.get("spin_sector", 0)))


def excitation_momentum(cfg: ExcitationConfig, mm: MomentumMap) -> float:
    cfg.validate(mm)
    total = sum(float(k) for ks in cfg.strings.values() for k in ks)
    total += mm.p_F * (cfg.ell_plus - cfg.ell_minus) + math.pi * cfg.spin_sector
    return total - sum(float(t) for t in cfg.holes)


def excitation_energy(cfg: ExcitationConfig, mm: MomentumMap) -> float:
    cfg.validate(mm)
    total = 0.0
    for r, ks in cfg.strings.items():
        if ks:
            total += float(np.sum(mm.e_r(r, np.asarray(ks, dtype=float))))
    if cfg.holes:
        total -= float(np.sum(mm.e1(np.asarray(cfg.holes, dtype=float))))
    return total


def left_particle_count(cfg: ExcitationConfig, mm: MomentumMap) -> int:
    """Particles whose rapidity sits on the left real tail (-inf, -q)."""
    ks = cfg.particles
    if not ks:
        return 0
    _, _, segs = mm.hat_p1_inverse(np.asarray(ks, dtype=float))
    return int(np.sum(segs == "left"))


def shift_function(cfg: ExcitationConfig, upsilon: int, mm: MomentumMap) -> float:
    if upsilon not in (1, -1):
        raise ValueError("upsilon must be +1 or -1")
    cfg.validate(mm)
    pF = mm.p_F
    edge = upsilon * pF
    z_edge = float(mm.Z_momentum(pF))
    ell = {1: cfg.ell_plus, -1: cfg.ell_minus}
    out = -upsilon * ell[upsilon] + 0.5 * cfg.spin_sector * z_edge
    if cfg.holes:
        out += float(np.sum(mm.phi_momentum(1, edge, np.asarray(cfg.holes, dtype=float))))
    for r, ks in cfg.strings.items():
        if ks:
            out -= float(np.sum(mm.phi_momentum(r, edge, np.asarray(ks, dtype=float))))
    for ups2 in (1, -1):
        if ell[ups2]:
            out -= ell[ups2] * float(mm.phi_momentum(1, edge, ups2 * pF)[0, 0])
    out += mm.obs.shift_sign * left_particle_count(cfg, mm) * z_edge
    return out


def edge_exponents(cfg: ExcitationConfig, mm: MomentumMap) -> tuple[float, float]:
    """(Delta_+, Delta_-), the squared shift function at the two Fermi edges."""
    return shift_function(cfg, 1, mm) ** 2, shift_function(cfg, -1, mm) ** 2
