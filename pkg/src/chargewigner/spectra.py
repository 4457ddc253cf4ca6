"""Unit conventions, energy spectra and the pair-coherence factors.

Internally everything is computed with ``hbar = m = c = 1``: energies in
units of the rest energy, momenta in ``m*c``, free-particle positions in
``hbar/(m*c)`` and rotator phase-space coordinates dimensionless.  Only
:func:`compton_time` touches SI values.

The central objects are the symmetric/antisymmetric level-pair factors

    eps(m, n) = (E(m) + E(n)) / (2 sqrt(E(m) E(n)))
    chi(m, n) = (E(m) - E(n)) / (2 sqrt(E(m) E(n)))

which weight interference terms of the even and odd parts of the
phase-space distribution.  ``eps >= 1`` with equality exactly on pairs of
equal energy, so off-diagonal (interference) content is always enhanced.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .errors import SpectrumError

__all__ = [
    "PhysicalScales",
    "EnergySpectrum",
    "ChargeFactor",
    "rotator_spectrum",
    "free_dispersion",
    "charge_factors",
    "epsilon_continuous",
    "interference_frequency",
    "compton_time",
]


@dataclass(frozen=True)
class PhysicalScales:
    """Unit bookkeeping for a model system.

    ``lam`` is the dimensionless coupling: for the rotator the ratio of the
    Compton wavelength to the oscillator length (``lam**2 = hbar*omega_c/(m*c**2)``),
    for a free wave packet the ratio of the Compton wavelength to the packet
    width.  ``mass_ev`` is the rest energy in eV and is only used when
    converting to SI times.
    """

    lam: float
    mass_ev: float | None = None
    hbar: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam < 0:
            raise SpectrumError(f"coupling lambda must be finite and >= 0, got {self.lam}")
        if self.mass_ev is not None and self.mass_ev <= 0:
            raise SpectrumError(f"rest energy must be positive, got {self.mass_ev} eV")


@dataclass(frozen=True)
class EnergySpectrum:
    """Energy ladder of the square-root Hamiltonian, in rest-energy units.

    ``kind`` is ``"rotator"`` (finite table of levels) or ``"free"``
    (continuous dispersion, levels unused).
    """

    kind: str
    scales: PhysicalScales
    levels: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", lv)
        if self.kind not in ("rotator", "free"):
            raise SpectrumError(f"unknown spectrum kind {self.kind!r}")
        if lv.size:
            if not np.all(np.isfinite(lv)):
                raise SpectrumError("spectrum contains non-finite levels")
            if np.any(lv < 1.0 - 1e-12):
                raise SpectrumError("every level must be >= rest energy (1 in internal units)")

    @property
    def size(self) -> int:
        return int(self.levels.size)

    def energy(self, n: int) -> float:
        if not 0 <= n < self.size:
            raise SpectrumError(f"level index {n} outside 0..{self.size - 1}")
        return float(self.levels[n])

    def to_json(self) -> str:
        return json.dumps(
            {"kind": self.kind, "lambda": self.scales.lam, "levels": self.levels.tolist()},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "EnergySpectrum":
        data = json.loads(text)
        return cls(
            kind=data["kind"],
            scales=PhysicalScales(lam=data["lambda"]),
            levels=np.asarray(data["levels"], dtype=float),
        )


@dataclass(frozen=True)
class ChargeFactor:
    """The eps/chi matrices for a truncated level basis.

    Invariants (all following directly from the defining formulas):
    ``eps`` symmetric with unit diagonal, ``chi`` antisymmetric with zero
    diagonal, and ``eps**2 - chi**2 = 1`` elementwise.
    """

    even: np.ndarray
    odd: np.ndarray

    @property
    def size(self) -> int:
        return self.even.shape[0]

    def as_unit(self) -> "ChargeFactor":
        """The trivial (nonlocal-theory) factor: eps = 1, chi = 0."""
        n = self.size
        return ChargeFactor(even=np.ones((n, n)), odd=np.zeros((n, n)))


def rotator_spectrum(lam: float, n_levels: int = 64) -> EnergySpectrum:
    """Spectrum of the relativistic rotator.

    The planar reduction of a charged particle in a constant magnetic field
    has ``E(n) = sqrt(1 + 2*lam**2*(n + 1/2))`` in rest-energy units, with
    ``lam**2`` the cyclotron energy over the rest energy.
    """
    if n_levels < 1:
        raise SpectrumError(f"need at least one level, got n_levels={n_levels}")
    if not math.isfinite(lam) or lam < 0:
        raise SpectrumError(f"coupling lambda must be finite and >= 0, got {lam}")
    n = np.arange(n_levels)
    levels = np.sqrt(1.0 + 2.0 * lam**2 * (n + 0.5))
    return EnergySpectrum(kind="rotator", scales=PhysicalScales(lam=lam), levels=levels)


def free_dispersion(p):
    """Relativistic dispersion ``E(p) = sqrt(1 + p**2)`` (momenta in m*c)."""
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise SpectrumError("momentum must be finite")
    e = np.sqrt(1.0 + p * p)
    return float(e) if e.ndim == 0 else e


def charge_factors(spec: EnergySpectrum, n: int | None = None) -> ChargeFactor:
    """Build the eps/chi matrices from the first ``n`` levels of ``spec``."""
    if spec.kind != "rotator":
        raise SpectrumError("charge_factors needs a discrete (rotator) spectrum")
    if n is None:
        n = spec.size
    if n > spec.size:
        raise SpectrumError(f"requested {n} levels but spectrum has {spec.size}")
    e = spec.levels[:n]
    em = e[:, None]
    en = e[None, :]
    denom = 2.0 * np.sqrt(em * en)
    even = (em + en) / denom
    odd = (em - en) / denom
    # the identities eps(n,n) = 1 and chi(n,n) = 0 hold analytically; pin
    # them so they are not blurred by the rounding of sqrt(E*E)
    np.fill_diagonal(even, 1.0)
    np.fill_diagonal(odd, 0.0)
    return ChargeFactor(even=even, odd=odd)


def epsilon_continuous(p1, p2):
    """The eps factor for the free particle, as a function of two momenta."""
    e1 = free_dispersion(p1)
    e2 = free_dispersion(p2)
    return (e1 + e2) / (2.0 * np.sqrt(e1 * e2))


def interference_frequency(spec: EnergySpectrum, m: int, n: int) -> float:
    """Angular frequency ``(E(m) - E(n))/hbar`` of the (m, n) interference term."""
    return spec.energy(m) - spec.energy(n)


def compton_time(mass_ev: float) -> float:
    """Compton time ``hbar/(m c**2)`` in seconds, from the rest energy in eV."""
    if not math.isfinite(mass_ev) or mass_ev <= 0:
        raise SpectrumError(f"rest energy must be positive and finite, got {mass_ev} eV")
    return constants.hbar / (mass_ev * constants.elementary_charge)
