"""Uniform rectangular phase-space grids and sampled complex fields.

Samples sit at cell centers: ``p[j] = p_min + (j + 1/2)*dp``.  A symmetric
box therefore yields a sample set closed under ``p -> -p`` (index reversal),
which the parity and reality checks rely on.  Integrals over decaying
fields are plain Riemann sums, which on these grids are the periodic
trapezoidal rule and spectrally accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError

UNITS_ROTATOR = "rotator"
UNITS_FREE = "free"

__all__ = ["PhaseGrid", "ComplexField", "UNITS_ROTATOR", "UNITS_FREE"]


@dataclass(frozen=True)
class PhaseGrid:
    """A ``n_p x n_q`` sampling of the rectangle ``[p_min, p_max] x [q_min, q_max]``."""

    p_min: float
    p_max: float
    q_min: float
    q_max: float
    n_p: int
    n_q: int
    units: str = UNITS_ROTATOR

    def __post_init__(self):
        for lo, hi, name in ((self.p_min, self.p_max, "p"), (self.q_min, self.q_max, "q")):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise GridError(f"{name}-extent must be finite")
            if not lo < hi:
                raise GridError(f"{name}_min must be < {name}_max (got {lo} >= {hi})")
        for n, name in ((self.n_p, "n_p"), (self.n_q, "n_q")):
            if n < 8 or n % 2:
                raise GridError(f"{name} must be even and >= 8, got {n}")
        if self.units not in (UNITS_ROTATOR, UNITS_FREE):
            raise GridError(f"unknown units tag {self.units!r}")

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n_p

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.n_q

    @property
    def p(self) -> np.ndarray:
        return self.p_min + (np.arange(self.n_p) + 0.5) * self.dp

    @property
    def q(self) -> np.ndarray:
        return self.q_min + (np.arange(self.n_q) + 0.5) * self.dq

    def meshes(self):
        """(P, Q) meshes of shape (n_p, n_q); axis 0 is momentum."""
        return np.meshgrid(self.p, self.q, indexing="ij")

    @property
    def cell_area(self) -> float:
        return self.dp * self.dq

    def integrate(self, values: np.ndarray):
        return values.sum() * self.cell_area

    def is_star_compatible(self, hbar: float = 1.0, rtol: float = 1e-9) -> bool:
        """Whether the lattice supports the exact discrete Weyl correspondence.

        The displacement operators generated by the grid's Fourier modes close
        on a ``n x n`` matrix algebra exactly when ``dp*dq = 2*pi*hbar/n`` with
        square sample counts.  The star-product backend requires this.
        """
        if self.n_p != self.n_q:
            return False
        return abs(self.dp * self.dq * self.n_p / (2.0 * math.pi * hbar) - 1.0) < rtol

    @classmethod
    def star_compatible(
        cls,
        n: int,
        hbar: float = 1.0,
        aspect: float = 1.0,
        p_center: float = 0.0,
        q_center: float = 0.0,
        units: str = UNITS_ROTATOR,
    ) -> "PhaseGrid":
        """Build the ``n x n`` grid with ``dp*dq = 2*pi*hbar/n``.

        ``aspect`` is the ratio of momentum to position box length.
        """
        box = 2.0 * math.pi * hbar * n
        l_q = math.sqrt(box / aspect)
        l_p = aspect * l_q
        return cls(
            p_min=p_center - l_p / 2,
            p_max=p_center + l_p / 2,
            q_min=q_center - l_q / 2,
            q_max=q_center + l_q / 2,
            n_p=n,
            n_q=n,
            units=units,
        )


@dataclass(frozen=True)
class ComplexField:
    """Complex samples of a phase-space function on a :class:`PhaseGrid`."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n_p, self.grid.n_q):
            raise GridError(
                f"field shape {v.shape} does not match grid ({self.grid.n_p}, {self.grid.n_q})"
            )
        if not np.all(np.isfinite(v)):
            raise GridError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def integrate(self) -> complex:
        return complex(self.grid.integrate(self.values))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_area))

    def max_abs_imag(self) -> float:
        return float(np.max(np.abs(self.values.imag)))

    def conj(self) -> "ComplexField":
        return ComplexField(self.grid, np.conj(self.values))

    def __add__(self, other):
        self._check(other)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return ComplexField(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return ComplexField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def _check(self, other):
        if not isinstance(other, ComplexField) or other.grid != self.grid:
            raise GridError("field operands live on different grids")
