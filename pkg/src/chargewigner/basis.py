"""Oscillator special functions and the Hermitian Wigner kernel basis.

The level basis W_nm(p, q) is the phase-space image of |n><m| for the
planar oscillator (dimensionless coordinates), normalized so that

    integral W_nm dp dq              = delta_nm
    2*pi * integral W_nm W_n'm'^* dp dq = delta_nn' delta_mm'

The closed form is radial: with r2 = p**2 + q**2 and d = n - m >= 0,

    W_nm = (1/pi) e^{-r2} (sqrt(2)(q - i p))**d (-1)**m sqrt(m!/n!) L_m^d(2 r2)

and the n < m case is its complex conjugate, so Hermiticity holds by
construction.  The form corresponds to momentum-representation
eigenfunctions carrying the Fourier phases (-i)^n relative to the real
Hermite functions; the momentum marginals in :mod:`chargewigner.states`
use the same convention.  Factorial ratios go through log-gamma, which
keeps the prefactor finite far beyond the n + m ~ 30 range where
factorials themselves overflow.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import lgamma, pi

import numpy as np
from scipy.signal import czt

from .errors import GridError, StateError
from .grids import UNITS_FREE, ComplexField, PhaseGrid
from .spectra import epsilon_continuous

KERNEL_UNIT = "unit"
KERNEL_EPSILON = "epsilon"

__all__ = [
    "BasisMatrixElement",
    "laguerre",
    "hermite_function",
    "wigner_basis_element",
    "diagonal_wigner",
    "basis_stack",
    "free_wigner_pair",
    "KERNEL_UNIT",
    "KERNEL_EPSILON",
]


@dataclass(frozen=True)
class BasisMatrixElement:
    """One sampled basis kernel W_nm together with its level indices."""

    n: int
    m: int
    field: ComplexField


def laguerre(k: int, alpha: int, x):
    """Generalized Laguerre polynomial L_k^alpha(x) by upward recurrence.

    The recurrence in the degree is stable for x >= 0, which is the only
    regime used here (arguments are 2*r**2).
    """
    if k < 0 or alpha < 0 or k != int(k) or alpha != int(alpha):
        raise ValueError(f"need integer k, alpha >= 0, got k={k}, alpha={alpha}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 + alpha - x) * cur - (j + alpha) * prev) / (j + 1)
    return cur if cur.ndim else float(cur)


def hermite_function(n: int, x):
    """Oscillator eigenfunction phi_n(x) (unit mass/frequency, hbar = 1)."""
    if n < 0:
        raise ValueError("level index must be >= 0")
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = pi ** (-0.25) * np.exp(-0.5 * x * x)
    for j in range(n):
        prev, cur = cur, (x * np.sqrt(2.0 / (j + 1)) * cur - np.sqrt(j / (j + 1.0)) * prev)
    return cur


def _radial_kernel(n: int, m: int, pp: np.ndarray, qq: np.ndarray) -> np.ndarray:
    """W_nm evaluated on coordinate meshes, n >= m."""
    d = n - m
    r2 = pp * pp + qq * qq
    lag = laguerre(m, d, 2.0 * r2)
    # prefactor sqrt(m!/n!) * (sqrt(2)|z|)**d computed in log space; the
    # amplitude is capped well inside float range for any r in the box.
    if d == 0:
        radial = np.exp(-r2) * lag / pi
        return radial.astype(complex) * (-1.0) ** m
    z = qq - 1j * pp
    absz = np.abs(z)
    log_pref = 0.5 * (lgamma(m + 1) - lgamma(n + 1))
    with np.errstate(divide="ignore"):
        log_amp = log_pref + d * (0.5 * np.log(2.0) + np.log(absz)) - r2
    amp = np.where(absz > 0, np.exp(log_amp), 0.0)
    phase = np.ones_like(z)
    nz = absz > 0
    phase[nz] = (z[nz] / absz[nz]) ** d
    return ((-1.0) ** m / pi) * amp * phase * lag


def wigner_basis_element(n: int, m: int, grid: PhaseGrid) -> BasisMatrixElement:
    """Sample W_nm on ``grid``.  W_mn is the pointwise conjugate."""
    if n < 0 or m < 0:
        raise ValueError("level indices must be >= 0")
    pp, qq = grid.meshes()
    if n >= m:
        values = _radial_kernel(n, m, pp, qq)
    else:
        values = np.conj(_radial_kernel(m, n, pp, qq))
    return BasisMatrixElement(n=n, m=m, field=ComplexField(grid, values))


def diagonal_wigner(n: int, grid: PhaseGrid) -> ComplexField:
    """W_nn: real field, integrates to 1 over the plane."""
    return wigner_basis_element(n, n, grid).field


def basis_stack(n_levels: int, grid: PhaseGrid) -> np.ndarray:
    """All W_nm for n, m < n_levels as an array of shape (N, N, n_p, n_q).

    Upper triangle is built once and mirrored by conjugation.
    """
    out = np.empty((n_levels, n_levels, grid.n_p, grid.n_q), dtype=complex)
    for n in range(n_levels):
        for m in range(n + 1):
            w = wigner_basis_element(n, m, grid).field.values
            out[n, m] = w
            if n != m:
                out[m, n] = np.conj(w)
    return out


def free_wigner_pair(psi: np.ndarray, grid: PhaseGrid, kernel: str = KERNEL_UNIT) -> ComplexField:
    """Kernel-weighted Wigner transform of a momentum wave function.

    Computes ``W(p, q) = (1/2pi) int K(p + P/2, p - P/2) psi^*(p + P/2)
    psi(p - P/2) exp(-i P q) dP`` with ``K = 1`` (plain transform, the
    nonlocal-theory distribution) or ``K = eps(p1, p2)`` built from the free
    relativistic dispersion.  ``psi`` holds samples on ``grid.p``.

    The P-integral runs over the lattice ``P = 2 k dp`` so both arguments of
    psi stay on the sample grid; the chirp-z transform then evaluates the
    oscillatory sum on the caller's q axis directly, so no wrap-around
    periodization occurs regardless of the q extent.
    """
    if kernel not in (KERNEL_UNIT, KERNEL_EPSILON):
        raise ValueError(f"unknown kernel {kernel!r}")
    if grid.units != UNITS_FREE:
        raise GridError("free_wigner_pair expects a grid in free-particle units")
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (grid.n_p,):
        raise StateError(f"psi must hold {grid.n_p} samples on the grid p-axis")

    amax = np.max(np.abs(psi))
    if amax == 0:
        raise StateError("psi is identically zero")
    edge = max(np.max(np.abs(psi[:4])), np.max(np.abs(psi[-4:])))
    if edge > 1e-4 * amax:
        # the correlation table truncates at the box edge; the induced error
        # scales like the squared edge amplitude
        raise StateError(
            "psi support reaches the p-grid boundary (edge amplitude "
            f"{edge / amax:.2e} of peak); enlarge the momentum range"
        )
    norm = np.sum(np.abs(psi) ** 2) * grid.dp
    if abs(norm - 1.0) > 1e-8:
        warnings.warn(f"psi is not square-normalized: |psi|^2 integrates to {norm:.6g}")

    n_p, n_q = grid.n_p, grid.n_q
    p = grid.p
    # correlation table x[j, k] = K * psi^*(p_{j+k}) psi(p_{j-k}), k in [-n_p, n_p]
    # (the doubled k range is the zero-padding; out-of-range indices hold zeros)
    k = np.arange(-n_p, n_p + 1)
    jj, kk = np.meshgrid(np.arange(n_p), k, indexing="ij")
    iplus = jj + kk
    iminus = jj - kk
    valid = (iplus >= 0) & (iplus < n_p) & (iminus >= 0) & (iminus < n_p)
    iplus_c = np.clip(iplus, 0, n_p - 1)
    iminus_c = np.clip(iminus, 0, n_p - 1)
    x = np.where(valid, np.conj(psi)[iplus_c] * psi[iminus_c], 0.0)
    if kernel == KERNEL_EPSILON:
        x = x * np.where(valid, epsilon_continuous(p[iplus_c], p[iminus_c]), 1.0)

    # sum_k x_k exp(-i 2 dp k q_l) via chirp-z along k, evaluated at q_l
    two_dp = 2.0 * grid.dp
    w = np.exp(-1j * two_dp * grid.dq)
    a = np.exp(1j * two_dp * grid.q[0])
    spectrum = czt(x, m=n_q, w=w, a=a, axis=1)
    # undo the k-index shift (czt sums from k = 0, our k starts at -n_p)
    spectrum *= np.exp(1j * two_dp * n_p * grid.q)[None, :]
    values = spectrum * (two_dp / (2.0 * pi))
    return ComplexField(grid, values)
