"""Four-component phase-space distributions of charge-structured states.

A state in the energy representation carries coefficients ``C_{n;+}`` and
``C_{n;-}`` on the particle/antiparticle branches.  Its phase-space image
splits into four fields: two real even parts (one per branch) built with
the eps factor,

    W_[s](p, q) = sum_{m,n} eps(m, n) W_nm(p, q) rho^[s]_{mn},
    rho^[s]_{mn} = C_{m;s}^* C_{n;s},

and two mutually conjugate odd parts built with the chi factor from the
cross-branch matrices ``sigma^{s}_{mn} = C_{m;s}^* C_{n;-s}``.  Setting
``eps -> 1, chi -> 0`` (nonlocal mode) recovers the ordinary distribution
of the same state, so the eps factor acts only on interference terms and
scales each one up by eps(m, n) > 1.

Open-system states enter through a Hermitian overlap kernel ``a(m, n)``
(unit diagonal, |a| < 1 off it) multiplying the even matrices elementwise;
the products ``a(m, n) eps(m, n)`` decide whether interference survives.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .basis import basis_stack, hermite_function
from .errors import StateError
from .grids import ComplexField, PhaseGrid
from .spectra import ChargeFactor

MODE_STANDARD = "standard"
MODE_NONLOCAL = "nonlocal"
OBS_POSITION = "position"
OBS_MOMENTUM = "momentum"

__all__ = [
    "ChargeStateVector",
    "CoefficientMatrices",
    "WignerComponents",
    "DecoherenceKernel",
    "PurityReport",
    "assemble_wigner",
    "apply_decoherence",
    "distribution",
    "moment",
    "purity_criterium",
    "even_odd_constraint",
    "ladder_operator_matrix",
    "observable_matrix",
    "load_state",
    "save_state",
    "MODE_STANDARD",
    "MODE_NONLOCAL",
    "OBS_POSITION",
    "OBS_MOMENTUM",
]


@dataclass(frozen=True)
class ChargeStateVector:
    """Pure-state coefficients on both charge branches (length-N arrays)."""

    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        plus = np.asarray(self.plus, dtype=complex)
        minus = np.asarray(self.minus, dtype=complex)
        if plus.ndim != 1 or minus.ndim != 1 or plus.size != minus.size:
            raise StateError("branch coefficient arrays must be 1-d and equally long")
        object.__setattr__(self, "plus", plus)
        object.__setattr__(self, "minus", minus)

    @classmethod
    def single_branch(cls, coeffs, branch: str = "+") -> "ChargeStateVector":
        coeffs = np.asarray(coeffs, dtype=complex)
        zero = np.zeros_like(coeffs)
        return cls(plus=coeffs, minus=zero) if branch == "+" else cls(plus=zero, minus=coeffs)

    @property
    def size(self) -> int:
        return self.plus.size

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.plus) ** 2) + np.sum(np.abs(self.minus) ** 2))

    def normalized(self) -> "ChargeStateVector":
        n = np.sqrt(self.norm_squared)
        if n == 0:
            raise StateError("cannot normalize the zero state")
        return ChargeStateVector(self.plus / n, self.minus / n)


@dataclass(frozen=True)
class CoefficientMatrices:
    """Even (per-branch) and odd (cross-branch) coefficient matrices.

    ``even_plus[m, n] = <C_{m;+}^* C_{n;+}>`` and so on; mixed states are
    represented directly by non-rank-1 even matrices.
    """

    even_plus: np.ndarray
    even_minus: np.ndarray
    odd_plus: np.ndarray
    odd_minus: np.ndarray

    def __post_init__(self):
        mats = {}
        n = None
        for name in ("even_plus", "even_minus", "odd_plus", "odd_minus"):
            m = np.asarray(getattr(self, name), dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise StateError(f"{name} must be a square matrix")
            if n is None:
                n = m.shape[0]
            elif m.shape[0] != n:
                raise StateError("coefficient matrices must share one basis size")
            mats[name] = m
        for name, m in mats.items():
            object.__setattr__(self, name, m)

    @classmethod
    def from_state(cls, state: ChargeStateVector) -> "CoefficientMatrices":
        cp, cm = state.plus, state.minus
        return cls(
            even_plus=np.outer(np.conj(cp), cp),
            even_minus=np.outer(np.conj(cm), cm),
            odd_plus=np.outer(np.conj(cp), cm),
            odd_minus=np.outer(np.conj(cm), cp),
        )

    @classmethod
    def from_even(cls, even_plus, even_minus=None) -> "CoefficientMatrices":
        """Mixed state with no cross-branch content."""
        even_plus = np.asarray(even_plus, dtype=complex)
        n = even_plus.shape[0]
        zero = np.zeros((n, n), dtype=complex)
        if even_minus is None:
            even_minus = zero
        return cls(even_plus=even_plus, even_minus=np.asarray(even_minus, dtype=complex),
                   odd_plus=zero, odd_minus=zero)

    @property
    def size(self) -> int:
        return self.even_plus.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.even_plus) + np.trace(self.even_minus)))

    def hermiticity_residual(self) -> float:
        r = max(
            np.max(np.abs(self.even_plus - self.even_plus.conj().T)),
            np.max(np.abs(self.even_minus - self.even_minus.conj().T)),
            np.max(np.abs(self.odd_minus - self.odd_plus.conj().T)),
        )
        return float(r)


@dataclass(frozen=True)
class WignerComponents:
    """The four assembled fields; even parts are stored real."""

    even_plus: np.ndarray
    even_minus: np.ndarray
    odd_plus: np.ndarray
    odd_minus: np.ndarray
    grid: PhaseGrid
    even_imag_residual: float = 0.0

    def total(self) -> np.ndarray:
        """W = W_[+] + W_[-] + W_{+} + W_{-}; real up to the stored residual."""
        return self.even_plus + self.even_minus + np.real(self.odd_plus + self.odd_minus)

    def normalization(self) -> float:
        return float(self.grid.integrate(self.even_plus + self.even_minus).real)

    def field(self, name: str) -> ComplexField:
        return ComplexField(self.grid, getattr(self, name).astype(complex))


@dataclass(frozen=True)
class DecoherenceKernel:
    """Hermitian environment-overlap matrix a(m, n)."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise StateError("kernel must be a square matrix")
        if np.max(np.abs(a - a.conj().T)) > 1e-12:
            raise StateError("kernel must be Hermitian")
        if np.max(np.abs(np.diag(a) - 1.0)) > 1e-12:
            raise StateError("kernel diagonal must be 1 (states overlap with themselves)")
        off = np.abs(a - np.diag(np.diag(a)))
        if np.any(off >= 1.0):
            raise StateError("off-diagonal kernel magnitudes must be < 1")
        object.__setattr__(self, "a", a)

    @classmethod
    def gaussian(cls, n: int, gamma: float) -> "DecoherenceKernel":
        """Model kernel a(m, n) = exp(-gamma (m - n)^2), gamma >= 0."""
        if gamma < 0:
            raise StateError("gamma must be >= 0")
        idx = np.arange(n)
        diff = idx[:, None] - idx[None, :]
        a = np.exp(-gamma * diff.astype(float) ** 2)
        if gamma == 0:
            # the |a| < 1 off-diagonal requirement is approached, not met
            a = a - 0.0
            a[diff != 0] = 1.0 - 1e-15
        return cls(a=a)

    @property
    def size(self) -> int:
        return self.a.shape[0]


def _coerce(state) -> CoefficientMatrices:
    if isinstance(state, ChargeStateVector):
        return CoefficientMatrices.from_state(state)
    if isinstance(state, CoefficientMatrices):
        return state
    raise StateError(f"expected ChargeStateVector or CoefficientMatrices, got {type(state)!r}")


def assemble_wigner(
    state,
    factors: ChargeFactor,
    grid: PhaseGrid,
    include_odd: bool = True,
    mode: str = MODE_STANDARD,
) -> WignerComponents:
    """Synthesize the four component fields of a state on ``grid``.

    ``mode="nonlocal"`` replaces eps by 1 and chi by 0, giving the ordinary
    distribution of the same coefficients.
    """
    if mode not in (MODE_STANDARD, MODE_NONLOCAL):
        raise StateError(f"unknown mode {mode!r}")
    coeffs = _coerce(state)
    n = coeffs.size
    if factors.size < n:
        raise StateError(f"charge factors cover {factors.size} levels, state needs {n}")
    tr = coeffs.trace
    if abs(tr - 1.0) > 1e-12:
        warnings.warn(f"state is not normalized: even-part trace = {tr:.12g}")

    eps = factors.even[:n, :n] if mode == MODE_STANDARD else np.ones((n, n))
    chi = factors.odd[:n, :n] if mode == MODE_STANDARD else np.zeros((n, n))

    w = basis_stack(n, grid)  # w[a, b] = W_ab
    # even branch s: sum_{m,n} eps[m,n] rho[m,n] W_nm
    even_p = np.einsum("mn,nmpq->pq", eps * coeffs.even_plus, w)
    even_m = np.einsum("mn,nmpq->pq", eps * coeffs.even_minus, w)
    resid = max(np.max(np.abs(even_p.imag)), np.max(np.abs(even_m.imag)))
    if resid > 1e-10:
        raise StateError(
            f"even component has imaginary residue {resid:.3e} (non-Hermitian input?)"
        )
    if include_odd:
        # the cross-branch sum contracts a raised charge index; raising the
        # minus index under the indefinite metric carries a sign, which is
        # what makes the two odd fields pointwise conjugate
        odd_p = -np.einsum("mn,nmpq->pq", chi * coeffs.odd_plus, w)
        odd_m = np.einsum("mn,nmpq->pq", chi * coeffs.odd_minus, w)
    else:
        odd_p = np.zeros((grid.n_p, grid.n_q), dtype=complex)
        odd_m = np.zeros((grid.n_p, grid.n_q), dtype=complex)
    return WignerComponents(
        even_plus=even_p.real,
        even_minus=even_m.real,
        odd_plus=odd_p,
        odd_minus=odd_m,
        grid=grid,
        even_imag_residual=float(resid),
    )


def apply_decoherence(coeffs: CoefficientMatrices, kernel: DecoherenceKernel) -> CoefficientMatrices:
    """Environment averaging: even matrices picked up a(m, n) elementwise.

    Diagonals are untouched (a(n, n) = 1); every interference term shrinks
    by |a| < 1, while the combined a*eps weight in the assembled field may
    still exceed 1.
    """
    if kernel.size != coeffs.size:
        raise StateError(f"kernel size {kernel.size} != state size {coeffs.size}")
    return CoefficientMatrices(
        even_plus=coeffs.even_plus * kernel.a,
        even_minus=coeffs.even_minus * kernel.a,
        odd_plus=coeffs.odd_plus,
        odd_minus=coeffs.odd_minus,
    )


def distribution(
    state,
    factors: ChargeFactor,
    axis: str,
    x: np.ndarray,
    branch: str = "+",
) -> np.ndarray:
    """Marginal distribution of position or momentum on the sample points ``x``.

    rho_s(x) = sum_{m,n} eps(m, n) rho^[s]_{mn} phi_m(x)^* phi_n(x), with the
    oscillator eigenfunctions phi_n; in the momentum representation these
    carry the Fourier phases (-i)^n.  Values may be negative; they are
    returned as computed.
    """
    if axis not in (OBS_POSITION, OBS_MOMENTUM):
        raise StateError(f"unknown axis {axis!r}")
    coeffs = _coerce(state)
    n = coeffs.size
    if factors.size < n:
        raise StateError("charge factors are smaller than the state basis")
    x = np.asarray(x, dtype=float)
    phi = np.stack([hermite_function(k, x) for k in range(n)])
    if axis == OBS_MOMENTUM:
        phi = phi.astype(complex) * (-1j) ** np.arange(n)[:, None]
    rho = coeffs.even_plus if branch == "+" else coeffs.even_minus
    weighted = factors.even[:n, :n] * rho
    out = np.einsum("mn,mx,nx->x", weighted, np.conj(phi), phi)
    if np.max(np.abs(out.imag)) > 1e-10 * max(np.max(np.abs(out)), 1e-300):
        raise StateError("distribution came out non-real; input matrices not Hermitian?")
    return out.real


def ladder_operator_matrix(n: int) -> np.ndarray:
    """Annihilation operator on an n-level truncation."""
    return np.diag(np.sqrt(np.arange(1, n)), k=1)


def observable_matrix(observable: str, power: int, n: int) -> np.ndarray:
    """Matrix of q^k or p^k in the level basis, exact for the returned block.

    Built in an enlarged basis (the operator couples n to n +- k) and cut
    back, so truncation never contaminates the n x n block.
    """
    if observable not in (OBS_POSITION, OBS_MOMENTUM):
        raise StateError(f"unknown observable {observable!r}")
    if power < 0:
        raise StateError("power must be >= 0")
    big = n + power
    a = ladder_operator_matrix(big)
    if observable == OBS_POSITION:
        op = (a + a.T) / np.sqrt(2.0)
    else:
        op = (a - a.T) / (1j * np.sqrt(2.0))
    return np.linalg.matrix_power(op, power)[:n, :n]


def moment(state, factors: ChargeFactor, observable: str, power: int) -> float:
    """eps-weighted moment <q^k> or <p^k>, summed over the even branches.

    mean = sum_{l,m} (O^k)_{lm} eps(m, l) rho_{ml}; the eps symmetry keeps
    the Hermitian form and the result real.
    """
    coeffs = _coerce(state)
    n = coeffs.size
    if power > n:
        raise StateError(f"power {power} exceeds the basis size {n}")
    op = observable_matrix(observable, power, n)
    eps = factors.even[:n, :n]
    val = np.einsum("lm,ml->", op, eps.T * (coeffs.even_plus + coeffs.even_minus))
    return float(val.real)


@dataclass(frozen=True)
class PurityReport:
    is_pure: bool
    max_minor: float
    odd_max_minor: float | None = None


def _max_two_by_two_minor(b: np.ndarray, mask: np.ndarray | None = None) -> float:
    """max |b_mn b_m'n' - b_mn' b_m'n| over all index quadruples, chunked."""
    n = b.shape[0]
    if mask is None:
        mask = np.ones_like(b, dtype=bool)
    bm = np.where(mask, b, 0.0)
    worst = 0.0
    for m in range(n):
        # minors with first row m: b[m,n]*b[mp,np'] - b[m,np']*b[mp,n]
        t = bm[m][:, None, None] * bm[None, :, :] - bm[m][None, None, :] * bm[:, :, None].transpose(1, 0, 2)
        valid = mask[m][:, None, None] & mask[None, :, :] & mask[m][None, None, :] & mask[:, :, None].transpose(1, 0, 2)
        if np.any(valid):
            worst = max(worst, float(np.max(np.abs(np.where(valid, t, 0.0)))))
    return worst


def purity_criterium(
    coeffs: CoefficientMatrices,
    factors: ChargeFactor,
    tol: float = 1e-8,
    branch: str = "+",
    weighted: bool = False,
) -> PurityReport:
    """Factorization test for pure states.

    A distribution belongs to a pure state exactly when stripping the
    charge-structure weight from its level coefficients leaves a rank-1
    matrix ``C_m^* C_n``, i.e. when every 2x2 minor of ``B = (eps o rho)/eps``
    vanishes.  :class:`CoefficientMatrices` already stores the bare matrices,
    so B is the stored matrix itself; pass ``weighted=True`` for matrices
    reconstructed from a field projection, which still carry the eps (and
    chi) weights and get divided here.  The odd matrix is checked the same
    way off the diagonal only: chi(n, n) = 0 makes the diagonal weight
    singular, and it carries no odd-part information.
    """
    n = coeffs.size
    if factors.size < n:
        raise StateError("charge factors are smaller than the state basis")
    eps = factors.even[:n, :n]
    chi = factors.odd[:n, :n]
    rho = coeffs.even_plus if branch == "+" else coeffs.even_minus
    b = rho / eps if weighted else rho
    max_minor = _max_two_by_two_minor(b)

    odd = coeffs.odd_plus if branch == "+" else coeffs.odd_minus
    odd_minor = None
    if np.any(odd != 0):
        off = ~np.eye(n, dtype=bool)
        mask = off & (chi != 0)
        b_odd = np.where(mask, odd / np.where(mask, chi, 1.0), 0.0) if weighted else odd
        odd_minor = _max_two_by_two_minor(b_odd, mask=mask)
    return PurityReport(is_pure=bool(max_minor < tol), max_minor=max_minor, odd_max_minor=odd_minor)


def even_odd_constraint(coeffs: CoefficientMatrices) -> float:
    """Cross-branch consistency of the four matrices.

    Pure two-branch states satisfy
    ``rho^[+]_{mn} rho^[-]_{m'n'} = sigma^{+}_{mn'} sigma^{-}_{m'n}``
    identically; the returned value is the largest violation over all index
    quadruples.  States with an empty branch satisfy it vacuously (0).
    """
    if not (np.any(coeffs.even_plus != 0) and np.any(coeffs.even_minus != 0)):
        return 0.0
    lhs = np.einsum("mn,kl->mnkl", coeffs.even_plus, coeffs.even_minus)
    rhs = np.einsum("ml,kn->mnkl", coeffs.odd_plus, coeffs.odd_minus)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# state files
# ---------------------------------------------------------------------------


def save_state(path, state: ChargeStateVector, lam: float, kernel_gamma: float | None = None):
    """Write the JSON state file {lambda, N, C_plus, C_minus, kernel_gamma}."""
    payload = {
        "lambda": lam,
        "N": state.size,
        "C_plus": [[float(c.real), float(c.imag)] for c in state.plus],
        "C_minus": [[float(c.real), float(c.imag)] for c in state.minus],
    }
    if kernel_gamma is not None:
        payload["kernel_gamma"] = float(kernel_gamma)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_state(path):
    """Read a state file; returns (state, lambda, kernel_gamma or None)."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise StateError(f"cannot read state file {path}: {exc}") from exc
    try:
        lam = float(data["lambda"])
        n = int(data["N"])
        cp = np.array([complex(re, im) for re, im in data["C_plus"]])
        cm = np.array([complex(re, im) for re, im in data["C_minus"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise StateError(f"malformed state file {path}: {exc}") from exc
    if cp.size != n or cm.size != n:
        raise StateError(f"state file {path}: coefficient arrays do not match N={n}")
    gamma = data.get("kernel_gamma")
    return ChargeStateVector(plus=cp, minus=cm), lam, (None if gamma is None else float(gamma))
