import numpy as np
import pytest

from chargewigner.errors import GridError, ProjectionTailError, StabilityError
from chargewigner.evolution import (
    METHOD_GRID_RK4,
    EvolutionPlan,
    evolve_grid,
    evolve_spectral,
    heisenberg_symbol,
    means_timeseries,
)
from chargewigner.grids import ComplexField, PhaseGrid
from chargewigner.spectra import charge_factors, interference_frequency, rotator_spectrum
from chargewigner.star import SymbolField, moyal_bracket, windowed_hamiltonian_symbol
from chargewigner.states import ChargeStateVector, CoefficientMatrices, assemble_wigner

LAM_STRONG = 10.0
LAM_WEAK = 0.3


@pytest.fixture(scope="module")
def star_grid():
    return PhaseGrid.star_compatible(256)


@pytest.fixture(scope="module")
def weak_field():
    grid = PhaseGrid.star_compatible(256)
    return windowed_hamiltonian_symbol(LAM_WEAK, grid, n_levels=160)


def superposition_02(n=4):
    c = np.zeros(n, dtype=complex)
    c[0] = c[2] = 2.0**-0.5
    return ChargeStateVector.single_branch(c)


def two_branch(n=4, seed=2):
    rng = np.random.default_rng(seed)
    return ChargeStateVector(
        rng.normal(size=n) + 1j * rng.normal(size=n),
        rng.normal(size=n) + 1j * rng.normal(size=n),
    ).normalized()


# ---------------------------------------------------------------------------
# spectral evolution
# ---------------------------------------------------------------------------


def test_spectral_identity_at_zero_time():
    spec = rotator_spectrum(LAM_STRONG, 4)
    coeffs = CoefficientMatrices.from_state(two_branch())
    out = evolve_spectral(coeffs, spec, 0.0)
    for name in ("even_plus", "even_minus", "odd_plus", "odd_minus"):
        assert np.array_equal(getattr(out, name), getattr(coeffs, name))


def test_spectral_eigenprojector_invariant():
    spec = rotator_spectrum(LAM_STRONG, 4)
    rho = np.zeros((4, 4), dtype=complex)
    rho[2, 2] = 1.0
    coeffs = CoefficientMatrices.from_even(rho)
    out = evolve_spectral(coeffs, spec, 3.7)
    assert np.max(np.abs(out.even_plus - rho)) == 0.0


def test_spectral_unitarity_and_diagonal_invariance():
    spec = rotator_spectrum(LAM_STRONG, 4)
    coeffs = CoefficientMatrices.from_state(two_branch())
    for t in (0.1, 1.7, 12.0):
        out = evolve_spectral(coeffs, spec, t)
        for name in ("even_plus", "even_minus", "odd_plus", "odd_minus"):
            assert np.max(
                np.abs(np.abs(getattr(out, name)) - np.abs(getattr(coeffs, name)))
            ) < 1e-14
        assert np.allclose(np.diag(out.even_plus), np.diag(coeffs.even_plus))


def test_spectral_interference_period():
    spec = rotator_spectrum(LAM_STRONG, 4)
    w20 = interference_frequency(spec, 2, 0)
    period = 2.0 * np.pi / w20
    # 2 pi / 12.333154, from the frequency value itself
    assert period == pytest.approx(0.5094549, abs=1e-6)
    coeffs = CoefficientMatrices.from_state(superposition_02())
    out = evolve_spectral(coeffs, spec, period)
    assert np.max(np.abs(out.even_plus - coeffs.even_plus)) < 1e-12


def test_spectral_conjugacy_preserved():
    spec = rotator_spectrum(LAM_STRONG, 4)
    coeffs = CoefficientMatrices.from_state(two_branch())
    out = evolve_spectral(coeffs, spec, 0.83)
    assert np.max(np.abs(out.odd_minus - out.odd_plus.conj().T)) < 1e-14


def test_spectral_phases_satisfy_liouville(star_grid, weak_field):
    # finite-difference d/dt of the reconstructed even field against the
    # Moyal bracket +{E, W}
    spec = rotator_spectrum(LAM_WEAK, 8)
    factors = charge_factors(spec)
    coeffs = CoefficientMatrices.from_state(superposition_02())
    base = assemble_wigner(coeffs, factors, star_grid)
    dt = 1e-5
    fwd = assemble_wigner(evolve_spectral(coeffs, spec, dt), factors, star_grid)
    bwd = assemble_wigner(evolve_spectral(coeffs, spec, -dt), factors, star_grid)
    dwdt = (fwd.even_plus - bwd.even_plus) / (2.0 * dt)
    w_sym = SymbolField(ComplexField(star_grid, base.even_plus.astype(complex)))
    bracket = moyal_bracket(weak_field, w_sym)
    scale = np.max(np.abs(dwdt))
    assert np.max(np.abs(dwdt - bracket.values.real)) < 1e-3 * scale


# ---------------------------------------------------------------------------
# grid evolution
# ---------------------------------------------------------------------------


def test_grid_stationary_state(star_grid, weak_field):
    spec = rotator_spectrum(LAM_WEAK, 4)
    factors = charge_factors(spec)
    c = np.zeros(4, dtype=complex)
    c[0] = 1.0
    comp = assemble_wigner(ChargeStateVector.single_branch(c), factors, star_grid)
    plan = EvolutionPlan(method=METHOD_GRID_RK4, dt=2e-3, t_final=1.0)
    res = evolve_grid(comp, weak_field, plan)
    drift = np.linalg.norm(res.components.even_plus - comp.even_plus) / np.linalg.norm(
        comp.even_plus
    )
    assert drift < 1e-6
    assert res.norm_drift < 1e-6


def test_grid_matches_spectral(star_grid, weak_field):
    spec = rotator_spectrum(LAM_WEAK, 8)
    factors = charge_factors(spec)
    coeffs = CoefficientMatrices.from_state(superposition_02())
    comp0 = assemble_wigner(coeffs, factors, star_grid)
    plan = EvolutionPlan(method=METHOD_GRID_RK4, dt=1e-3, t_final=0.2)
    res = evolve_grid(comp0, weak_field, plan)
    ref = assemble_wigner(evolve_spectral(coeffs, spec, 0.2), factors, star_grid)
    err = np.linalg.norm(res.components.even_plus - ref.even_plus) / np.linalg.norm(ref.even_plus)
    assert err < 1e-4
    assert res.norm_drift < 1e-6
    assert res.even_imag_residual < 1e-8


def test_grid_two_branch_components(star_grid, weak_field):
    # all four components step with their own bracket; conjugacy survives
    spec = rotator_spectrum(LAM_WEAK, 4)
    factors = charge_factors(spec)
    coeffs = CoefficientMatrices.from_state(two_branch())
    comp0 = assemble_wigner(coeffs, factors, star_grid)
    plan = EvolutionPlan(method=METHOD_GRID_RK4, dt=1e-3, t_final=0.05)
    res = evolve_grid(comp0, weak_field, plan)
    ref = assemble_wigner(evolve_spectral(coeffs, spec, 0.05), factors, star_grid)
    for name in ("even_plus", "even_minus", "odd_plus", "odd_minus"):
        got = getattr(res.components, name)
        want = getattr(ref, name)
        assert np.linalg.norm(got - want) / max(np.linalg.norm(want), 1e-12) < 1e-4
    assert np.max(np.abs(res.components.odd_plus - np.conj(res.components.odd_minus))) < 1e-8


def test_grid_guards(star_grid, weak_field):
    spec = rotator_spectrum(LAM_WEAK, 4)
    factors = charge_factors(spec)
    comp = assemble_wigner(superposition_02(), factors, star_grid)
    with pytest.raises(StabilityError, match="dt"):
        evolve_grid(comp, weak_field, EvolutionPlan(method=METHOD_GRID_RK4, dt=0.5, t_final=1.0))
    other = assemble_wigner(superposition_02(), factors, PhaseGrid.star_compatible(128))
    with pytest.raises(GridError):
        evolve_grid(other, weak_field, EvolutionPlan(method=METHOD_GRID_RK4, dt=1e-3, t_final=0.1))


def test_plan_validation():
    with pytest.raises(ValueError):
        EvolutionPlan(method="leapfrog")
    with pytest.raises(ValueError):
        EvolutionPlan(dt=-1e-3)
    with pytest.raises(ValueError):
        EvolutionPlan(t_final=-1.0)
    assert EvolutionPlan(dt=1e-3, t_final=0.2).n_steps == 200


# ---------------------------------------------------------------------------
# heisenberg symbols
# ---------------------------------------------------------------------------


def test_heisenberg_round_trip(star_grid):
    spec = rotator_spectrum(LAM_WEAK, 64)
    pp, qq = star_grid.meshes()
    a = SymbolField(ComplexField(star_grid, (qq * np.exp(-(pp**2 + qq**2) / 3.0)).astype(complex)))
    out = heisenberg_symbol(a, spec, "even", "+", 0.0, n_basis=30)
    assert np.max(np.abs(out.values - a.values)) / np.max(np.abs(a.values)) < 1e-8


def test_heisenberg_hamiltonian_invariant(star_grid, weak_field):
    spec = rotator_spectrum(LAM_WEAK, 64)
    out = heisenberg_symbol(weak_field, spec, "even", "+", 0.9, n_basis=44, tail_tol=1e-5)
    assert np.max(np.abs(out.values - weak_field.values)) / np.max(np.abs(weak_field.values)) < 1e-4


def test_heisenberg_matches_bracket(star_grid, weak_field):
    spec = rotator_spectrum(LAM_WEAK, 64)
    pp, qq = star_grid.meshes()
    a = SymbolField(ComplexField(star_grid, (qq * np.exp(-(pp**2 + qq**2) / 3.0)).astype(complex)))
    dt = 1e-4
    fwd = heisenberg_symbol(a, spec, "even", "+", dt, n_basis=30)
    bwd = heisenberg_symbol(a, spec, "even", "+", -dt, n_basis=30)
    dadt = (fwd.values - bwd.values) / (2.0 * dt)
    bracket = moyal_bracket(a, weak_field)
    scale = np.max(np.abs(dadt))
    assert np.max(np.abs(dadt - bracket.values)) < 1e-4 * scale


def test_heisenberg_odd_parity_phases(star_grid):
    spec = rotator_spectrum(LAM_WEAK, 64)
    pp, qq = star_grid.meshes()
    a = SymbolField(ComplexField(star_grid, np.exp(-(pp**2 + qq**2) / 2.0).astype(complex)))
    t = 0.31
    out = heisenberg_symbol(a, spec, "odd", "+", t, n_basis=24)
    # a pure Gaussian projects onto the diagonal kernels; odd parity then
    # multiplies entry (n, n) by exp(2 i E(n) t)
    back = heisenberg_symbol(out, spec, "odd", "-", t, n_basis=24)
    assert np.max(np.abs(back.values - a.values)) / np.max(np.abs(a.values)) < 1e-8


def test_heisenberg_tail_guard(star_grid):
    spec = rotator_spectrum(LAM_WEAK, 64)
    pp, qq = star_grid.meshes()
    a = SymbolField(ComplexField(star_grid, (qq * np.exp(-(pp**2 + qq**2) / 3.0)).astype(complex)))
    with pytest.raises(ProjectionTailError):
        heisenberg_symbol(a, spec, "even", "+", 0.0, n_basis=4)


# ---------------------------------------------------------------------------
# mean trajectories
# ---------------------------------------------------------------------------


def test_means_eigenstate_constant():
    spec = rotator_spectrum(LAM_STRONG, 4)
    factors = charge_factors(spec)
    c = np.zeros(4, dtype=complex)
    c[2] = 1.0
    state = ChargeStateVector.single_branch(c)
    times = np.linspace(0.0, 2.0, 17)
    series = means_timeseries(state, factors, spec, "position", times, power=2)
    assert np.max(np.abs(series - series[0])) < 1e-12


def test_means_amplitude_ratio_and_frequency():
    spec = rotator_spectrum(LAM_STRONG, 4)
    factors = charge_factors(spec)
    state = superposition_02()
    w20 = interference_frequency(spec, 2, 0)
    times = np.linspace(0.0, 16.0 * 2.0 * np.pi / w20, 1024, endpoint=False)
    std = means_timeseries(state, factors, spec, "position", times, power=2)
    nl = means_timeseries(state, factors.as_unit(), spec, "position", times, power=2)
    amp_std = 0.5 * (std.max() - std.min())
    amp_nl = 0.5 * (nl.max() - nl.min())
    assert amp_std / amp_nl == pytest.approx(factors.even[0, 2], abs=1e-6)
    # extracted frequency within one FFT bin
    spec_fft = np.abs(np.fft.rfft(std - std.mean()))
    freqs = 2.0 * np.pi * np.fft.rfftfreq(times.size, times[1] - times[0])
    peak = freqs[np.argmax(spec_fft)]
    assert abs(peak - w20) <= freqs[1] - freqs[0]
