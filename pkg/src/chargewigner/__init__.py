"""Phase-space toolkit for charge-invariant observables of a relativistic scalar particle."""

from .basis import (
    BasisMatrixElement,
    diagonal_wigner,
    free_wigner_pair,
    hermite_function,
    laguerre,
    wigner_basis_element,
)
from .evolution import (
    EvolutionPlan,
    evolve_grid,
    evolve_spectral,
    heisenberg_symbol,
    means_timeseries,
)
from .grids import ComplexField, PhaseGrid
from .spectra import (
    ChargeFactor,
    EnergySpectrum,
    PhysicalScales,
    charge_factors,
    compton_time,
    epsilon_continuous,
    free_dispersion,
    interference_frequency,
    rotator_spectrum,
)
from .star import (
    StarBackend,
    SymbolField,
    anti_moyal_bracket,
    expansion_hamiltonian,
    moyal_bracket,
    rotator_hamiltonian_symbol,
    star,
    star_exp,
    windowed_hamiltonian_symbol,
)
from .states import (
    ChargeStateVector,
    CoefficientMatrices,
    DecoherenceKernel,
    WignerComponents,
    apply_decoherence,
    assemble_wigner,
    distribution,
    even_odd_constraint,
    load_state,
    moment,
    purity_criterium,
    save_state,
)

__version__ = "0.1.0"
