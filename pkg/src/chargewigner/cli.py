"""Command-line surface: figure reproduction, evolution runs, validation.

Subcommands: fig1, fig2, fig3, hamiltonian, evolve, validate.  Options
resolve as CLI flag > config file (flat ``key=value`` lines) > built-in
default.  Outputs are deterministic: identical configuration and inputs
produce identical bytes (manifests carry the resolved configuration, never
wall-clock state).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fieldio
from .basis import KERNEL_EPSILON, KERNEL_UNIT, free_wigner_pair
from .errors import ChargeWignerError
from .evolution import (
    METHOD_GRID_RK4,
    METHOD_SPECTRAL,
    EvolutionPlan,
    evolve_grid,
    evolve_spectral,
    means_timeseries,
)
from .grids import UNITS_FREE, UNITS_ROTATOR, PhaseGrid
from .spectra import charge_factors, epsilon_continuous, rotator_spectrum
from .star import (
    ACCEL_CESARO,
    ACCEL_EULER,
    rotator_hamiltonian_symbol,
    windowed_hamiltonian_symbol,
)
from .states import (
    MODE_NONLOCAL,
    MODE_STANDARD,
    ChargeStateVector,
    CoefficientMatrices,
    DecoherenceKernel,
    apply_decoherence,
    assemble_wigner,
    even_odd_constraint,
    load_state,
    moment,
    purity_criterium,
)

DEFAULTS = {
    "lambda": 10.0,
    "basis_size": 20,
    # wide enough that the n=2 kernel keeps 1e-6 normalization on the box
    "grid": "-5,5,-5,5,256,256",
    "out": "out",
    "format": "csv,json,svg",
    "mode": MODE_STANDARD,
    "system": "both",
    "accel": ACCEL_EULER,
    "dt": 1e-3,
    "t_final": 1.0,
    "method": METHOD_SPECTRAL,
    "observable": "position",
    "power": 1,
    "samples": 128,
    "p0": 0.0,
    "packet_width": 8.0,
    "tol": 1e-8,
    "frames_every": None,
}


class CliError(ChargeWignerError):
    pass


def parse_grid(text: str, units: str = UNITS_ROTATOR) -> PhaseGrid:
    parts = text.split(",")
    if len(parts) != 6:
        raise CliError(f"--grid needs 'pmin,pmax,qmin,qmax,np,nq', got {text!r}")
    try:
        pmin, pmax, qmin, qmax = (float(v) for v in parts[:4])
        n_p, n_q = (int(v) for v in parts[4:])
    except ValueError as exc:
        raise CliError(f"bad --grid value {text!r}: {exc}") from exc
    return PhaseGrid(pmin, pmax, qmin, qmax, n_p, n_q, units=units)


def read_config(path) -> dict:
    """Flat key=value file; '#' starts a comment."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class Settings:
    """Resolved option values with the flag > config > default precedence."""

    def __init__(self, args: argparse.Namespace):
        self._cli = vars(args)
        self._cfg = read_config(args.config) if args.config else {}

    def get(self, key: str):
        cli_val = self._cli.get(key)
        if cli_val is not None:
            return cli_val
        if key in self._cfg:
            raw = self._cfg[key]
            default = DEFAULTS.get(key)
            if isinstance(default, float):
                return float(raw)
            if isinstance(default, int):
                return int(raw)
            return raw
        if key in self._cli or key in DEFAULTS:
            return DEFAULTS.get(key)
        raise KeyError(key)

    def formats(self) -> set[str]:
        fmts = {f.strip().lower() for f in str(self.get("format")).split(",") if f.strip()}
        if not fmts:
            raise CliError("--format list must be non-empty")
        unknown = fmts - {"csv", "json", "svg"}
        if unknown:
            raise CliError(f"unknown output formats: {sorted(unknown)}")
        return fmts

    def out_dir(self) -> Path:
        out = Path(self.get("out"))
        out.mkdir(parents=True, exist_ok=True)
        if not out.is_dir():
            raise CliError(f"output path {out} is not a directory")
        return out


def _write_field(out, stem, grid, values, meta, fmts, svg_title=""):
    written = []
    if "csv" in fmts:
        path = out / f"{stem}.csv"
        fieldio.write_field_csv(path, grid, values, meta)
        written.append(str(path))
    if "svg" in fmts:
        path = out / f"{stem}.svg"
        fieldio.write_svg_heatmap(
            path, values, (grid.p_min, grid.p_max, grid.q_min, grid.q_max), title=svg_title or stem
        )
        written.append(str(path))
    return written


def _manifest(out, name, payload, fmts):
    if "json" in fmts:
        path = out / f"{name}_manifest.json"
        fieldio.write_json(path, payload)
        return [str(path)]
    return []


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_fig1(settings: Settings) -> int:
    out = settings.out_dir()
    fmts = settings.formats()
    lam = float(settings.get("lambda"))
    n = int(settings.get("basis_size"))
    system = settings.get("system")
    written = []

    if system in ("free", "both"):
        axis = np.linspace(-5.0, 5.0, 201)
        p1, p2 = np.meshgrid(axis, axis, indexing="ij")
        eps = epsilon_continuous(p1, p2)
        if "csv" in fmts:
            path = out / "fig1_free.csv"
            fieldio.write_pairs_csv(
                path,
                ["p1", "p2", "epsilon"],
                [p1, p2, eps],
                meta={"units": "mc", "range": "[-5,5]^2", "samples": 201},
            )
            written.append(str(path))
        if "svg" in fmts:
            path = out / "fig1_free.svg"
            fieldio.write_svg_heatmap(path, eps, (-5, 5, -5, 5), title="free-particle eps factor")
            written.append(str(path))

    if system in ("rotator", "both"):
        factors = charge_factors(rotator_spectrum(lam, n))
        if "csv" in fmts:
            path = out / "fig1_rotator.csv"
            fieldio.write_matrix_csv(
                path, factors.even, meta={"lambda": lam, "basis_size": n}, value_name="epsilon"
            )
            written.append(str(path))
        if "svg" in fmts:
            path = out / "fig1_rotator.svg"
            fieldio.write_svg_heatmap(
                path, factors.even, (0, n - 1, 0, n - 1), title="rotator eps factor"
            )
            written.append(str(path))

    written += _manifest(
        out,
        "fig1",
        {
            "command": "fig1",
            "lambda": lam,
            "basis_size": n,
            "system": system,
            "files": [Path(f).name for f in written],
        },
        fmts,
    )
    for f in written:
        print(f)
    return 0


def _fig2_states(n: int):
    sup = np.zeros(n, dtype=complex)
    sup[0] = sup[2] = 1.0 / np.sqrt(2.0)
    mixed = np.zeros((n, n), dtype=complex)
    mixed[0, 0] = mixed[2, 2] = 0.5
    return ChargeStateVector.single_branch(sup), CoefficientMatrices.from_even(mixed)


def cmd_fig2(settings: Settings) -> int:
    out = settings.out_dir()
    fmts = settings.formats()
    lam = float(settings.get("lambda"))
    n = max(3, int(settings.get("basis_size")))
    grid = parse_grid(str(settings.get("grid")), units=UNITS_ROTATOR)
    factors = charge_factors(rotator_spectrum(lam, n))
    superposition, mixed = _fig2_states(n)

    panels = {
        "fig2_mixed": assemble_wigner(mixed, factors, grid),
        "fig2_nonlocal": assemble_wigner(superposition, factors, grid, mode=MODE_NONLOCAL),
        "fig2_standard": assemble_wigner(superposition, factors, grid, mode=MODE_STANDARD),
    }
    norms = {}
    written = []
    for stem, comp in panels.items():
        norms[stem] = comp.normalization()
        if abs(norms[stem] - 1.0) > 1e-6:
            raise CliError(f"{stem} normalization {norms[stem]:.9f} deviates beyond 1e-6")
        written += _write_field(
            out, stem, grid, comp.total(), {"lambda": lam, "basis_size": n, "panel": stem}, fmts
        )
    diff = panels["fig2_standard"].total() - panels["fig2_nonlocal"].total()
    written += _write_field(
        out,
        "fig2_difference",
        grid,
        diff,
        {"lambda": lam, "basis_size": n, "panel": "standard minus nonlocal"},
        fmts,
    )
    written += _manifest(
        out,
        "fig2",
        {
            "command": "fig2",
            "lambda": lam,
            "basis_size": n,
            "grid": fieldio.grid_metadata(grid),
            "normalization": norms,
            "eps_02": float(factors.even[0, 2]),
            "files": [Path(f).name for f in written],
        },
        fmts,
    )
    for f in written:
        print(f)
    return 0


def cmd_fig3(settings: Settings) -> int:
    out = settings.out_dir()
    fmts = settings.formats()
    dp = float(settings.get("packet_width"))
    p0 = float(settings.get("p0"))
    grid_text = str(settings.get("grid"))
    if grid_text == DEFAULTS["grid"]:
        grid_text = "-40,40,-1,1,512,512"
    grid = parse_grid(grid_text, units=UNITS_FREE)

    psi = (np.pi * dp**2) ** -0.25 * np.exp(-((grid.p - p0) ** 2) / (2.0 * dp**2))
    psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dp)
    w_eps = free_wigner_pair(psi, grid, kernel=KERNEL_EPSILON)
    w_unit = free_wigner_pair(psi, grid, kernel=KERNEL_UNIT)

    q_marginal = np.sum(np.abs(w_eps.values.real), axis=0) * grid.dp
    q_mean = float(np.sum(grid.q * q_marginal) / np.sum(q_marginal))
    width = float(np.sqrt(np.sum((grid.q - q_mean) ** 2 * q_marginal) / np.sum(q_marginal)))

    meta = {"packet_width_mc": dp, "p0": p0, "q_units": "compton", "p_units": "mc"}
    written = _write_field(out, "fig3_epsilon", grid, w_eps.values, meta, fmts)
    written += _write_field(out, "fig3_unit", grid, w_unit.values, meta, fmts)
    report = {
        "command": "fig3",
        "packet_width_mc": dp,
        "p0": p0,
        "grid": fieldio.grid_metadata(grid),
        "normalization_epsilon": float(w_eps.integrate().real),
        "normalization_unit": float(w_unit.integrate().real),
        "min_value": float(w_eps.values.real.min()),
        "max_imag_residual": float(w_eps.max_abs_imag()),
        "localization_width_compton": width,
        "files": [Path(f).name for f in written],
    }
    written += _manifest(out, "fig3", report, fmts)
    for f in written:
        print(f)
    return 0


def cmd_hamiltonian(settings: Settings) -> int:
    out = settings.out_dir()
    fmts = settings.formats()
    lam = float(settings.get("lambda"))
    n = int(settings.get("basis_size"))
    accel = settings.get("accel")
    tol = float(settings.get("tol"))
    grid = parse_grid(str(settings.get("grid")), units=UNITS_ROTATOR)
    sym = rotator_hamiltonian_symbol(lam, grid, n_levels=max(n, 8), accel=accel, tol=tol)
    written = _write_field(
        out,
        "hamiltonian",
        grid,
        sym.values,
        {"lambda": lam, "n_levels": max(n, 8), "accel": accel, "units": "rest-energy"},
        fmts,
        svg_title="rotator hamiltonian symbol",
    )
    written += _manifest(
        out,
        "hamiltonian",
        {
            "command": "hamiltonian",
            "lambda": lam,
            "n_levels": max(n, 8),
            "accel": accel,
            "tol": tol,
            "grid": fieldio.grid_metadata(grid),
            "files": [Path(f).name for f in written],
        },
        fmts,
    )
    for f in written:
        print(f)
    return 0


def cmd_evolve(settings: Settings) -> int:
    out = settings.out_dir()
    fmts = settings.formats()
    state_file = settings.get("state")
    if not state_file:
        raise CliError("evolve needs --state FILE")
    state, lam, gamma = load_state(state_file)
    n = state.size
    spec = rotator_spectrum(lam, max(n, 8))
    factors = charge_factors(spec)
    if settings.get("mode") == MODE_NONLOCAL:
        factors = factors.as_unit()
    coeffs = CoefficientMatrices.from_state(state)
    if gamma is not None:
        coeffs = apply_decoherence(coeffs, DecoherenceKernel.gaussian(n, gamma))

    method = settings.get("method")
    observable = settings.get("observable")
    power = int(settings.get("power"))
    dt = float(settings.get("dt"))
    t_final = float(settings.get("t_final"))
    samples = int(settings.get("samples"))
    frames_every = settings.get("frames_every")
    times = np.linspace(0.0, t_final, samples)
    written = []

    def dump_frame(index, grid, values):
        path = out / f"evolve_frame_{index:06d}.csv"
        fieldio.write_field_csv(
            path, grid, values, {"t": times[index], "observable": observable, "lambda": lam}
        )
        written.append(str(path))

    if method == METHOD_SPECTRAL:
        means = means_timeseries(coeffs, factors, spec, observable, times, power=power)
        if frames_every:
            frame_grid = PhaseGrid(-6, 6, -6, 6, 128, 128)
            for k in range(0, samples, int(frames_every)):
                comp_k = assemble_wigner(evolve_spectral(coeffs, spec, times[k]), factors, frame_grid)
                dump_frame(k, frame_grid, comp_k.total())
    elif method == METHOD_GRID_RK4:
        grid = PhaseGrid.star_compatible(256)
        hamiltonian = windowed_hamiltonian_symbol(lam, grid)
        comp = assemble_wigner(coeffs, factors, grid)
        pp, qq = grid.meshes()
        obs_field = (qq if observable == "position" else pp) ** power
        means = [float(grid.integrate(obs_field * comp.total()))]
        if frames_every:
            dump_frame(0, grid, comp.total())
        for k in range(1, samples):
            leg = EvolutionPlan(method=METHOD_GRID_RK4, dt=dt, t_final=times[k] - times[k - 1])
            comp = evolve_grid(comp, hamiltonian, leg).components
            means.append(float(grid.integrate(obs_field * comp.total())))
            if frames_every and k % int(frames_every) == 0:
                dump_frame(k, grid, comp.total())
        means = np.asarray(means)
    else:
        raise CliError(f"unknown method {method!r}")
    if "csv" in fmts:
        path = out / "evolve_trajectory.csv"
        fieldio.write_trajectory_csv(
            path,
            times,
            means,
            branch="+",
            meta={"observable": observable, "power": power, "method": method, "lambda": lam},
        )
        written.append(str(path))
    written += _manifest(
        out,
        "evolve",
        {
            "command": "evolve",
            "state_file": Path(state_file).name,
            "lambda": lam,
            "basis_size": n,
            "kernel_gamma": gamma,
            "method": method,
            "mode": settings.get("mode"),
            "dt": dt,
            "t_final": t_final,
            "samples": samples,
            "observable": observable,
            "power": power,
            "files": [Path(f).name for f in written],
        },
        fmts,
    )
    for f in written:
        print(f)
    return 0


def cmd_validate(settings: Settings) -> int:
    out = settings.out_dir()
    fmts = settings.formats()
    state_file = settings.get("state")
    if not state_file:
        raise CliError("validate needs --state FILE")
    state, lam, gamma = load_state(state_file)
    n = state.size
    spec = rotator_spectrum(lam, max(n, 8))
    factors = charge_factors(spec)
    coeffs = CoefficientMatrices.from_state(state)
    if gamma is not None:
        coeffs = apply_decoherence(coeffs, DecoherenceKernel.gaussian(n, gamma))

    grid = PhaseGrid(-5, 5, -5, 5, 128, 128)
    comp = assemble_wigner(coeffs, factors, grid)
    purity = purity_criterium(coeffs, factors)
    # a pure state must factorize AND carry unit weight; a scaled
    # coefficient keeps the factorization but breaks the norm
    is_pure = purity.is_pure and abs(state.norm_squared - 1.0) < 1e-8
    report = {
        "state_file": str(state_file),
        "lambda": lam,
        "basis_size": n,
        "kernel_gamma": gamma,
        "norm": state.norm_squared,
        "purity_is_pure": is_pure,
        "purity_max_minor": purity.max_minor,
        "even_odd_violation": even_odd_constraint(coeffs),
        "hermiticity_residual": coeffs.hermiticity_residual(),
        "even_imag_residual": comp.even_imag_residual,
        "odd_conjugacy_residual": float(
            np.max(np.abs(comp.odd_plus - np.conj(comp.odd_minus)))
        ),
        "normalization_residual": abs(comp.normalization() - 1.0),
        "mean_position": moment(coeffs, factors, "position", 1),
    }
    print(json.dumps(report, sort_keys=True, indent=1))
    written = []
    if "json" in fmts:
        path = out / "validate_report.json"
        fieldio.write_json(path, report)
        written.append(str(path))
    for f in written:
        print(f)
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--out", help=f"output directory (default {DEFAULTS['out']!r})")
    sub.add_argument("--format", help="comma list of csv,json,svg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chargewigner",
        description="Phase-space observables of a relativistic scalar particle",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p1 = subs.add_parser("fig1", help="eps-factor surface (free) and matrix (rotator)")
    p1.add_argument("--system", choices=["free", "rotator", "both"])
    p1.add_argument("--lambda", dest="lambda", type=float)
    p1.add_argument("--basis-size", dest="basis_size", type=int)

    p2 = subs.add_parser("fig2", help="rotator distribution panels: mixed/nonlocal/standard")
    p2.add_argument("--lambda", dest="lambda", type=float)
    p2.add_argument("--basis-size", dest="basis_size", type=int)
    p2.add_argument("--grid", help="pmin,pmax,qmin,qmax,np,nq")

    p3 = subs.add_parser("fig3", help="free-particle localized packet distribution")
    p3.add_argument("--packet-width", dest="packet_width", type=float, help="momentum width in mc")
    p3.add_argument("--p0", dest="p0", type=float)
    p3.add_argument("--grid", help="pmin,pmax,qmin,qmax,np,nq")

    ph = subs.add_parser("hamiltonian", help="rotator hamiltonian symbol on a grid")
    ph.add_argument("--lambda", dest="lambda", type=float)
    ph.add_argument("--basis-size", dest="basis_size", type=int)
    ph.add_argument("--accel", choices=[ACCEL_EULER, ACCEL_CESARO])
    ph.add_argument("--tol", type=float)
    ph.add_argument("--grid")

    pe = subs.add_parser("evolve", help="trajectory of a mean under time evolution")
    pe.add_argument("--state", required=True)
    pe.add_argument("--method", choices=[METHOD_SPECTRAL, METHOD_GRID_RK4])
    pe.add_argument("--mode", choices=[MODE_STANDARD, MODE_NONLOCAL],
                    help="eps weighting (standard) or the eps->1 baseline")
    pe.add_argument("--dt", type=float)
    pe.add_argument("--t-final", dest="t_final", type=float)
    pe.add_argument("--observable", choices=["position", "momentum"])
    pe.add_argument("--power", type=int)
    pe.add_argument("--samples", type=int)
    pe.add_argument("--frames-every", dest="frames_every", type=int,
                    help="dump a field frame every k-th sample")

    pv = subs.add_parser("validate", help="constraint report for a state file")
    pv.add_argument("--state", required=True)

    for sub in (p1, p2, p3, ph, pe, pv):
        _add_common(sub)
    return parser


HANDLERS = {
    "fig1": cmd_fig1,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "hamiltonian": cmd_hamiltonian,
    "evolve": cmd_evolve,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings(args)
        return HANDLERS[args.command](settings)
    except ChargeWignerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
