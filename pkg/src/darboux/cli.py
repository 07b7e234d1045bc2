"""Command-line interface: ``darboux {transform,spectrum,scatter,scan-flux,figures}``.

Every run writes ``report.json`` into the output directory. Exit status:
0 all checks passed, 1 a verification failed, 2 bad arguments,
3 singular theta, 4 any other precondition, numerical or I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import engine, figures, scattering, solver, systems
from .exceptions import DarbouxError, PreconditionError, SingularThetaError
from .field import ComplexField, GridSpec, parse_real
from .report import Check, Report
from .svg import PlotSpec, Series, write_plot

logger = logging.getLogger("darboux")

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_SINGULAR, EXIT_ERROR = 0, 1, 2, 3, 4
CONFIG_NAME = "darboux.cfg"
DEFAULT_OUT = "darboux_out"
EIG_TOL = 1e-6
DEFAULTS = {
    "system": "soliton",
    "shift": None,
    "gamma": None,
    "grid": None,
    "energies": "0.2:4:0.05",
    "guesses": None,
    "format": "csv",
    "eig_tol": "1e-10",
    "theta_tol": None,
}


class UsageError(ValueError):
    """Malformed command-line or config values."""


@dataclass(frozen=True)
class CommandSpec:
    subcommand: str
    system: systems.BaseSystemSpec
    base_energy: float | None
    gamma: float
    grid: GridSpec
    output_dir: Path
    format: str
    energies: tuple
    guesses: tuple | None
    eig_tol: float
    theta_tol: float | None


def parse_shift(text: str) -> tuple[float, float]:
    """``"<re>,<im> -> <re>,<im>"`` to (base energy, gamma); real parts must agree."""
    if "->" not in text:
        raise UsageError(f"shift must look like '<re>,<im> -> <re>,<im>', got {text!r}")
    a, b = (s.strip() for s in text.split("->", 1))
    try:
        e0, e1 = systems.parse_complex(a), systems.parse_complex(b)
    except ValueError as exc:
        raise UsageError(f"cannot parse shift {text!r}: {exc}") from None
    if e0.imag != 0:
        raise UsageError("the base energy must be real")
    if e1.real != e0.real:
        raise UsageError(
            "only imaginary shifts are supported: the real parts must agree; "
            "to move a different level, change base_energy (the left-hand side)"
        )
    return e0.real, e1.imag - e0.imag


def parse_energies(text: str) -> tuple:
    """``"start:stop:step"`` (stop inclusive) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (parse_real(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise UsageError(f"energy range must have step > 0 and stop >= start: {text!r}")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(start + i * step) for i in range(n))
        return tuple(parse_real(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise UsageError(f"cannot parse energies {text!r}: {exc}") from None


def parse_guesses(text: str) -> tuple:
    """Semicolon-separated complex numbers, each ``re,im`` or ``a+bi``."""
    try:
        return tuple(systems.parse_complex(p) for p in text.split(";") if p.strip())
    except ValueError as exc:
        raise UsageError(f"cannot parse guesses {text!r}: {exc}") from None


def read_config(path: Path) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Keys use underscores."""
    out = {}
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS and key != "output_dir":
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="darboux", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, shift=True):
        sp.add_argument("--system", help="well(width=pi) | oscillator | soliton | free | free-superposition(c=2+0i)")
        if shift:
            sp.add_argument("--shift", help='imaginary shift "<re>,<im> -> <re>,<im>"')
            sp.add_argument("--gamma", help="overrides the imaginary part of the shift")
            sp.add_argument("--theta-tol", dest="theta_tol")
        sp.add_argument("--grid", help='"<min>:<max>:<n>"')
        sp.add_argument("--out", "--output-dir", dest="output_dir")
        sp.add_argument("--format", choices=("csv", "json", "svg"))
        sp.add_argument("--config", help=f"key=value file (default ./{CONFIG_NAME} if present)")

    common(sub.add_parser("transform", help="two-step imaginary shift of a level"))
    sp = sub.add_parser("spectrum", help="shooting eigenvalues of V0 or the shifted V2")
    common(sp)
    sp.add_argument("--guesses", help='semicolon-separated, e.g. "1,-0.5;4,0"')
    sp.add_argument("--eig-tol", dest="eig_tol")
    for name in ("scatter", "scan-flux"):
        sp = sub.add_parser(name, help="reflection/transmission" if name == "scatter" else "flux deficit scan")
        common(sp)
        sp.add_argument("--energies", help='"start:stop:step" or comma list')
    sp = sub.add_parser("figures", help="build, verify and plot the nine figures")
    sp.add_argument("--out", "--output-dir", dest="output_dir")
    sp.add_argument("--config")
    return p


def resolve(args: argparse.Namespace) -> CommandSpec:
    """Merge flags over the config file over built-in defaults."""
    cfg_path = getattr(args, "config", None)
    cfg = {}
    if cfg_path:
        if not Path(cfg_path).is_file():
            raise UsageError(f"config file {cfg_path} not found")
        cfg = read_config(Path(cfg_path))
    elif Path(CONFIG_NAME).is_file():
        cfg = read_config(Path(CONFIG_NAME))

    def get(key):
        v = getattr(args, key, None)
        return v if v is not None else cfg.get(key, DEFAULTS.get(key))

    out = getattr(args, "output_dir", None) or os.environ.get("DARBOUX_OUT") or cfg.get("output_dir") or DEFAULT_OUT
    try:
        spec = systems.parse_system(get("system"))
        grid = GridSpec.parse(get("grid")) if get("grid") else spec.default_grid()
        eig_tol = float(get("eig_tol"))
        theta_tol = float(get("theta_tol")) if get("theta_tol") else None
        gamma_override = float(get("gamma")) if get("gamma") is not None else None
    except (ValueError, DarbouxError) as exc:
        raise UsageError(str(exc)) from None
    base, gamma = (None, 0.0)
    if get("shift"):
        base, gamma = parse_shift(get("shift"))
    if gamma_override is not None:
        if base is None:
            raise UsageError("--gamma needs --shift to name the base energy")
        gamma = gamma_override
    guesses = parse_guesses(get("guesses")) if get("guesses") else None
    return CommandSpec(
        subcommand=args.subcommand,
        system=spec,
        base_energy=base,
        gamma=gamma,
        grid=grid,
        output_dir=Path(out),
        format=get("format") or "csv",
        energies=parse_energies(get("energies")),
        guesses=guesses,
        eig_tol=eig_tol,
        theta_tol=theta_tol,
    )


def _potential(cmd: CommandSpec, report: Report):
    """V0, or V2 when a shift was requested (with its TwoStepResult)."""
    V0 = systems.potential_field(cmd.system, cmd.grid)
    if cmd.base_energy is None:
        return V0, None
    if isinstance(cmd.system, systems.FreeLine) and cmd.base_energy <= 0:
        raise DarbouxError("free-line shifts need a positive continuum energy")
    result = engine.shift_level(cmd.system, cmd.base_energy, cmd.gamma, cmd.grid, theta_tol=cmd.theta_tol)
    report.add(Check.above("min |theta|", result.min_abs_theta, result.report.tolerance))
    return result.V2, result


def _bc(cmd: CommandSpec) -> solver.BoundarySpec:
    return solver.BoundarySpec.for_system(cmd.system)


def _expected_spectrum(cmd: CommandSpec) -> list[complex]:
    levels = systems.analytic_levels(cmd.system, 4)
    if cmd.base_energy is None:
        return levels
    return [E + 1j * cmd.gamma if abs(E - cmd.base_energy) < 1e-12 else E for E in levels]


def _spectrum_checks(cmd: CommandSpec, found, report: Report):
    for target in _expected_spectrum(cmd):
        err = min((abs(r.energy - target) for r in found), default=float("inf"))
        report.add(Check.below(f"eigenvalue {target:.6g} reproduced", err, EIG_TOL))


def _default_guesses(cmd: CommandSpec) -> list[complex]:
    """Expected levels, with shifted ones started halfway along the shift."""
    return [complex(E.real, 0.5 * E.imag) for E in map(complex, _expected_spectrum(cmd))]


def _plot(cmd: CommandSpec, name: str, series, report: Report, title: str):
    if cmd.format == "svg":
        path = write_plot(PlotSpec(series, title=title, path=cmd.output_dir / f"{name}.svg"))
        report.files.append(path.name)


def run_transform(cmd: CommandSpec, report: Report):
    if cmd.base_energy is None:
        raise UsageError("transform needs --shift")
    if isinstance(cmd.system, systems.FreeSuperposition):
        raise PreconditionError("free-superposition seeds one-step transforms only; use free for shifts")
    V2, result = _potential(cmd, report)
    if cmd.gamma == 0:
        same = bool(np.array_equal(V2.values, result.V0.values))
        report.add(Check("zero shift leaves V2 = V0", same, 0.0 if same else float(np.max(np.abs((V2 - result.V0).values))), 0.0))
    index = result.to_json(cmd.output_dir)
    report.files += [index.name, "v2.csv", "theta.csv", "psi_shifted.csv"]
    if isinstance(cmd.system, systems.FreeLine):
        integ = solver.l2_integrability(result.psi_shifted)
        if cmd.gamma != 0:
            report.add(Check.below("shifted state tail rate", integ.tail_decay_rate, -0.05))
        return
    found = solver.scan_spectrum(
        V2, _default_guesses(cmd), _bc(cmd), solver.ShootingConfig(eig_tol=cmd.eig_tol)
    )
    _spectrum_checks(cmd, found, report)
    solver.spectrum_to_json(found, cmd.output_dir / "spectrum.json")
    report.files.append("spectrum.json")
    _plot(cmd, "v2", [Series("Re V2", V2, "re"), Series("Im V2", V2, "im")], report, f"{cmd.system}: V2")


def run_spectrum(cmd: CommandSpec, report: Report):
    V, _ = _potential(cmd, report)
    guesses = cmd.guesses or _default_guesses(cmd)
    if not guesses:
        raise PreconditionError(f"{cmd.system} has no analytic levels; pass --guesses")
    found = solver.scan_spectrum(V, guesses, _bc(cmd), solver.ShootingConfig(eig_tol=cmd.eig_tol))
    if cmd.guesses is None:
        _spectrum_checks(cmd, found, report)
    else:
        report.add(Check.above("eigenvalues found", float(len(found)), 0.0))
    solver.spectrum_to_json(found, cmd.output_dir / "spectrum.json")
    report.files.append("spectrum.json")
    if found:
        _plot(cmd, "eigenfunctions", [Series(f"|psi| E={r.energy:.4g}", r.field, "abs") for r in found], report, "eigenfunctions")


def run_scatter(cmd: CommandSpec, report: Report):
    V, _ = _potential(cmd, report)
    results = [scattering.reflection_transmission(V, E) for E in cmd.energies if E > 0]
    if not results:
        raise PreconditionError("scatter needs at least one positive energy")
    scattering.scatter_results_to_csv(results, cmd.output_dir / "scatter.csv")
    report.files.append("scatter.csv")
    if not np.any(V.imag):
        worst = max(abs(r.unitarity_defect) for r in results)
        report.add(Check.below("|R|^2 + |T|^2 = 1 for real V", worst, 1e-6))
    else:
        worst = max(abs(r.flux_in_left - r.flux_out_left - r.flux_out_right - (-r.delta_I)) for r in results)
        report.add(Check.below("flux bookkeeping consistent", worst, 1e-8))


def run_scan_flux(cmd: CommandSpec, report: Report):
    V, _ = _potential(cmd, report)
    scan = scattering.flux_deficit_scan(V, [E for E in cmd.energies if E > 0])
    scan.to_csv(cmd.output_dir / "flux_scan.csv")
    report.files.append("flux_scan.csv")
    report.parameters["peak_energy"] = scan.peak_energy
    report.add(Check.above("energies scanned", float(len(scan.energies)), 0.0))
    if not np.any(V.imag) and len(scan.delta_I):
        report.add(Check.below("flux conserved for real V", float(np.max(np.abs(scan.delta_I))), 1e-10))
    if cmd.format == "svg" and len(scan.energies) >= 3:
        grid = GridSpec(scan.energies[0], scan.energies[-1], len(scan.energies))
        if np.allclose(grid.x, scan.energies):
            _plot(cmd, "flux_scan", [Series("delta I", ComplexField(grid, scan.delta_I))], report, "flux deficit")


RUNNERS = {
    "transform": run_transform,
    "spectrum": run_spectrum,
    "scatter": run_scatter,
    "scan-flux": run_scan_flux,
}


def run_command(cmd: CommandSpec) -> tuple[int, Report]:
    """Execute a resolved command; always writes ``report.json``."""
    report = Report(
        cmd.subcommand,
        parameters={
            "system": str(cmd.system),
            "base_energy": cmd.base_energy,
            "gamma": cmd.gamma,
            "grid": str(cmd.grid),
            "format": cmd.format,
        },
    )
    status = EXIT_OK
    try:
        cmd.output_dir.mkdir(parents=True, exist_ok=True)
        if cmd.subcommand == "figures":
            report.parameters = {}
            figures.emit_figures(cmd.output_dir, report)
        else:
            if cmd.subcommand in ("scatter", "scan-flux"):
                report.parameters["energies"] = [cmd.energies[0], cmd.energies[-1], len(cmd.energies)]
            RUNNERS[cmd.subcommand](cmd, report)
        if not report.passed:
            status = EXIT_FAILED
    except UsageError as exc:
        report.error = str(exc)
        status = EXIT_USAGE
    except SingularThetaError as exc:
        report.error = str(exc)
        status = EXIT_SINGULAR
    except (DarbouxError, ArithmeticError, OSError) as exc:
        report.error = f"{type(exc).__name__}: {exc}"
        status = EXIT_ERROR
    try:
        report.write(cmd.output_dir)
    except OSError as exc:
        logger.error("cannot write report.json: %s", exc)
        status = status or EXIT_ERROR
    return status, report


def _usage_report(command: str, error: str, out_dir) -> None:
    """Best-effort ``report.json`` for runs rejected before a command could be resolved."""
    out = out_dir or os.environ.get("DARBOUX_OUT") or DEFAULT_OUT
    try:
        Report(command, error=error).write(out)
    except OSError as exc:
        logger.error("cannot write report.json: %s", exc)


VALUE_FLAGS = (
    "--system", "--shift", "--gamma", "--theta-tol", "--grid", "--out", "--output-dir",
    "--format", "--config", "--guesses", "--eig-tol", "--energies",
)


def _bind_dash_values(argv: list) -> list:
    """Join ``--grid -15:15:3001`` into ``--grid=-15:15:3001``.

    argparse reads a separate value starting with ``-`` as an option, which
    breaks grids, shifts and guesses with negative leading numbers.
    """
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1] not in VALUE_FLAGS:
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _bind_dash_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code:
            _usage_report("usage", "malformed command line", None)
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cmd = resolve(args)
    except (UsageError, DarbouxError) as exc:
        print(f"darboux: {exc}", file=sys.stderr)
        _usage_report(args.subcommand, str(exc), getattr(args, "output_dir", None))
        return EXIT_USAGE
    status, report = run_command(cmd)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  value={c.value} tol={c.tolerance}")
    if report.error:
        print(f"darboux: {report.error}", file=sys.stderr)
    print(f"report: {cmd.output_dir / 'report.json'}")
    return status


if __name__ == "__main__":
    sys.exit(main())
