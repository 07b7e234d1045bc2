"""Analytic reference systems: potentials, spectra and solutions at complex energy.

Units are hbar^2 / 2m = 1, so every system solves ``-psi'' + V psi = E psi``.
"""

from __future__ import annotations

import cmath
import enum
import math
import re
from dataclasses import dataclass

import numpy as np

from . import _ode
from .exceptions import PreconditionError
from .field import ComplexField, GridSpec, parse_real

LINE_HALF_WIDTH = 15.0
LINE_POINTS = 3001
WELL_POINTS = 2001

# Fraction of max|psi| below which the default reference point counts as a node.
REFERENCE_NODE_FRACTION = 0.1


class SolutionKind(enum.Enum):
    PRINCIPAL = "principal"
    COUNTERPART = "counterpart"
    SUPERPOSITION = "superposition"


def csqrt(z: complex) -> complex:
    """Principal square root with Re >= 0; on the cut (Re = 0) pick Im >= 0."""
    r = cmath.sqrt(complex(z))
    if r.real < 0 or (r.real == 0 and r.imag < 0):
        r = -r
    return r


@dataclass(frozen=True)
class InfiniteWell:
    width: float = math.pi

    def __post_init__(self):
        if not self.width > 0:
            raise PreconditionError(f"well width must be positive, got {self.width}")

    @property
    def name(self):
        return "well"

    def default_grid(self) -> GridSpec:
        return GridSpec(0.0, self.width, WELL_POINTS)

    def potential(self, x):
        return np.zeros_like(np.asarray(x, dtype=float), dtype=np.complex128)

    def level(self, n: int) -> float:
        """Dirichlet level ``n`` (1-based)."""
        return (n * math.pi / self.width) ** 2

    def aux_level(self, n: int) -> float:
        """Level ``n`` (1-based) of the mixed problem: psi' = 0 at x = 0, psi = 0 at the far wall."""
        return ((n - 0.5) * math.pi / self.width) ** 2

    def __str__(self):
        return f"well(width={self.width:.17g})"


@dataclass(frozen=True)
class HarmonicOscillator:
    @property
    def name(self):
        return "oscillator"

    def default_grid(self) -> GridSpec:
        return GridSpec(-LINE_HALF_WIDTH, LINE_HALF_WIDTH, LINE_POINTS)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return (x**2).astype(np.complex128)

    def level(self, n: int) -> float:
        """Level ``n`` (0-based): 2n + 1."""
        return 2.0 * n + 1.0

    def __str__(self):
        return "oscillator"


@dataclass(frozen=True)
class SolitonWell:
    @property
    def name(self):
        return "soliton"

    def default_grid(self) -> GridSpec:
        return GridSpec(-LINE_HALF_WIDTH, LINE_HALF_WIDTH, LINE_POINTS)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return (-2.0 / np.cosh(x) ** 2).astype(np.complex128)

    def level(self, n: int = 0) -> float:
        if n != 0:
            raise PreconditionError("the soliton well has a single bound state")
        return -1.0

    def __str__(self):
        return "soliton"


@dataclass(frozen=True)
class FreeLine:
    @property
    def name(self):
        return "free"

    def default_grid(self) -> GridSpec:
        return GridSpec(-LINE_HALF_WIDTH, LINE_HALF_WIDTH, LINE_POINTS)

    def potential(self, x):
        return np.zeros_like(np.asarray(x, dtype=float), dtype=np.complex128)

    def __str__(self):
        return "free"


@dataclass(frozen=True)
class FreeSuperposition(FreeLine):
    c: complex = 2.0

    def __post_init__(self):
        if not cmath.isfinite(complex(self.c)):
            raise PreconditionError("superposition coefficient must be finite")

    @property
    def name(self):
        return "free-superposition"

    def __str__(self):
        c = complex(self.c)
        return f"free-superposition(c={c.real:g}{c.imag:+g}i)"


BaseSystemSpec = InfiniteWell | HarmonicOscillator | SolitonWell | FreeLine | FreeSuperposition


def _check_well_grid(spec: InfiniteWell, grid: GridSpec):
    tol = 1e-9 * spec.width
    if abs(grid.x_min) > tol or abs(grid.x_max - spec.width) > tol:
        raise PreconditionError(
            f"well grid must span exactly [0, {spec.width:.6g}], got [{grid.x_min}, {grid.x_max}]"
        )


def potential_field(spec: BaseSystemSpec, grid: GridSpec | None = None) -> ComplexField:
    """Sample V0 on ``grid`` (imaginary part exactly zero)."""
    grid = grid or spec.default_grid()
    if isinstance(spec, InfiniteWell):
        _check_well_grid(spec, grid)
    return ComplexField(grid, spec.potential(grid.x).real.astype(np.complex128))


def _hermite_functions(n_max: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized Hermite functions and their derivatives, via the stable recurrence."""
    x = np.asarray(x, dtype=float)
    phi = np.empty((n_max + 1, len(x)))
    phi[0] = math.pi**-0.25 * np.exp(-0.5 * x**2)
    if n_max >= 1:
        phi[1] = math.sqrt(2.0) * x * phi[0]
    for n in range(2, n_max + 1):
        phi[n] = math.sqrt(2.0 / n) * x * phi[n - 1] - math.sqrt((n - 1) / n) * phi[n - 2]
    dphi = np.empty_like(phi)
    dphi[0] = -x * phi[0]
    for n in range(1, n_max + 1):
        dphi[n] = math.sqrt(2.0 * n) * phi[n - 1] - x * phi[n]
    return phi, dphi


def eigen_pairs(spec: BaseSystemSpec, count: int, grid: GridSpec | None = None):
    """Analytic eigenvalues and unit-normalized eigenfunctions, lowest first."""
    pairs = eigen_pairs_with_derivative(spec, count, grid)
    return [(E, psi) for E, psi, _ in pairs]


def eigen_pairs_with_derivative(spec: BaseSystemSpec, count: int, grid: GridSpec | None = None):
    grid = grid or spec.default_grid()
    if count < 1:
        raise PreconditionError("count must be >= 1")
    x = grid.x
    if isinstance(spec, InfiniteWell):
        _check_well_grid(spec, grid)
        out = []
        norm = math.sqrt(2.0 / spec.width)
        for n in range(1, count + 1):
            k = n * math.pi / spec.width
            out.append(
                (
                    spec.level(n),
                    ComplexField(grid, norm * np.sin(k * x)),
                    ComplexField(grid, norm * k * np.cos(k * x)),
                )
            )
        return out
    if isinstance(spec, HarmonicOscillator):
        phi, dphi = _hermite_functions(count - 1, x)
        return [
            (spec.level(n), ComplexField(grid, phi[n]), ComplexField(grid, dphi[n]))
            for n in range(count)
        ]
    if isinstance(spec, SolitonWell):
        if count > 1:
            raise PreconditionError("the soliton well has only one bound state")
        sech = 1.0 / np.cosh(x)
        norm = 1.0 / math.sqrt(2.0)
        return [(-1.0, ComplexField(grid, norm * sech), ComplexField(grid, -norm * np.tanh(x) * sech))]
    raise PreconditionError(f"{spec} has no bound states")


def _analytic_level_index(spec, E: complex) -> int | None:
    """Index of the analytic bound level equal to ``E``, if any."""
    E = complex(E)
    if abs(E.imag) > 1e-14 * max(1.0, abs(E)):
        return None
    if isinstance(spec, HarmonicOscillator):
        n = round((E.real - 1.0) / 2.0)
        if n >= 0 and abs(E.real - spec.level(n)) <= 1e-12 * max(1.0, abs(E)):
            return n
    if isinstance(spec, SolitonWell) and abs(E.real + 1.0) <= 1e-14:
        return 0
    return None


def _sin_family(grid: GridSpec, kappa: complex, shift: float = 0.0):
    """``sin(kappa (x - shift)) / kappa`` and its derivative; smooth through kappa = 0."""
    u = grid.x - shift
    if abs(kappa) < 1e-12:
        return u.astype(np.complex128), np.ones_like(u, dtype=np.complex128)
    return np.sin(kappa * u) / kappa, np.cos(kappa * u)


def _integrate_from(spec, grid: GridSpec, E: complex, x0: float, psi0: complex, dpsi0: complex):
    """Numerically integrate the analytic potential outward from ``x0`` in both directions."""
    i0 = grid.index_of(x0)
    x = grid.x
    if abs(x[i0] - x0) > 1e-9 * grid.h:
        raise PreconditionError(f"reference point {x0} is not a grid node")
    psi = np.empty(grid.n_points, dtype=np.complex128)
    dpsi = np.empty(grid.n_points, dtype=np.complex128)
    psi[i0], dpsi[i0] = psi0, dpsi0
    if i0 < grid.n_points - 1:
        p, d = _ode.sweep_function(spec.potential, x[i0], x[-1], grid.n_points - i0, E, psi0, dpsi0)
        psi[i0:], dpsi[i0:] = p, d
    if i0 > 0:
        p, d = _ode.sweep_function(spec.potential, x[i0], x[0], i0 + 1, E, psi0, dpsi0)
        psi[: i0 + 1], dpsi[: i0 + 1] = p[::-1], d[::-1]
    return psi, dpsi


def principal_solution(spec: BaseSystemSpec, E: complex, grid: GridSpec | None = None):
    """The regular branch at energy ``E`` as ``(psi, dpsi)`` fields.

    well, free line: sin(sqrt(E) x); soliton: the even solution with psi(0) = 1
    (equal to sech x at E = -1); oscillator: the analytic Hermite function at a
    level, otherwise the solution with the parity of the nearest level.
    """
    grid = grid or spec.default_grid()
    E = complex(E)
    x = grid.x
    if isinstance(spec, InfiniteWell):
        _check_well_grid(spec, grid)
    if isinstance(spec, (InfiniteWell, FreeLine)):
        kappa = csqrt(E)
        if abs(kappa) < 1e-12:
            return ComplexField(grid, x), ComplexField(grid, np.ones_like(x))
        return ComplexField(grid, np.sin(kappa * x)), ComplexField(grid, kappa * np.cos(kappa * x))
    if isinstance(spec, SolitonWell):
        if _analytic_level_index(spec, E) is not None:
            sech = 1.0 / np.cosh(x)
            return ComplexField(grid, sech), ComplexField(grid, -np.tanh(x) * sech)
        kappa = csqrt(-E)
        t = np.tanh(x)
        ch = np.cosh(kappa * x)
        shk = x.astype(np.complex128) if abs(kappa) < 1e-12 else np.sinh(kappa * x) / kappa
        psi = ch - t * shk
        dpsi = kappa**2 * shk - (1.0 - t**2) * shk - t * ch
        return ComplexField(grid, psi), ComplexField(grid, dpsi)
    if isinstance(spec, HarmonicOscillator):
        n = _analytic_level_index(spec, E)
        if n is not None:
            phi, dphi = _hermite_functions(n, x)
            return ComplexField(grid, phi[n]), ComplexField(grid, dphi[n])
        nearest = max(0, round((E.real - 1.0) / 2.0))
        ic = (1.0, 0.0) if nearest % 2 == 0 else (0.0, 1.0)
        x0 = 0.0 if grid.x_min <= 0.0 <= grid.x_max else grid.x_min
        psi, dpsi = _integrate_from(spec, grid, E, x0, *ic)
        return ComplexField(grid, psi), ComplexField(grid, dpsi)
    raise PreconditionError(f"no principal solution for {spec}")


def default_reference_point(spec: BaseSystemSpec, grid: GridSpec, principal: ComplexField) -> float:
    """Reference point of the counterpart recipe.

    Well: midpoint; line systems: 0. If the principal solution (nearly) vanishes
    there, the nearest local maximum of |psi| is used instead (ties go left).
    """
    x = grid.x
    if isinstance(spec, InfiniteWell):
        x0 = 0.5 * (grid.x_min + grid.x_max)
    else:
        x0 = 0.0 if grid.x_min <= 0.0 <= grid.x_max else 0.5 * (grid.x_min + grid.x_max)
    i0 = grid.index_of(x0)
    a = principal.abs()
    if a[i0] >= REFERENCE_NODE_FRACTION * a.max():
        return float(x[i0])
    peaks = np.where((a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:]))[0] + 1
    if len(peaks) == 0:
        return float(x[int(np.argmax(a))])
    best = peaks[np.argmin(np.abs(peaks - i0))]
    return float(x[best])


def counterpart_solution(
    spec: BaseSystemSpec,
    E: complex,
    grid: GridSpec | None = None,
    x_ref: float | None = None,
    base_energy: complex | None = None,
    principal: ComplexField | None = None,
):
    """Second branch continued in energy; returns ``(psi, dpsi, x_ref)``.

    Initial data at ``x_ref``: psi = 0, psi' = -1 / psi_principal(x_ref, E_real),
    where E_real = Re(E) unless ``base_energy`` is given, and ``principal``
    overrides the principal solution used for the normalization. At E = E_real
    the Wronskian ``psi_p' psi - psi_p psi'`` is then identically 1.
    """
    grid = grid or (principal.grid if principal is not None else spec.default_grid())
    E = complex(E)
    if principal is None:
        e_base = complex(E.real if base_energy is None else base_energy)
        p_base, _ = principal_solution(spec, e_base, grid)
    else:
        p_base = principal
    if x_ref is None:
        x_ref = default_reference_point(spec, grid, p_base)
    i_ref = grid.index_of(x_ref)
    x_ref = float(grid.x[i_ref])
    p_ref = p_base.values[i_ref]
    if p_ref == 0:
        raise PreconditionError(f"principal solution vanishes at reference point {x_ref}")
    slope = -1.0 / p_ref
    if isinstance(spec, (InfiniteWell, FreeLine)):
        s, c = _sin_family(grid, csqrt(E), x_ref)
        return ComplexField(grid, slope * s), ComplexField(grid, slope * c), x_ref
    psi, dpsi = _integrate_from(spec, grid, E, x_ref, 0.0, slope)
    return ComplexField(grid, psi), ComplexField(grid, dpsi), x_ref


def superposition_solution(spec: FreeSuperposition, E: complex, grid: GridSpec | None = None):
    """``exp(-i k x) + c exp(i k x)`` with k the principal root of E."""
    if not isinstance(spec, FreeSuperposition):
        raise PreconditionError("superposition seeds exist only for free-superposition")
    grid = grid or spec.default_grid()
    k = csqrt(E)
    x = grid.x
    em, ep = np.exp(-1j * k * x), np.exp(1j * k * x)
    c = complex(spec.c)
    return ComplexField(grid, em + c * ep), ComplexField(grid, 1j * k * (c * ep - em))


def solution_at(spec: BaseSystemSpec, E: complex, kind: SolutionKind, grid: GridSpec | None = None):
    """A solution of ``-psi'' + V0 psi = E psi`` of the requested kind."""
    kind = SolutionKind(kind)
    if kind is SolutionKind.PRINCIPAL:
        return principal_solution(spec, E, grid)[0]
    if kind is SolutionKind.COUNTERPART:
        return counterpart_solution(spec, E, grid)[0]
    return superposition_solution(spec, E, grid)[0]


_SYSTEM_RE = re.compile(r"^\s*([a-z\-]+)\s*(?:\((.*)\))?\s*$")


def parse_complex(text: str) -> complex:
    """Parse ``2``, ``2+0i``, ``-1-1i``, ``2j`` or ``"re,im"``."""
    text = text.strip().replace(" ", "")
    if "," in text:
        re_, im_ = text.split(",")
        return complex(parse_real(re_), parse_real(im_))
    return complex(text.replace("i", "j"))


def parse_system(text: str) -> BaseSystemSpec:
    """Parse ``well(width=pi) | oscillator | soliton | free | free-superposition(c=2+0i)``."""
    m = _SYSTEM_RE.match(text)
    if not m:
        raise PreconditionError(f"cannot parse system {text!r}")
    name, args = m.group(1), m.group(2) or ""
    kwargs = {}
    for item in filter(None, (a.strip() for a in args.split(","))):
        key, _, value = item.partition("=")
        kwargs[key.strip()] = value.strip()
    if name == "well":
        return InfiniteWell(parse_real(kwargs.pop("width", "pi")))
    if name == "oscillator":
        return HarmonicOscillator()
    if name == "soliton":
        return SolitonWell()
    if name == "free":
        return FreeLine()
    if name == "free-superposition":
        return FreeSuperposition(parse_complex(kwargs.pop("c", "2")))
    raise PreconditionError(f"unknown system {name!r}")


def half_well_spectra(width: float, count: int):
    """Spectra of the half of a symmetric well of total width ``2 * width``.

    Returns ``(neumann, dirichlet)``: levels with psi' = 0 or psi = 0 at the
    centre. Their union is the spectrum of the whole symmetric well; the
    Neumann-at-centre sequence is the mixed auxiliary spectrum of ``InfiniteWell(width)``.
    """
    well = InfiniteWell(width)
    neumann = [well.aux_level(n) for n in range(1, count + 1)]
    dirichlet = [well.level(n) for n in range(1, count + 1)]
    return neumann, dirichlet


def analytic_levels(spec: BaseSystemSpec, count: int) -> list[float]:
    """Up to ``count`` lowest analytic bound levels (empty for the free line)."""
    if isinstance(spec, InfiniteWell):
        return [spec.level(n) for n in range(1, count + 1)]
    if isinstance(spec, HarmonicOscillator):
        return [spec.level(n) for n in range(count)]
    if isinstance(spec, SolitonWell):
        return [-1.0][:count]
    return []
