"""Complex-valued functions sampled on a uniform 1D grid, and the calculus on them."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate

from .exceptions import GridMismatchError, PreconditionError


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of ``n_points`` samples covering ``[x_min, x_max]``."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise PreconditionError(f"x_min={self.x_min} must be < x_max={self.x_max}")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise PreconditionError(f"n_points must be an integer >= 3, got {self.n_points}")
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def index_of(self, x: float) -> int:
        """Index of the grid point nearest to ``x`` (ties go left)."""
        if not self.x_min - 1e-12 <= x <= self.x_max + 1e-12:
            raise PreconditionError(f"x = {x} lies outside [{self.x_min}, {self.x_max}]")
        return int(np.clip(np.ceil((x - self.x_min) / self.h - 0.5), 0, self.n_points - 1))

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``"<min>:<max>:<n>"``; ``pi`` is accepted in the bounds."""
        parts = text.split(":")
        if len(parts) != 3:
            raise PreconditionError(f"grid must look like '<min>:<max>:<n>', got {text!r}")
        return cls(parse_real(parts[0]), parse_real(parts[1]), int(parts[2]))

    def __str__(self):
        return f"{self.x_min:g}:{self.x_max:g}:{self.n_points}"


def parse_real(text: str) -> float:
    """Parse a real number, allowing ``pi`` and simple ``a*pi`` / ``pi/b`` forms."""
    text = text.strip().replace(" ", "")
    if "pi" not in text:
        return float(text)
    sign = -1.0 if text.startswith("-") else 1.0
    text = text.lstrip("+-")
    num, _, den = text.partition("/")
    coef = num.replace("pi", "").rstrip("*") or "1"
    value = float(coef) * np.pi
    if den:
        value /= float(den)
    return sign * value


class ComplexField:
    """A complex function sampled on a :class:`GridSpec`.

    Values are stored as a read-only complex128 array. Arithmetic with another
    field requires an identical grid.
    """

    def __init__(self, grid: GridSpec, values):
        values = np.array(values, dtype=np.complex128)
        if values.shape != (grid.n_points,):
            raise PreconditionError(
                f"expected {grid.n_points} samples, got shape {values.shape}"
            )
        values.flags.writeable = False
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "ComplexField":
        return cls(grid, func(grid.x))

    @cached_property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def conj(self) -> "ComplexField":
        return ComplexField(self.grid, np.conj(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def at(self, x: float) -> complex:
        """Linear interpolation of the samples at ``x``."""
        xs = self.x
        return complex(np.interp(x, xs, self.real) + 1j * np.interp(x, xs, self.imag))

    def restrict(self, start: int, stop: int) -> "ComplexField":
        """Sub-field on grid indices ``[start, stop)``."""
        n = self.grid.n_points
        start, stop, _ = slice(start, stop).indices(n)
        xs = self.x
        sub = GridSpec(xs[start], xs[stop - 1], stop - start)
        return ComplexField(sub, self.values[start:stop])

    def _coerce(self, other):
        if isinstance(other, ComplexField):
            require_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return ComplexField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ComplexField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return ComplexField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return ComplexField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ComplexField(self.grid, self.values / self._coerce(other))

    def __rtruediv__(self, other):
        return ComplexField(self.grid, self._coerce(other) / self.values)

    def __neg__(self):
        return ComplexField(self.grid, -self.values)

    def __len__(self):
        return self.grid.n_points

    def __repr__(self):
        return f"ComplexField(grid={self.grid}, sup={self.sup():.4g})"

    def to_csv(self, path) -> Path:
        return write_field_csv(self, path)


def require_same_grid(*fields: ComplexField) -> GridSpec:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"grid mismatch: {grid} vs {f.grid}")
    return grid


def derivative(f: ComplexField) -> ComplexField:
    """Second-order central differences inside, four-point one-sided at the ends.

    The end stencils are third order so the boundary error never exceeds the
    interior one; with only three points the second-order stencil is used.
    """
    n = f.grid.n_points
    if n < 3:
        raise PreconditionError("derivative needs at least 3 grid points")
    v, h = f.values, f.grid.h
    d = np.gradient(v, h, edge_order=2)
    if n >= 4:
        d[0] = (-11 * v[0] + 18 * v[1] - 9 * v[2] + 2 * v[3]) / (6 * h)
        d[-1] = (11 * v[-1] - 18 * v[-2] + 9 * v[-3] - 2 * v[-4]) / (6 * h)
    return ComplexField(f.grid, d)


def second_derivative(f: ComplexField) -> np.ndarray:
    """Three-point second difference on interior points (length ``n - 2``)."""
    v = f.values
    return (v[2:] - 2.0 * v[1:-1] + v[:-2]) / f.grid.h**2


def cumulative_integral(f: ComplexField, x_ref: float) -> ComplexField:
    """Antiderivative ``F`` of ``f`` with ``F(x_ref) = 0``.

    Composite Simpson on the cumulative sum (trapezoid on the odd panel).
    """
    grid = f.grid
    if not grid.x_min - 1e-12 <= x_ref <= grid.x_max + 1e-12:
        raise PreconditionError(f"x_ref = {x_ref} lies outside [{grid.x_min}, {grid.x_max}]")
    v = f.values
    F = integrate.cumulative_simpson(v.real, dx=grid.h, initial=0.0) + 1j * integrate.cumulative_simpson(
        v.imag, dx=grid.h, initial=0.0
    )
    nearest = grid.index_of(x_ref)
    i = int(np.clip(np.floor((x_ref - grid.x_min) / grid.h), 0, grid.n_points - 2))
    dx = x_ref - grid.x[i]
    if abs(x_ref - grid.x[nearest]) < 1e-9 * grid.h:
        offset = F[nearest]
    else:
        f_ref = v[i] + (v[i + 1] - v[i]) * dx / grid.h
        offset = F[i] + 0.5 * dx * (v[i] + f_ref)
    return ComplexField(grid, F - offset)


def bilinear_form(f: ComplexField, g: ComplexField) -> complex:
    """``∫ f g dx`` over the whole grid, without complex conjugation."""
    grid = require_same_grid(f, g)
    prod = f.values * g.values
    return complex(
        integrate.simpson(prod.real, dx=grid.h) + 1j * integrate.simpson(prod.imag, dx=grid.h)
    )


def wronskian_field(f: ComplexField, g: ComplexField) -> ComplexField:
    """Pointwise ``f' g - f g'`` with numerical derivatives.

    Both products use the same operand order so that swapping ``f`` and ``g``
    negates the result bit for bit.
    """
    require_same_grid(f, g)
    return derivative(f) * g - derivative(g) * f


def write_field_csv(f: ComplexField, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "re", "im"])
        for x, z in zip(f.x, f.values):
            w.writerow([f"{x:.17g}", f"{z.real:.17g}", f"{z.imag:.17g}"])
    return path


def read_field_csv(path) -> ComplexField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x = data[:, 0]
    grid = GridSpec(x[0], x[-1], len(x))
    if not np.allclose(x, grid.x, rtol=0, atol=1e-9 * max(1.0, grid.length)):
        raise PreconditionError(f"{path}: x column is not a uniform grid")
    return ComplexField(grid, data[:, 1] + 1j * data[:, 2])
