"""Shooting eigensolver for complex potentials, plus integrability and biorthogonality checks."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _ode
from .exceptions import (
    ConvergenceError,
    DuplicateEigenvalueError,
    IntegrationOverflowError,
    PreconditionError,
)
from .field import ComplexField, bilinear_form, require_same_grid, second_derivative
from .systems import csqrt

logger = logging.getLogger(__name__)

STAGNATION_LIMIT = 20
DEDUPE_TOL = 1e-6
SELF_PRODUCT_TOL = 1e-10


class SideKind(Enum):
    DIRICHLET = "dirichlet"
    DECAYING = "decaying"
    GIVEN = "given"


@dataclass(frozen=True)
class SideCondition:
    """Boundary data on one end of the grid.

    ``GIVEN`` uses (``psi``, ``dpsi``) literally; a Neumann wall is
    ``SideCondition.given(1, 0)``.
    """

    kind: SideKind
    psi: complex = 0j
    dpsi: complex = 1 + 0j

    @classmethod
    def dirichlet(cls) -> "SideCondition":
        return cls(SideKind.DIRICHLET)

    @classmethod
    def decaying(cls) -> "SideCondition":
        return cls(SideKind.DECAYING)

    @classmethod
    def given(cls, psi: complex, dpsi: complex) -> "SideCondition":
        return cls(SideKind.GIVEN, complex(psi), complex(dpsi))

    def initial(self, v_end: complex, E: complex, side: str) -> tuple[complex, complex]:
        """(psi, psi') at the grid end for energy ``E``; ``side`` is 'left' or 'right'."""
        sign = 1.0 if side == "left" else -1.0
        if self.kind is SideKind.DIRICHLET:
            return 0j, sign * (1 + 0j)
        if self.kind is SideKind.DECAYING:
            return 1 + 0j, sign * csqrt(complex(v_end) - complex(E))
        return self.psi, self.dpsi


@dataclass(frozen=True)
class BoundarySpec:
    left: SideCondition
    right: SideCondition

    @classmethod
    def dirichlet(cls) -> "BoundarySpec":
        return cls(SideCondition.dirichlet(), SideCondition.dirichlet())

    @classmethod
    def decaying(cls) -> "BoundarySpec":
        return cls(SideCondition.decaying(), SideCondition.decaying())

    @classmethod
    def for_system(cls, spec) -> "BoundarySpec":
        """Dirichlet walls for a box, decaying tails on the line."""
        return cls.dirichlet() if getattr(spec, "name", "") == "well" else cls.decaying()

    @property
    def confined(self) -> bool:
        return self.left.kind is SideKind.DIRICHLET and self.right.kind is SideKind.DIRICHLET

    def validate(self, V: ComplexField, E: complex):
        for side, cond, v_end in (("left", self.left, V.values[0]), ("right", self.right, V.values[-1])):
            if cond.kind is SideKind.DECAYING and csqrt(complex(v_end) - complex(E)).real <= 0:
                raise PreconditionError(
                    f"decaying tail on the {side} needs Re sqrt(V - E) > 0 at E = {E}"
                )


@dataclass(frozen=True)
class ShootingConfig:
    match_x: float | None = None
    max_iter: int = 60
    eig_tol: float = 1e-10
    deflation: tuple = ()

    def __post_init__(self):
        if self.eig_tol <= 0:
            raise PreconditionError("eig_tol must be positive")
        if self.max_iter < 1:
            raise PreconditionError("max_iter must be at least 1")
        object.__setattr__(self, "deflation", tuple(complex(e) for e in self.deflation))


@dataclass(frozen=True)
class EigenResult:
    energy: complex
    field: ComplexField
    residual: float
    tail_decay_rate: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "re": self.energy.real,
            "im": self.energy.imag,
            "residual": self.residual,
            "tail_decay_rate": self.tail_decay_rate,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class BiorthoReport:
    gram: np.ndarray
    max_offdiag: float
    excluded: tuple = field(default_factory=tuple)


class Integrability(NamedTuple):
    integrable: bool
    tail_decay_rate: float


def integrate_schrodinger(
    V: ComplexField,
    E: complex,
    ic: tuple[complex, complex],
    direction: str = "left-to-right",
    coupled: bool = False,
    with_derivative: bool = False,
):
    """RK4 solution of ``-psi'' + V psi = E psi`` over the whole grid.

    ``ic`` is (psi, psi') at the start end: the left end for ``"left-to-right"``
    and the right end for ``"right-to-left"``. ``coupled=True`` integrates the
    equivalent real system for (Re psi, Im psi) instead of complex arithmetic.
    Returns the field, or (field, derivative field) with ``with_derivative``.
    """
    psi0, dpsi0 = (complex(z) for z in ic)
    if not (np.isfinite(psi0) and np.isfinite(dpsi0)):
        raise PreconditionError("initial condition must be finite")
    if not V.is_finite():
        raise PreconditionError("potential has non-finite samples")
    if direction not in ("left-to-right", "right-to-left"):
        raise PreconditionError(f"unknown direction {direction!r}")
    forward = direction == "left-to-right"
    psi, dpsi = _run(V.values, V.grid.h, E, psi0, dpsi0, forward, coupled, V.x)
    out = ComplexField(V.grid, psi)
    if with_derivative:
        return out, ComplexField(V.grid, dpsi)
    return out


def _run(v, h, E, psi0, dpsi0, forward, coupled=False, xs=None):
    v_half = _ode.half_step_samples(v)
    if not forward:
        v_half = v_half[::-1]
    kernel = _ode.sweep_coupled if coupled else _ode.sweep
    try:
        psi, dpsi = kernel(v_half, E, h if forward else -h, psi0, dpsi0)
    except OverflowError as exc:
        j = exc.args[0]
        idx = j if forward else len(v) - 1 - j
        x = xs[idx] if xs is not None else float("nan")
        raise IntegrationOverflowError(x) from None
    if not forward:
        psi, dpsi = psi[::-1], dpsi[::-1]
    return psi, dpsi


def default_match_index(V: ComplexField) -> int:
    """Index of min Re V over the central 80% of the grid, else the midpoint."""
    n = V.grid.n_points
    lo, hi = int(0.1 * n), int(np.ceil(0.9 * n))
    re = V.real[lo:hi]
    if len(re) == 0 or np.ptp(re) == 0:
        return n // 2
    return lo + int(np.argmin(re))


class _Shooter:
    """Mismatch ``mu(E) = psi_L psi_R' - psi_L' psi_R`` at the match node.

    Each branch's (psi, psi') end vector is scaled to unit length first, so
    ``|mu|`` is the sine of the angle between them and cannot overflow.
    """

    def __init__(self, V: ComplexField, bc: BoundarySpec, im: int):
        self.V = V
        self.bc = bc
        self.im = im
        v = V.values
        self.left_half = _ode.half_step_samples(v[: im + 1])
        self.right_half = _ode.half_step_samples(v[im:])[::-1]
        self.h = V.grid.h

    def k2(self, E) -> complex:
        return complex(E) - self.V.values[self.im]

    def branches(self, E):
        v = self.V.values
        try:
            pl, dl = _ode.sweep(self.left_half, E, self.h, *self.bc.left.initial(v[0], E, "left"))
            pr, dr = _ode.sweep(self.right_half, E, -self.h, *self.bc.right.initial(v[-1], E, "right"))
        except OverflowError:
            raise IntegrationOverflowError(float(self.V.x[self.im])) from None
        return pl, dl, pr[::-1], dr[::-1]

    def mismatch(self, E) -> tuple[complex, float, tuple]:
        """(mu, scale, unit end vectors) at ``E``; ``|mu| / scale`` is scale free."""
        pl, dl, pr, dr = self.branches(E)
        nl = np.hypot(abs(pl[-1]), abs(dl[-1]))
        nr = np.hypot(abs(pr[0]), abs(dr[0]))
        ends = (pl[-1] / nl, dl[-1] / nl, pr[0] / nr, dr[0] / nr)
        mu = ends[0] * ends[3] - ends[1] * ends[2]
        return mu, 1.0, ends


def _muller_step(x0, x1, x2, f0, f1, f2):
    h1, h2 = x1 - x0, x2 - x1
    d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
    a = (d2 - d1) / (h2 + h1)
    b = a * h2 + d2
    disc = np.sqrt(complex(b * b - 4 * a * f2))
    den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
    if den == 0:
        return x2 + h2
    return x2 - 2 * f2 / den


def _assemble(shooter: _Shooter, E) -> np.ndarray:
    """Left branch joined to the right branch rescaled to match at the match node."""
    pl, dl, pr, dr = shooter.branches(E)
    pl, dl = pl / np.max(np.abs(pl)), dl / np.max(np.abs(pl))
    if abs(pr[0]) >= abs(dr[0]) / max(1.0, abs(shooter.k2(E)) ** 0.5):
        c = pl[-1] / pr[0]
    else:
        c = dl[-1] / dr[0]
    return np.concatenate([pl[:-1], c * pr])


def _normalize(values: np.ndarray, grid) -> np.ndarray:
    out = values / np.max(np.abs(values))
    f = ComplexField(grid, out)
    s = bilinear_form(f, f)
    if abs(s) < SELF_PRODUCT_TOL * grid.length:
        logger.warning("eigenfunction is nearly self-orthogonal; left at unit peak")
    else:
        out = out / np.sqrt(s)
    k = int(np.argmax(np.abs(out)))
    if out[k].real < 0:
        out = -out
    return out


def find_eigenvalue(
    V: ComplexField,
    guess: complex,
    bc: BoundarySpec | None = None,
    config: ShootingConfig | None = None,
) -> EigenResult:
    """Two-sided shooting with complex secant iteration on the mismatch.

    Deflated eigenvalues divide the mismatch; the iteration switches to
    Muller's method after 20 iterations without improvement.
    """
    bc = bc or BoundarySpec.decaying()
    config = config or ShootingConfig()
    guess = complex(guess)
    bc.validate(V, guess)
    if config.match_x is None:
        im = default_match_index(V)
    else:
        im = V.grid.index_of(config.match_x)
    if not 0 < im < V.grid.n_points - 1:
        raise PreconditionError("match point must be interior")
    shooter = _Shooter(V, bc, im)
    roots = config.deflation

    # The mismatch is divided by N = psi_L psi_R + psi_L' psi_R' / |k^2| (k^2 =
    # E - V at the match point). Both are bilinear in the two branches, so the
    # ratio is analytic in E even though the end vectors are unit-scaled, and
    # N vanishes only by accident.
    c = 1.0 / max(abs(guess - V.values[im]), 1.0 / V.grid.length**2)

    def f(E):
        mu, scale, (pl, dl, pr, dr) = shooter.mismatch(E)
        norm = pl * pr + c * dl * dr
        for r in roots:
            norm *= E - r
        return mu / norm, abs(mu) / scale

    x0 = guess
    x1 = guess * (1 + 1e-4) + 1e-4j
    f0, r0 = f(x0)
    f1, r1 = f(x1)
    history = [(x0, f0), (x1, f1)]
    best = min(abs(f0), abs(f1))
    stagnant = 0
    use_muller = False
    E, rel = (x1, r1) if r1 <= r0 else (x0, r0)
    iterations = 0
    while rel >= config.eig_tol:
        if iterations >= config.max_iter:
            raise ConvergenceError(
                f"no convergence from guess {guess} after {config.max_iter} iterations (last E = {E})"
            )
        iterations += 1
        (xa, fa), (xb, fb) = history[-2], history[-1]
        if use_muller and len(history) >= 3:
            xc, fc = history[-3]
            E = _muller_step(xc, xa, xb, fc, fa, fb)
        elif fb != fa:
            E = xb - fb * (xb - xa) / (fb - fa)
        else:
            E = xb + 1e-6 * (1 + abs(xb))
        fe, rel = f(E)
        history.append((E, fe))
        if abs(fe) < best:
            best = abs(fe)
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= STAGNATION_LIMIT and not use_muller:
                logger.debug("secant stagnated at E = %s; switching to Muller", E)
                use_muller = True
        if abs(E - xb) <= 1e-15 * max(1.0, abs(E)):
            break
    for r in roots:
        if abs(E - r) < DEDUPE_TOL * max(1.0, abs(r)):
            raise DuplicateEigenvalueError(E)
    values = _normalize(_assemble(shooter, E), V.grid)
    psi = ComplexField(V.grid, values)
    res = residual_norm(V, E, psi)
    rate = float("-inf") if bc.confined else l2_integrability(psi).tail_decay_rate
    return EigenResult(E, psi, res, rate, iterations)


def scan_spectrum(
    V: ComplexField,
    guesses,
    bc: BoundarySpec | None = None,
    config: ShootingConfig | None = None,
) -> list[EigenResult]:
    """Run ``find_eigenvalue`` from each guess with deflation of earlier roots.

    Failed guesses are logged and omitted. Results are sorted by (Re E, Im E)
    and deduplicated within 1e-6.
    """
    guesses = list(guesses)
    if not guesses:
        raise PreconditionError("scan_spectrum needs at least one guess")
    config = config or ShootingConfig()
    found: list[EigenResult] = []
    for g in guesses:
        cfg = ShootingConfig(
            match_x=config.match_x,
            max_iter=config.max_iter,
            eig_tol=config.eig_tol,
            deflation=config.deflation + tuple(r.energy for r in found),
        )
        try:
            found.append(find_eigenvalue(V, g, bc, cfg))
        except (ConvergenceError, IntegrationOverflowError, PreconditionError) as exc:
            logger.warning("guess %s omitted: %s", g, exc)
    found.sort(key=lambda r: (r.energy.real, r.energy.imag))
    unique: list[EigenResult] = []
    for r in found:
        if not any(abs(r.energy - u.energy) < DEDUPE_TOL for u in unique):
            unique.append(r)
    return unique


def residual_norm(V: ComplexField, E: complex, psi: ComplexField) -> float:
    """Sup-norm of ``-psi'' + V psi - E psi`` over interior points."""
    require_same_grid(V, psi)
    r = -second_derivative(psi) + (V.values[1:-1] - complex(E)) * psi.values[1:-1]
    return float(np.max(np.abs(r))) if len(r) else 0.0


def _tail_rate(u: np.ndarray, a: np.ndarray) -> float:
    """Fitted slope of log|psi|^2 against outward distance ``u`` (``u`` increasing)."""
    nz = a > 0
    if not np.any(nz):
        return float("-inf")
    interior = (a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:])
    peaks = np.where(interior)[0] + 1
    idx = peaks if len(peaks) >= 2 else np.where(nz)[0]
    if len(idx) < 2:
        return float("-inf")
    idx = idx[a[idx] > 0]
    slope = np.polyfit(u[idx], np.log(a[idx] ** 2), 1)[0]
    return float(slope)


def l2_integrability(
    psi: ComplexField, rate_tol: float = 0.05, tail_fraction: float = 0.2
) -> Integrability:
    """Least-squares decay rate of log|psi|^2 on both outer tails.

    When a tail oscillates, only its local maxima enter the fit, so that nodes
    do not bias the slope. The reported rate is the slower (larger) of the two
    tails; identically zero tails give ``-inf``.
    """
    n = psi.grid.n_points
    m = max(3, int(round(tail_fraction * n)))
    if 2 * m > n:
        raise PreconditionError("grid too short to define tails")
    x, a = psi.x, psi.abs()
    left = _tail_rate(-x[:m][::-1], a[:m][::-1])
    right = _tail_rate(x[-m:], a[-m:])
    rate = max(left, right)
    return Integrability(bool(rate < -rate_tol), rate)


def biortho_matrix(states) -> BiorthoReport:
    """Gram matrix of the bilinear (unconjugated) product after unit normalization."""
    fields = [s.field if isinstance(s, EigenResult) else s for s in states]
    if not fields:
        raise PreconditionError("biortho_matrix needs at least one state")
    require_same_grid(*fields)
    kept, excluded = [], []
    for i, f in enumerate(fields):
        s = bilinear_form(f, f)
        if abs(s) < SELF_PRODUCT_TOL:
            logger.warning("state %d is self-orthogonal and is excluded", i)
            excluded.append(i)
            continue
        kept.append(f * (1.0 / np.sqrt(s)))
    k = len(kept)
    gram = np.empty((k, k), dtype=np.complex128)
    for i in range(k):
        for j in range(i, k):
            gram[i, j] = gram[j, i] = bilinear_form(kept[i], kept[j])
    off = gram - np.diag(np.diag(gram))
    return BiorthoReport(gram, float(np.max(np.abs(off))) if k > 1 else 0.0, tuple(excluded))


def spectrum_to_json(results, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = [r.to_dict() for r in results]
    path.write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n")
    return path
