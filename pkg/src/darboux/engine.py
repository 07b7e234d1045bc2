"""One- and two-step Darboux (SUSY) transformations with complex factorization energies.

Notation: ``E0`` is the factorization energy of the seed ``psi0``; the two-step
shift moves it to ``Ebar = E0 + i*gamma`` using ``psi0_tilde``, the counterpart
solution at ``Ebar``. ``theta = psi0' psi0_tilde - psi0 psi0_tilde'``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import systems
from .exceptions import NodeError, PreconditionError, SingularThetaError
from .field import (
    ComplexField,
    GridSpec,
    bilinear_form,
    cumulative_integral,
    derivative,
    require_same_grid,
    write_field_csv,
)

logger = logging.getLogger(__name__)

NODE_TOL = 1e-8
THETA_TOL = 1e-6


@dataclass(frozen=True)
class FactorizationSeed:
    """A solution ``field`` of the seed system at ``energy``.

    ``deriv`` holds psi' when it is known analytically or from the integrator;
    when absent, numerical differentiation is used.
    """

    energy: complex
    field: ComplexField
    deriv: ComplexField | None = None
    source: str = ""
    x_ref: float | None = None

    def derivative(self) -> ComplexField:
        return self.deriv if self.deriv is not None else derivative(self.field)

    @property
    def grid(self) -> GridSpec:
        return self.field.grid


@dataclass(frozen=True)
class ShiftRequest:
    base_energy: complex
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "base_energy", complex(self.base_energy))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def target(self) -> complex:
        return self.base_energy + 1j * self.gamma


@dataclass(frozen=True)
class SingularityReport:
    min_abs_theta: float
    argmin_x: float
    passed: bool
    tolerance: float


@dataclass(frozen=True)
class OneStepResult:
    W: ComplexField
    V1: ComplexField
    seed: FactorizationSeed

    @property
    def created_state(self) -> ComplexField:
        """``1 / psi0``, a solution of the V1 equation at the factorization energy."""
        return 1.0 / self.seed.field


@dataclass(frozen=True)
class TwoStepResult:
    """Output of a two-step transform.

    ``request`` is set for imaginary shifts; ``target`` always holds the new
    energy of the moved level.
    """

    V2: ComplexField
    theta: ComplexField
    psi_shifted: ComplexField
    W_tilde: ComplexField | None
    min_abs_theta: float
    request: ShiftRequest | None
    target: complex
    V0: ComplexField
    psi0: FactorizationSeed
    psi0_tilde: FactorizationSeed
    report: SingularityReport
    extras: dict = field(default_factory=dict)

    @property
    def delta_V(self) -> ComplexField:
        return self.V2 - self.V0

    @property
    def x_ref(self) -> float:
        return self.psi0_tilde.x_ref

    def spectral_weights(self) -> dict:
        """Norms of the shifted state: bilinear self-product and squared L2 norm.

        Reported only; nothing is asserted about how they relate to the seed's.
        """
        p = self.psi_shifted
        return {
            "bilinear": bilinear_form(p, p),
            "l2": bilinear_form(p, p.conj()).real,
        }

    def to_json(self, out_dir, stem: str = "") -> Path:
        """Write V2, theta, psi_shifted as CSV plus a JSON index; return the JSON path."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        names = {
            "v2": f"{stem}v2.csv",
            "theta": f"{stem}theta.csv",
            "psi_shifted": f"{stem}psi_shifted.csv",
        }
        write_field_csv(self.V2, out_dir / names["v2"])
        write_field_csv(self.theta, out_dir / names["theta"])
        write_field_csv(self.psi_shifted, out_dir / names["psi_shifted"])
        base = self.psi0.energy
        doc = {
            "request": {
                "e_re": base.real,
                "e_im": base.imag,
                "gamma": (self.target - base).imag,
            },
            "min_abs_theta": self.min_abs_theta,
            "files": names,
        }
        path = out_dir / f"{stem}result.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path


def _check_nodes(seed: FactorizationSeed, node_tol: float = NODE_TOL):
    """Reject seeds with a zero on the grid or between two samples.

    A sample counts as a node when ``|psi| <= node_tol * max|psi|``; a zero
    inside a cell shows up as consecutive samples pointing in opposite
    directions of the complex plane.
    """
    v = seed.field.values
    a = np.abs(v)
    bad = np.where(a <= node_tol * a.max())[0]
    flips = np.where(np.real(v[:-1] * np.conj(v[1:])) < 0)[0]
    hits = np.concatenate([bad, flips])
    if len(hits):
        raise NodeError(seed.field.x[int(hits.min())])


def superpotential(seed: FactorizationSeed, node_tol: float = NODE_TOL) -> ComplexField:
    """Logarithmic derivative ``W = psi0' / psi0``."""
    _check_nodes(seed, node_tol)
    return seed.derivative() / seed.field


def one_step(V0: ComplexField, seed: FactorizationSeed, node_tol: float = NODE_TOL) -> OneStepResult:
    """Partner potential ``V1 = V0 - 2 W'``.

    With a derivative-carrying seed, ``W'`` is taken from the Riccati identity
    ``W' = V0 - E0 - W^2``, which is exact for an exact seed.
    """
    require_same_grid(V0, seed.field)
    W = superpotential(seed, node_tol)
    if seed.deriv is not None:
        dW = V0 - seed.energy - W * W
    else:
        dW = derivative(W)
    return OneStepResult(W=W, V1=V0 - 2.0 * dW, seed=seed)


def inverse_seed(seed: FactorizationSeed) -> FactorizationSeed:
    """``1 / psi0`` at the same energy: the seed that undoes a one-step transform."""
    inv = 1.0 / seed.field
    deriv = None if seed.deriv is None else -seed.deriv / (seed.field * seed.field)
    return FactorizationSeed(seed.energy, inv, deriv, source=f"1/({seed.source})")


def map_solution_one_step(
    seed: FactorizationSeed,
    psi_E: ComplexField,
    E: complex,
    dpsi_E: ComplexField | None = None,
    node_tol: float = NODE_TOL,
) -> ComplexField:
    """``psi1 = (-d/dx + W) psi_E = theta_E / psi0``: a V1 solution at ``E``."""
    require_same_grid(seed.field, psi_E)
    _check_nodes(seed, node_tol)
    dpsi_E = dpsi_E if dpsi_E is not None else derivative(psi_E)
    theta_E = seed.derivative() * psi_E - seed.field * dpsi_E
    return theta_E / seed.field


def check_nonsingular(theta: ComplexField, tolerance: float | None = None) -> SingularityReport:
    """Certify that ``theta`` stays away from zero on the whole grid.

    Default tolerance is ``1e-6 * max|theta|``.
    """
    a = theta.abs()
    if not np.all(np.isfinite(a)):
        bad = int(np.argmax(~np.isfinite(a)))
        tol = THETA_TOL if tolerance is None else tolerance
        return SingularityReport(float("nan"), float(theta.x[bad]), False, float(tol))
    if tolerance is None:
        tolerance = THETA_TOL * float(a.max())
    i = int(np.argmin(a))
    return SingularityReport(float(a[i]), float(theta.x[i]), bool(a[i] > tolerance), float(tolerance))


def _theta(psi0: FactorizationSeed, tilde: FactorizationSeed) -> ComplexField:
    return psi0.derivative() * tilde.field - psi0.field * tilde.derivative()


def two_step(
    V0: ComplexField,
    psi0: FactorizationSeed,
    psi0_tilde: FactorizationSeed,
    theta_tol: float | None = None,
    request: ShiftRequest | None = None,
) -> TwoStepResult:
    """Move the level ``psi0.energy`` to ``psi0_tilde.energy`` (any complex target).

    ``V2 = V0 - 2 (Ebar - E0) d/dx[psi0 psi0_tilde / theta]``. The derivative is
    expanded with ``theta' = (Ebar - E0) psi0 psi0_tilde`` so that only psi and
    psi' of the seeds enter. The default ``theta_tol`` is relative to |theta|
    at the counterpart reference point, where theta is 1 by construction.
    """
    require_same_grid(V0, psi0.field, psi0_tilde.field)
    delta = complex(psi0_tilde.energy) - complex(psi0.energy)
    theta = _theta(psi0, psi0_tilde)
    if theta_tol is None:
        if psi0_tilde.x_ref is not None:
            theta_tol = THETA_TOL * abs(theta.values[theta.grid.index_of(psi0_tilde.x_ref)])
        else:
            theta_tol = THETA_TOL * theta.sup()
    report = check_nonsingular(theta, theta_tol)
    if delta == 0:
        V2 = ComplexField(V0.grid, V0.values.copy())
    else:
        if not report.passed:
            raise SingularThetaError(report)
        p, dp = psi0.field, psi0.derivative()
        t, dt = psi0_tilde.field, psi0_tilde.derivative()
        ratio = p * t / theta
        d_ratio = (dp * t + p * dt) / theta - delta * ratio * ratio
        V2 = V0 - 2.0 * delta * d_ratio
    psi_shifted = psi0.field / theta
    W_tilde = None
    a0 = psi0.field.abs()
    if np.all(a0 > NODE_TOL * a0.max()):
        W_tilde = -psi0.derivative() / psi0.field + delta * psi0.field * psi0_tilde.field / theta
    return TwoStepResult(
        V2=V2,
        theta=theta,
        psi_shifted=psi_shifted,
        W_tilde=W_tilde,
        min_abs_theta=report.min_abs_theta,
        request=request,
        target=complex(psi0_tilde.energy),
        V0=V0,
        psi0=psi0,
        psi0_tilde=psi0_tilde,
        report=report,
    )


def two_step_shift(
    V0: ComplexField,
    psi0: FactorizationSeed,
    psi0_tilde: FactorizationSeed,
    request: ShiftRequest,
    theta_tol: float | None = None,
) -> TwoStepResult:
    """Shift the level ``request.base_energy`` by ``i * request.gamma``.

    ``gamma == 0`` returns V2 identical to V0.
    """
    scale = max(1.0, abs(request.base_energy))
    if abs(complex(psi0.energy) - request.base_energy) > 1e-12 * scale:
        raise PreconditionError(
            f"seed energy {psi0.energy} does not match base energy {request.base_energy}"
        )
    if abs(complex(psi0_tilde.energy) - request.target) > 1e-12 * scale:
        raise PreconditionError(
            f"counterpart energy {psi0_tilde.energy} does not match target {request.target}"
        )
    return two_step(V0, psi0, psi0_tilde, theta_tol=theta_tol, request=request)


def map_solution_two_step(
    result: TwoStepResult,
    psi0: FactorizationSeed,
    psi_E: ComplexField,
    E: complex,
    dpsi_E: ComplexField | None = None,
) -> ComplexField:
    """Carry a V0 solution at ``E`` over to a V2 solution at ``E``.

    ``psi2 = psi_E - (Ebar - E0) psi0_tilde * I / theta`` with
    ``I(x) = theta_E(x) / (E - E0)``, evaluated as the cumulative integral of
    ``psi0 psi_E`` from the reference point plus the Wronskian value there.
    """
    E = complex(E)
    E0 = complex(psi0.energy)
    if E == E0:
        raise PreconditionError("E equals the factorization energy; use result.psi_shifted")
    require_same_grid(result.V2, psi0.field, psi_E)
    if not result.report.passed:
        raise SingularThetaError(result.report)
    grid = psi_E.grid
    x_ref = result.x_ref if result.x_ref is not None else 0.5 * (grid.x_min + grid.x_max)
    i_ref = grid.index_of(x_ref)
    dpsi_E = dpsi_E if dpsi_E is not None else derivative(psi_E)
    dpsi0 = psi0.derivative()
    theta_ref = dpsi0.values[i_ref] * psi_E.values[i_ref] - psi0.field.values[i_ref] * dpsi_E.values[i_ref]
    integral = cumulative_integral(psi0.field * psi_E, float(grid.x[i_ref])) + theta_ref / (E - E0)
    delta = result.target - E0
    return psi_E - delta * result.psi0_tilde.field * integral / result.theta


def principal_seed(spec, energy: complex, grid: GridSpec | None = None) -> FactorizationSeed:
    psi, dpsi = systems.principal_solution(spec, energy, grid)
    return FactorizationSeed(complex(energy), psi, dpsi, source=f"{spec}: principal")


def counterpart_seed(
    spec,
    seed: FactorizationSeed,
    energy: complex,
    x_ref: float | None = None,
) -> FactorizationSeed:
    """Counterpart of ``seed`` continued to ``energy``: zero at ``x_ref``, theta = 1 there."""
    psi, dpsi, x_ref = systems.counterpart_solution(
        spec, energy, seed.grid, x_ref=x_ref, principal=seed.field
    )
    return FactorizationSeed(complex(energy), psi, dpsi, source=f"{spec}: counterpart", x_ref=x_ref)


def superposition_seed(spec, energy: complex, grid: GridSpec | None = None) -> FactorizationSeed:
    psi, dpsi = systems.superposition_solution(spec, energy, grid)
    return FactorizationSeed(complex(energy), psi, dpsi, source=f"{spec}: superposition")


def shift_level(
    spec,
    level_energy: float,
    gamma: float,
    grid: GridSpec | None = None,
    x_ref: float | None = None,
    theta_tol: float | None = None,
) -> TwoStepResult:
    """Imaginary shift of one analytic level of ``spec``."""
    grid = grid or spec.default_grid()
    V0 = systems.potential_field(spec, grid)
    request = ShiftRequest(level_energy, gamma)
    psi0 = principal_seed(spec, request.base_energy, grid)
    tilde = counterpart_seed(spec, psi0, request.target, x_ref=x_ref)
    return two_step_shift(V0, psi0, tilde, request, theta_tol=theta_tol)


def move_level(
    spec,
    level_energy: float,
    target: complex,
    grid: GridSpec | None = None,
    x_ref: float | None = None,
) -> TwoStepResult:
    """Two-step move of an analytic level to an arbitrary (possibly real) energy."""
    grid = grid or spec.default_grid()
    V0 = systems.potential_field(spec, grid)
    psi0 = principal_seed(spec, level_energy, grid)
    tilde = counterpart_seed(spec, psi0, target, x_ref=x_ref)
    return two_step(V0, psi0, tilde)


def aux_level_shift(
    spec: systems.InfiniteWell,
    aux_index: int,
    gamma: float,
    grid: GridSpec | None = None,
    theta_tol: float | None = None,
) -> TwoStepResult:
    """Complex shift of a level of the auxiliary mixed-boundary spectrum.

    The auxiliary problem has psi' = 0 at x = 0 and psi = 0 at the far wall,
    with levels ((n - 1/2) pi / width)^2. The counterpart is anchored at
    x = 0, so both it and every Dirichlet eigenfunction vanish there; the
    physical Dirichlet spectrum of V2 then equals that of the empty well.
    Equivalently, the well is the right half of a symmetric well of width
    ``2 * width`` and the auxiliary levels are that well's even levels.
    """
    if not isinstance(spec, systems.InfiniteWell):
        raise PreconditionError("aux_level_shift needs an InfiniteWell")
    if aux_index < 1:
        raise PreconditionError("aux_index is 1-based")
    if gamma == 0:
        raise PreconditionError("gamma = 0 is the identity transformation")
    grid = grid or spec.default_grid()
    V0 = systems.potential_field(spec, grid)
    k = (aux_index - 0.5) * np.pi / spec.width
    x = grid.x
    psi0 = FactorizationSeed(
        complex(k * k),
        ComplexField(grid, np.cos(k * x)),
        ComplexField(grid, -k * np.sin(k * x)),
        source=f"{spec}: auxiliary level {aux_index}",
    )
    request = ShiftRequest(k * k, gamma)
    tilde = counterpart_seed(spec, psi0, request.target, x_ref=grid.x_min)
    result = two_step_shift(V0, psi0, tilde, request, theta_tol=theta_tol)
    result.extras.update(
        aux_index=aux_index,
        aux_energy=k * k,
        symmetric_well_width=2.0 * spec.width,
    )
    return result
