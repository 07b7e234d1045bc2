"""Continuum analyses: flux, reflection/transmission, quasi-periodic shifts, POP and beats."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import simpson
from scipy.signal import find_peaks

from . import _ode, engine, systems
from .exceptions import DarbouxError, IntegrationOverflowError, PreconditionError
from .field import ComplexField, GridSpec, cumulative_integral, derivative

logger = logging.getLogger(__name__)

FLAT_TOL = 1e-6
FLAT_FRACTION = 0.1
WINDOW_FRACTION = 0.05
# |Delta I| below this is flux-conservation noise and never forms a peak.
PEAK_FLOOR = 1e-8
# RK4 flux drift per step scales like (k h)^6; sub-steps keep k*h below this.
MAX_PHASE_STEP = 0.005
MIN_EXTREMA = 5


@dataclass(frozen=True)
class ScatterResult:
    """Scattering of a unit wave incident from the left at real energy ``E``."""

    E: float
    k: float
    R: complex
    T: complex
    flux_in_left: float
    flux_out_left: float
    flux_out_right: float
    delta_I: float
    psi: ComplexField | None = field(default=None, repr=False, compare=False)

    @property
    def unitarity_defect(self) -> float:
        return abs(self.R) ** 2 + abs(self.T) ** 2 - 1.0


@dataclass(frozen=True)
class FluxScan:
    energies: np.ndarray
    delta_I: np.ndarray
    peak_energy: float | None = None

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["E", "delta_I"])
            for e, d in zip(self.energies, self.delta_I):
                w.writerow([f"{e:.17g}", f"{d:.17g}"])
        return path


@dataclass(frozen=True)
class EnvelopeFit:
    extrema_positions: np.ndarray
    extrema_amplitudes: np.ndarray
    fit_slope: float
    fit_intercept: float
    r_squared: float


@dataclass(frozen=True)
class BeatReport:
    E: float
    beat_wavelength: float
    n_beats_observed: int
    minima_positions: np.ndarray = field(default_factory=lambda: np.empty(0))
    resolved: bool = True


def probability_flux(psi: ComplexField, dpsi: ComplexField | None = None) -> ComplexField:
    """Current ``I = Im(conj(psi) psi')``, returned as a real-valued field."""
    dpsi = dpsi if dpsi is not None else derivative(psi)
    return ComplexField(psi.grid, np.imag(np.conj(psi.values) * dpsi.values))


def _check_flat(V: ComplexField):
    n = V.grid.n_points
    m = max(2, int(math.ceil(FLAT_FRACTION * n)))
    a = V.abs()
    if a[:m].max() >= FLAT_TOL or a[-m:].max() >= FLAT_TOL:
        raise PreconditionError(
            "potential is not asymptotically flat: |V| must stay below 1e-6 on the outer 10%"
        )


def _substeps(k: float, h: float) -> int:
    return max(1, int(math.ceil(k * h / MAX_PHASE_STEP)))


def reflection_transmission(V: ComplexField, E: float, substeps: int | None = None) -> ScatterResult:
    """Reflection and transmission amplitudes for a wave incident from the left.

    A pure outgoing wave ``exp(ikx)`` is integrated from the right end to the
    left end, where (psi, psi') are split into ``A exp(ikx) + B exp(-ikx)``.
    Then ``T = 1/A`` and ``R = B/A``. Fluxes come from the current averaged
    over the outer 5% windows. An identically zero potential is answered
    exactly, without integration.
    """
    E = float(E)
    if not E > 0:
        raise PreconditionError(f"scattering energy must be positive, got {E}")
    _check_flat(V)
    grid = V.grid
    k = math.sqrt(E)
    if not np.any(V.values):
        wave = np.exp(1j * k * grid.x)
        return ScatterResult(E, k, 0j, 1 + 0j, k, 0.0, k, 0.0, ComplexField(grid, wave))
    m = substeps or _substeps(k, grid.h)
    v_half = _ode.half_step_samples(V.values, m)[::-1]
    xr, xl = grid.x_max, grid.x_min
    ic = (np.exp(1j * k * xr), 1j * k * np.exp(1j * k * xr))
    try:
        psi, dpsi = _ode.sweep(v_half, E, -grid.h / m, *ic)
    except OverflowError:
        raise IntegrationOverflowError(xr) from None
    psi, dpsi = psi[::-1][::m], dpsi[::-1][::m]
    A = (dpsi[0] + 1j * k * psi[0]) / (2j * k) * np.exp(-1j * k * xl)
    B = (1j * k * psi[0] - dpsi[0]) / (2j * k) * np.exp(1j * k * xl)
    T, R = 1.0 / A, B / A
    psi_f = ComplexField(grid, psi / A)
    current = probability_flux(psi_f, ComplexField(grid, dpsi / A)).real
    w = max(1, int(math.ceil(WINDOW_FRACTION * grid.n_points)))
    i_left, i_right = float(current[:w].mean()), float(current[-w:].mean())
    return ScatterResult(
        E=E,
        k=k,
        R=complex(R),
        T=complex(T),
        flux_in_left=k,
        flux_out_left=k * abs(R) ** 2,
        flux_out_right=k * abs(T) ** 2,
        delta_I=i_right - i_left,
        psi=psi_f,
    )


def volume_delta_I(V: ComplexField, result: ScatterResult) -> float:
    """``Delta I`` from the divergence form ``dI/dx = Im(V) |psi|^2`` integrated over the grid."""
    dens = V.imag * np.abs(result.psi.values) ** 2
    return float(simpson(dens, dx=V.grid.h))


def flux_deficit_scan(V: ComplexField, energies) -> FluxScan:
    """Flux non-conservation ``Delta I(E)`` over a set of energies (sorted ascending).

    ``peak_energy`` is the location of the largest ``|Delta I|`` when it is an
    interior local maximum above the noise floor; otherwise it is None.
    """
    es = np.unique(np.asarray(list(energies), dtype=float))
    good_e, good_d = [], []
    for e in es:
        try:
            good_d.append(reflection_transmission(V, e).delta_I)
            good_e.append(e)
        except (DarbouxError, FloatingPointError) as exc:
            logger.warning("energy %g skipped: %s", e, exc)
    energies_arr = np.asarray(good_e)
    delta = np.asarray(good_d)
    peak = None
    if len(delta) >= 3:
        i = int(np.argmax(np.abs(delta)))
        a = np.abs(delta)
        if a[i] > PEAK_FLOOR and 0 < i < len(delta) - 1 and a[i] > a[i - 1] and a[i] >= a[i + 1]:
            peak = float(energies_arr[i])
    return FluxScan(energies_arr, delta, peak)


def scatter_results_to_csv(results, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["E", "re_R", "im_R", "re_T", "im_T", "flux_in", "flux_out_l", "flux_out_r"])
        for r in results:
            w.writerow(
                [
                    f"{v:.17g}"
                    for v in (
                        r.E,
                        r.R.real,
                        r.R.imag,
                        r.T.real,
                        r.T.imag,
                        r.flux_in_left,
                        r.flux_out_left,
                        r.flux_out_right,
                    )
                ]
            )
    return path


def continuum_shift_construct(
    e_cont: float, gamma: float, grid: GridSpec | None = None
) -> engine.TwoStepResult:
    """Shift the continuum energy ``e_cont`` of the free line to ``e_cont + i gamma``.

    The seed is ``sin(sqrt(e_cont) x)``; the resulting V2 is asymptotically
    periodic with period ``pi / sqrt(e_cont)`` and ``psi_shifted`` decays.
    """
    if not e_cont > 0:
        raise PreconditionError(f"continuum energy must be positive, got {e_cont}")
    return engine.shift_level(systems.FreeLine(), float(e_cont), float(gamma), grid)


def _local_maxima(a: np.ndarray) -> np.ndarray:
    """Indices of 3-point local maxima; a plateau counts once, at its leftmost point."""
    idx = []
    n = len(a)
    i = 1
    while i < n - 1:
        if a[i] > a[i - 1]:
            j = i
            while j < n - 1 and a[j + 1] == a[i]:
                j += 1
            if j < n - 1 and a[j + 1] < a[i]:
                idx.append(i)
            i = j + 1
        else:
            i += 1
    return np.asarray(idx, dtype=int)


def _refine_peaks(x: np.ndarray, a: np.ndarray, idx: np.ndarray):
    """Parabolic refinement of sampled maxima: (positions, amplitudes)."""
    y0, y1, y2 = a[idx - 1], a[idx], a[idx + 1]
    den = y0 - 2 * y1 + y2
    safe = np.where(den != 0, den, 1.0)
    off = np.where(den != 0, 0.5 * (y0 - y2) / safe, 0.0)
    h = x[1] - x[0]
    return x[idx] + off * h, y1 - 0.25 * (y0 - y2) * off


def pop_solution(V2: ComplexField, e_pop: float, x_start: float | None = None) -> ComplexField:
    """Solution at the POP energy with psi = 0, psi' = 1 at ``x_start``, to the right end.

    ``x_start`` defaults to the grid point nearest 0, or the midpoint.
    """
    grid = V2.grid
    if x_start is None:
        x_start = 0.0 if grid.x_min < 0 < grid.x_max else 0.5 * (grid.x_min + grid.x_max)
    tail = V2.restrict(grid.index_of(x_start), grid.n_points)
    return integrate_field(tail, float(e_pop), (0j, 1 + 0j))


def pop_envelope(V2: ComplexField, e_pop: float, x_start: float | None = None) -> EnvelopeFit:
    """Linear fit to the growing amplitude of the real-energy solution at the POP.

    The maxima of |psi| of :func:`pop_solution` are refined parabolically and
    fitted by a straight line in position.
    """
    psi = pop_solution(V2, e_pop, x_start)
    a = psi.abs()
    idx = _local_maxima(a)
    if len(idx) < MIN_EXTREMA:
        raise PreconditionError(f"only {len(idx)} maxima on the grid; at least {MIN_EXTREMA} needed")
    pos, amp = _refine_peaks(psi.x, a, idx)
    slope, intercept = np.polyfit(pos, amp, 1)
    pred = slope * pos + intercept
    ss_tot = float(np.sum((amp - amp.mean()) ** 2))
    r2 = 1.0 - float(np.sum((amp - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return EnvelopeFit(pos, amp, float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)))


def period_envelope(psi: ComplexField, period: float) -> tuple[np.ndarray, np.ndarray]:
    """RMS of |psi| over a sliding window of one ``period``: (x, envelope) where defined."""
    x = psi.x
    C = cumulative_integral(ComplexField(psi.grid, np.abs(psi.values) ** 2), psi.grid.x_min).real
    lo, hi = x - 0.5 * period, x + 0.5 * period
    ok = (lo >= x[0]) & (hi <= x[-1])
    env = np.sqrt(np.maximum(np.interp(hi[ok], x, C) - np.interp(lo[ok], x, C), 0.0) / period)
    return x[ok], env


def beat_analysis(V2: ComplexField, E: float, e_pop: float, prominence: float = 0.25) -> BeatReport:
    """Beat wavelength of the scattering-type solution at ``E`` near the POP.

    The wave ``exp(i sqrt(E) x)`` is launched at the left end. The envelope is
    the RMS of |psi| over one potential period, which removes the carrier; its
    minima are the beat nodes. Minima must be at least two periods apart and
    have a prominence of ``prominence`` times the envelope range.
    """
    E, e_pop = float(E), float(e_pop)
    if E == e_pop:
        raise PreconditionError("E equals the POP energy; use pop_envelope")
    if not (E > 0 and e_pop > 0):
        raise PreconditionError("energies must be positive")
    grid = V2.grid
    psi = beat_solution(V2, E)
    period = math.pi / math.sqrt(e_pop)
    xs, env = period_envelope(psi, period)
    dist = max(1, int(round(2 * period / grid.h)))
    span = float(env.max() - env.min()) if len(env) else 0.0
    mins, _ = find_peaks(-env, distance=dist, prominence=prominence * span if span > 0 else None)
    pos = xs[mins]
    if len(pos) < 2:
        logger.info("beats unresolved at E = %g: %d minima on the grid", E, len(pos))
        return BeatReport(E, float("nan"), len(pos), pos, resolved=False)
    return BeatReport(E, float(np.mean(np.diff(pos))), len(pos), pos, resolved=True)


def beat_solution(V2: ComplexField, E: float) -> ComplexField:
    """The wave ``exp(i sqrt(E) x)`` launched at the left end and integrated across."""
    k = math.sqrt(E)
    x0 = V2.grid.x_min
    return integrate_field(V2, E, (np.exp(1j * k * x0), 1j * k * np.exp(1j * k * x0)))


def integrate_field(V: ComplexField, E: complex, ic) -> ComplexField:
    """Left-to-right RK4 solution on the grid of ``V``."""
    try:
        psi, _ = _ode.sweep(_ode.half_step_samples(V.values), E, V.grid.h, *ic)
    except OverflowError as exc:
        raise IntegrationOverflowError(V.x[exc.args[0]]) from None
    return ComplexField(V.grid, psi)


def periodicity_check(
    V: ComplexField,
    period: float,
    rel_tol: float = 1e-4,
    region: tuple[float, float] | None = None,
) -> tuple[float, bool]:
    """Max of ``|V(x + period) - V(x)|`` with linear interpolation.

    Periodic when the deviation is at most ``rel_tol * max|V|`` (both over
    ``region`` when given). The region must span at least three periods.
    """
    grid = V.grid
    if not period > 2 * grid.h:
        raise PreconditionError(f"period {period} must exceed two grid steps ({2 * grid.h})")
    a, b = region if region is not None else (grid.x_min, grid.x_max)
    a, b = max(a, grid.x_min), min(b, grid.x_max)
    if b - a < 3 * period:
        raise PreconditionError("region must span at least three periods")
    x = V.x
    sel = (x >= a) & (x <= b - period)
    xs = x[sel]
    shifted = np.interp(xs + period, x, V.real) + 1j * np.interp(xs + period, x, V.imag)
    dev = float(np.max(np.abs(shifted - V.values[sel])))
    scale = float(np.max(np.abs(V.values[(x >= a) & (x <= b)])))
    return dev, bool(dev <= rel_tol * scale)
