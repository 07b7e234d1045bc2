"""End-to-end acceptance criteria, one test each.

Run ``pytest tests/test_acceptance.py`` to get a pass/fail line per criterion
in the terminal summary.
"""

import json
import math

import numpy as np
import pytest

from darboux import cli, engine, scattering, solver, systems
from darboux.field import ComplexField, GridSpec, derivative, second_derivative

LINE = GridSpec(-15, 15, 3001)
CONTINUUM = GridSpec(-30, 30, 6001)
BEATS = GridSpec(-200, 200, 20001)
PERIODIC = GridSpec(-15, 15, 15001)
DIRICHLET = solver.BoundarySpec.dirichlet()


def acceptance(n, title):
    return pytest.mark.acceptance(criterion=n, title=title)


def detail(record_property, text):
    record_property("detail", text)


def residual_over_h2(V, E, psi, window=None):
    """Interior three-point residual of the mapped equation, relative to max|psi|, over h^2."""
    r = -second_derivative(psi) + (V.values[1:-1] - E) * psi.values[1:-1]
    x, p = psi.x[1:-1], psi.values[1:-1]
    sel = np.ones(len(x), bool) if window is None else (np.abs(x) <= window)
    return float(np.max(np.abs(r[sel])) / np.max(np.abs(p[sel])) / psi.grid.h**2)


def soliton_jost(grid, E):
    """Jost solution (ik - tanh x) e^{ikx} of the unshifted soliton well, with its derivative."""
    k, x = math.sqrt(E), grid.x
    t = np.tanh(x)
    psi = (1j * k - t) * np.exp(1j * k * x)
    dpsi = (-(1 - t**2) + 1j * k * (1j * k - t)) * np.exp(1j * k * x)
    return ComplexField(grid, psi), ComplexField(grid, dpsi)


@acceptance(1, "eigenvalue-shift fidelity")
def test_01_eigenvalue_shift(record_property):
    r = engine.shift_level(systems.SolitonWell(), -1.0, -1.0, grid=LINE)
    E = solver.find_eigenvalue(r.V2, -1 - 0.9j).energy
    err = abs(E - (-1 - 1j))
    detail(record_property, f"E = {E:.10f}, |dE| = {err:.2e} (tol 1e-6)")
    assert err <= 1e-6


@acceptance(2, "isospectrality except the shifted level")
def test_02_isospectrality(record_property):
    w = systems.InfiniteWell()
    worst = {}
    for level in (1.0, 4.0):
        r = engine.shift_level(w, level, -1.0)
        others = [E for E in (1.0, 4.0, 9.0, 16.0) if E != level]
        found = [solver.find_eigenvalue(r.V2, E + 0.05, DIRICHLET).energy for E in others]
        im = max(abs(f.imag) for f in found)
        re = max(abs(f.real - E) for f, E in zip(found, others))
        shifted = solver.find_eigenvalue(r.V2, level - 0.5j, DIRICHLET).energy
        worst[level] = (im, re, abs(shifted - (level - 1j)))
        assert im <= 1e-6 and re <= 1e-6
        assert abs(shifted - (level - 1j)) <= 1e-6
    detail(
        record_property,
        "; ".join(f"E{int(k)}: max|Im| {a:.1e}, max|dRe| {b:.1e}, shifted err {c:.1e}" for k, (a, b, c) in worst.items()),
    )


@acceptance(3, "zero shift and continuity")
def test_03_zero_shift_and_continuity(record_property):
    out = []
    for spec in (systems.SolitonWell(), systems.InfiniteWell()):
        E0 = systems.analytic_levels(spec, 1)[0]
        r0 = engine.shift_level(spec, E0, 0.0)
        np.testing.assert_array_equal(r0.V2.values, r0.V0.values)
        for gamma in (1e-4, -1e-4):
            r = engine.shift_level(spec, E0, gamma)
            dev = r.delta_V.sup()
            out.append(f"{spec.name} G={gamma:+g}: {dev:.1e}")
            assert dev < 1e-3
    detail(record_property, "G=0 bit-exact; sup|V2-V0| " + ", ".join(out))


@acceptance(4, "conjugation symmetry")
def test_04_conjugation(record_property):
    devs = []
    for spec in (systems.SolitonWell(), systems.InfiniteWell()):
        E0 = systems.analytic_levels(spec, 1)[0]
        up, down = engine.shift_level(spec, E0, 1.0), engine.shift_level(spec, E0, -1.0)
        devs.append(float(np.max(np.abs(up.V2.values - np.conj(down.V2.values)))))
    detail(record_property, f"max dev {max(devs):.1e} (tol 1e-10)")
    assert max(devs) < 1e-10


# Documented constant: the identity holds exactly for the sampled theta, so the
# defect is the central-difference error (h^2 / 6) |theta'''|; observed C is
# 0.34 for the well and 0.21 for the soliton.
WRONSKIAN_C = 1.0


@acceptance(5, "Wronskian identity, second order")
def test_05_wronskian_identity(record_property):
    cases = {
        "soliton": (systems.SolitonWell(), -1.0, (GridSpec(-15, 15, 1501), GridSpec(-15, 15, 3001))),
        "well": (systems.InfiniteWell(), 1.0, (GridSpec(0, math.pi, 1001), GridSpec(0, math.pi, 2001))),
    }
    out = []
    for name, (spec, E0, grids) in cases.items():
        errs = []
        for g in grids:
            r = engine.shift_level(spec, E0, -1.0, grid=g)
            rhs = (r.target - r.psi0.energy) * r.psi0.field * r.psi0_tilde.field
            err = float(np.max(np.abs((derivative(r.theta) - rhs).values)))
            assert err <= WRONSKIAN_C * g.h**2
            errs.append(err)
        ratio = errs[0] / errs[1]
        out.append(f"{name}: C_obs {errs[1] / grids[1].h ** 2:.2f}, ratio {ratio:.3f}")
        assert 3.2 <= ratio <= 4.8
    detail(record_property, "; ".join(out) + f" (C = {WRONSKIAN_C})")


# Documented constants for the mapped-solution residuals (relative to max|psi|):
# - well, shifted 1 -> 1 - i, mapped eigenfunctions at 4, 9, 16 and the shifted
#   state at 1 - i: C = (1 + |E|)^2, observed 0.08-0.1 times that;
# - soliton, shifted -1 -> -1 - i, mapped Jost solutions at E = 0.5 and 2 on
#   |x| <= 10 and the shifted state at -1 - i: C = 5, observed 1.2-2.3.
# The soliton window excludes the outer tails, where the map subtracts a
# counterpart growing like e^{|x|} from an integral decaying like e^{-|x|}
# and quadrature rounding is amplified.
RESIDUAL_C_SOLITON = 5.0
SOLITON_WINDOW = 10.0


@acceptance(6, "mapped-solution residuals")
def test_06_mapped_residuals(record_property):
    w = systems.InfiniteWell()
    r = engine.shift_level(w, 1.0, -1.0)
    g = r.V2.grid
    worst_well = 0.0
    for E in (4.0, 9.0, 16.0):
        p, dp = systems.principal_solution(w, E, g)
        psi2 = engine.map_solution_two_step(r, r.psi0, p, E, dp)
        c = residual_over_h2(r.V2, E, psi2) / (1 + E) ** 2
        worst_well = max(worst_well, c)
        assert c <= 1.0, E
    c = residual_over_h2(r.V2, r.target, r.psi_shifted) / (1 + abs(r.target)) ** 2
    worst_well = max(worst_well, c)
    assert c <= 1.0

    s = engine.shift_level(systems.SolitonWell(), -1.0, -1.0, grid=LINE)
    worst_sol = 0.0
    for E in (0.5, 2.0):
        p, dp = soliton_jost(LINE, E)
        psi2 = engine.map_solution_two_step(s, s.psi0, p, E, dp)
        c = residual_over_h2(s.V2, E, psi2, SOLITON_WINDOW)
        worst_sol = max(worst_sol, c)
        assert c <= RESIDUAL_C_SOLITON, E
    c = residual_over_h2(s.V2, s.target, s.psi_shifted)
    worst_sol = max(worst_sol, c)
    assert c <= RESIDUAL_C_SOLITON
    detail(
        record_property,
        f"well max {worst_well:.3f} (C = (1+|E|)^2 scale 1); soliton max {worst_sol:.2f} (C = {RESIDUAL_C_SOLITON})",
    )


@acceptance(7, "quadratic integrability")
def test_07_integrability(record_property):
    bound = engine.shift_level(systems.SolitonWell(), -1.0, -1.0, grid=LINE)
    cont = scattering.continuum_shift_construct(1.0, -1.0, CONTINUUM)
    a = solver.l2_integrability(bound.psi_shifted)
    b = solver.l2_integrability(cont.psi_shifted)
    detail(record_property, f"soliton rate {a.tail_decay_rate:.3f}, continuum rate {b.tail_decay_rate:.3f}")
    assert a.integrable and a.tail_decay_rate < -0.05
    assert b.integrable and b.tail_decay_rate < -0.05


@acceptance(8, "reflectionless preservation with flux deficit")
def test_08_reflectionless(record_property):
    soliton = systems.SolitonWell()
    r = engine.shift_level(soliton, -1.0, -1.0, grid=LINE)
    V0 = systems.potential_field(soliton, LINE)
    energies = (0.5, 1.0, 2.0)
    shifted = [scattering.reflection_transmission(r.V2, E) for E in energies]
    base = scattering.flux_deficit_scan(V0, energies)
    max_R = max(abs(s.R) for s in shifted)
    max_dI = max(abs(s.delta_I) for s in shifted)
    base_dI = float(np.max(np.abs(base.delta_I)))
    detail(record_property, f"max|R| {max_R:.1e}, max|dI| shifted {max_dI:.3f}, unshifted {base_dI:.1e}")
    assert max_R < 1e-4
    assert max_dI > 1e-3
    assert base_dI < 1e-10


@acceptance(9, "periodic potential")
def test_09_periodic(record_property):
    spec = systems.FreeSuperposition(2.0)
    res = engine.one_step(systems.potential_field(spec, PERIODIC), engine.superposition_seed(spec, 0.5, PERIODIC))
    tol = 1e-4 * res.V1.sup()
    dev, ok = scattering.periodicity_check(res.V1, math.pi / math.sqrt(0.5))
    dev_bad, bad = scattering.periodicity_check(res.V1, 1.0)
    detail(record_property, f"dev at pi/sqrt(0.5) {dev:.1e} (tol {tol:.1e}); at 1.0 {dev_bad:.2f}")
    assert ok and dev < tol
    assert not bad


@acceptance(10, "POP growth and beats")
def test_10_pop_and_beats(record_property):
    fit = scattering.pop_envelope(scattering.continuum_shift_construct(1.0, -1.0, CONTINUUM).V2, 1.0)
    V2 = scattering.continuum_shift_construct(1.0, -1.0, BEATS).V2
    near, far = (scattering.beat_analysis(V2, E, 1.0) for E in (1.05, 1.2))
    detail(
        record_property,
        f"slope {fit.fit_slope:.4f}, r^2 {fit.r_squared:.5f}; beat length {near.beat_wavelength:.1f} (1.05) "
        f"> {far.beat_wavelength:.1f} (1.2)",
    )
    assert fit.fit_slope > 0 and fit.r_squared > 0.99
    assert near.resolved and far.resolved
    assert near.beat_wavelength > far.beat_wavelength


@acceptance(11, "biorthogonality")
def test_11_biorthogonality(record_property):
    r = engine.shift_level(systems.InfiniteWell(), 1.0, -1.0)
    found = solver.scan_spectrum(r.V2, [1 - 0.5j, 4, 9, 16], DIRICHLET)
    assert len(found) == 4
    rep = solver.biortho_matrix(found)
    detail(record_property, f"max off-diagonal {rep.max_offdiag:.1e} (tol 1e-6)")
    assert rep.excluded == ()
    assert rep.max_offdiag < 1e-6


@acceptance(12, "two-spectra preservation")
def test_12_two_spectra(record_property):
    r = engine.aux_level_shift(systems.InfiniteWell(), 1, 0.5)
    found = [solver.find_eigenvalue(r.V2, E + 0.05, DIRICHLET).energy for E in (1.0, 4.0, 9.0)]
    im = max(abs(E.imag) for E in found)
    re = max(abs(E.real - t) for E, t in zip(found, (1.0, 4.0, 9.0)))
    complexity = float(np.max(np.abs(r.V2.values.imag)))
    detail(record_property, f"max|Im E| {im:.1e}, max|dRe E| {re:.1e}, max|Im V2| {complexity:.3f}")
    assert complexity > 1e-3
    assert im <= 1e-6 and re <= 1e-6


@acceptance(13, "complex and coupled-real integration agree")
def test_13_solver_conformance(record_property):
    r = engine.shift_level(systems.SolitonWell(), -1.0, -1.0, grid=LINE)
    E = -1 - 1j
    a = solver.integrate_schrodinger(r.V2, E, (1, 1))
    b = solver.integrate_schrodinger(r.V2, E, (1, 1), coupled=True)
    rel = float(np.max(np.abs(a.values - b.values)) / np.max(np.abs(a.values)))
    detail(record_property, f"relative difference {rel:.1e} (tol 1e-12)")
    assert rel <= 1e-12


@acceptance(14, "end-to-end figure suite")
def test_14_figures(record_property, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    out = tmp_path / "figs"
    status = cli.main(["figures", "--out", str(out)])
    doc = json.loads((out / "report.json").read_text())
    svgs = sorted(p.name for p in out.glob("*.svg"))
    failed = [c["name"] for c in doc["checks"] if not c["passed"]]
    detail(record_property, f"exit {status}, {len(svgs)} plots, {len(doc['checks'])} checks, failed: {failed or 'none'}")
    assert status == 0
    assert svgs == sorted(f"fig{i}.svg" for i in range(1, 10))
    assert doc["checks"] and not failed and "error" not in doc
