import cmath
import json
import math

import numpy as np
import pytest

from darboux import engine, scattering, solver, systems
from darboux.exceptions import (
    ConvergenceError,
    DuplicateEigenvalueError,
    IntegrationOverflowError,
    PreconditionError,
)
from darboux.field import ComplexField, GridSpec
from darboux.solver import BoundarySpec, ShootingConfig, SideCondition

from .conftest import field_of

DIRICHLET = BoundarySpec.dirichlet()


def zero(grid):
    return ComplexField(grid, np.zeros(grid.n_points))


class TestIntegrate:
    def test_sine_fourth_order(self):
        errs = []
        for n in (501, 1001):
            g = GridSpec(0, 10, n)
            psi = solver.integrate_schrodinger(zero(g), 1.0, (0, 1))
            errs.append(np.max(np.abs(psi.values - np.sin(g.x))))
        assert errs[1] < 10 * (10 / 1000) ** 4
        assert 13 < errs[0] / errs[1] < 19

    def test_complex_exponential(self):
        g = GridSpec(0, 5, 1001)
        r = cmath.sqrt(1j)
        psi = solver.integrate_schrodinger(zero(g), 1j, (1, 1j * r))
        exact = np.exp(1j * r * g.x)
        assert np.max(np.abs(psi.values - exact)) < 1e-9 * np.max(np.abs(exact))

    def test_right_to_left(self):
        g = GridSpec(0, 10, 1001)
        psi, dpsi = solver.integrate_schrodinger(
            zero(g), 1.0, (math.sin(10), math.cos(10)), "right-to-left", with_derivative=True
        )
        assert np.max(np.abs(psi.values - np.sin(g.x))) < 1e-8
        assert np.max(np.abs(dpsi.values - np.cos(g.x))) < 1e-8

    def test_coupled_form_agrees(self, soliton_shift):
        V = soliton_shift.V2
        a = solver.integrate_schrodinger(V, -1 - 1j, (1, 1))
        b = solver.integrate_schrodinger(V, -1 - 1j, (1, 1), coupled=True)
        assert np.max(np.abs(a.values - b.values)) <= 1e-12 * np.max(np.abs(a.values))

    def test_overflow_flagged(self):
        g = GridSpec(0, 800, 8001)
        V = ComplexField(g, np.full(g.n_points, 1.0))
        with pytest.raises(IntegrationOverflowError) as info:
            solver.integrate_schrodinger(V, 0.0, (1, 1))
        assert 0 < info.value.x < 800

    def test_bad_inputs(self):
        g = GridSpec(0, 1, 11)
        with pytest.raises(PreconditionError):
            solver.integrate_schrodinger(zero(g), 1.0, (np.nan, 1))
        with pytest.raises(PreconditionError):
            solver.integrate_schrodinger(zero(g), 1.0, (0, 1), direction="up")

    def test_flux_conserved_for_real_problem(self, soliton):
        V = systems.potential_field(soliton)
        psi, dpsi = solver.integrate_schrodinger(V, 0.7, (1, 0.3j), with_derivative=True)
        flux = scattering.probability_flux(psi, dpsi).values.real
        assert np.ptp(flux) < V.grid.h**2


class TestFindEigenvalue:
    def test_well_ground(self, well):
        r = solver.find_eigenvalue(systems.potential_field(well), 1.2, DIRICHLET)
        assert abs(r.energy - 1) < 1e-8
        assert r.tail_decay_rate == -np.inf

    def test_soliton_bound_state(self, soliton):
        r = solver.find_eigenvalue(systems.potential_field(soliton), -0.9 + 0.1j)
        assert abs(r.energy + 1) < 1e-8
        assert r.tail_decay_rate == pytest.approx(-2, abs=0.05)
        # oracle: sech(x) / sqrt(2), normalized to unit bilinear norm
        assert np.max(np.abs(r.field.values - np.sqrt(0.5) / np.cosh(r.field.x))) < 1e-5

    def test_shifted_soliton(self, soliton_shift):
        r = solver.find_eigenvalue(soliton_shift.V2, -1 - 0.9j)
        assert abs(r.energy - (-1 - 1j)) < 1e-6
        assert r.tail_decay_rate < -0.05
        assert r.residual < 10 * soliton_shift.V2.grid.h**2

    @pytest.mark.parametrize("spec", [systems.InfiniteWell(), systems.HarmonicOscillator(), systems.SolitonWell()])
    def test_every_base_system(self, spec):
        V = systems.potential_field(spec)
        bc = BoundarySpec.for_system(spec)
        for E in systems.analytic_levels(spec, 3):
            r = solver.find_eigenvalue(V, E + 0.1, bc)
            assert abs(r.energy - E) < 1e-8

    @pytest.mark.parametrize("match_x", [-1.0, 0.5, 2.0])
    def test_match_point_independence(self, soliton_shift, match_x):
        base = solver.find_eigenvalue(soliton_shift.V2, -1 - 0.9j).energy
        r = solver.find_eigenvalue(soliton_shift.V2, -1 - 0.9j, config=ShootingConfig(match_x=match_x))
        assert abs(r.energy - base) < 1e-8

    def test_duplicate_detected(self, well):
        V = systems.potential_field(well)
        with pytest.raises(DuplicateEigenvalueError):
            # a guess already on a deflated root is accepted by the mismatch test
            solver.find_eigenvalue(V, 1 + 1e-13, DIRICHLET, ShootingConfig(deflation=(1.0,)))

    def test_no_convergence(self, well):
        with pytest.raises(ConvergenceError):
            solver.find_eigenvalue(systems.potential_field(well), 2.5, DIRICHLET, ShootingConfig(max_iter=1))

    def test_decaying_branch_required(self, soliton):
        with pytest.raises(PreconditionError):
            solver.find_eigenvalue(systems.potential_field(soliton), 1.0)

    def test_config_validation(self):
        with pytest.raises(PreconditionError):
            ShootingConfig(eig_tol=0)
        with pytest.raises(PreconditionError):
            ShootingConfig(max_iter=0)

    def test_neumann_wall_gives_aux_levels(self, well):
        # psi' = 0 at x = 0, psi = 0 at pi: levels (n - 1/2)^2
        bc = BoundarySpec(SideCondition.given(1, 0), SideCondition.dirichlet())
        r = solver.find_eigenvalue(systems.potential_field(well), 0.3, bc)
        assert abs(r.energy - 0.25) < 1e-8


class TestScanSpectrum:
    def test_shifted_well(self, well_shift_1):
        found = solver.scan_spectrum(well_shift_1.V2, [1 - 0.5j, 4, 9, 16], DIRICHLET)
        want = [1 - 1j, 4, 9, 16]
        assert len(found) == 4
        for f, w in zip(found, want):
            assert abs(f.energy - w) < 1e-6

    def test_real_well(self, well):
        found = solver.scan_spectrum(systems.potential_field(well), [1, 4, 9], DIRICHLET)
        assert [round(f.energy.real) for f in found] == [1, 4, 9]
        assert all(abs(f.energy.imag) < 1e-9 for f in found)

    def test_duplicates_removed(self, well):
        found = solver.scan_spectrum(systems.potential_field(well), [1.1, 0.9, 4.1], DIRICHLET)
        assert [round(f.energy.real) for f in found] == [1, 4]

    def test_failures_omitted(self, soliton, caplog):
        found = solver.scan_spectrum(systems.potential_field(soliton), [-0.9, 1.0])
        assert len(found) == 1
        assert "omitted" in caplog.text

    def test_empty(self, well):
        with pytest.raises(PreconditionError):
            solver.scan_spectrum(systems.potential_field(well), [], DIRICHLET)

    def test_json(self, well, tmp_path):
        found = solver.scan_spectrum(systems.potential_field(well), [1, 4], DIRICHLET)
        doc = json.loads(solver.spectrum_to_json(found, tmp_path / "s.json").read_text())
        assert [set(d) for d in doc] == [{"re", "im", "residual", "tail_decay_rate", "iterations"}] * 2


class TestResidual:
    def test_exact_pair(self, well):
        [(E, psi)] = systems.eigen_pairs(well, 1)
        assert solver.residual_norm(systems.potential_field(well), E, psi) < psi.grid.h**2

    def test_noise_detected(self, well):
        [(E, psi)] = systems.eigen_pairs(well, 1)
        noisy = psi + ComplexField(psi.grid, 1e-3 * np.random.default_rng(0).standard_normal(psi.grid.n_points))
        assert solver.residual_norm(systems.potential_field(well), E, noisy) > 0.1

    def test_zero_field(self, well):
        g = well.default_grid()
        assert solver.residual_norm(zero(g), 1.0, zero(g)) == 0


class TestIntegrability:
    def test_sech(self):
        g = GridSpec(-15, 15, 3001)
        res = solver.l2_integrability(field_of(g, lambda x: 1 / np.cosh(x)))
        assert res.integrable
        assert res.tail_decay_rate == pytest.approx(-2, abs=0.01)

    def test_sine(self):
        g = GridSpec(-15, 15, 3001)
        res = solver.l2_integrability(field_of(g, np.sin))
        assert not res.integrable
        assert abs(res.tail_decay_rate) < 0.05

    def test_continuum_shift_state(self):
        r = scattering.continuum_shift_construct(1.0, -1.0, GridSpec(-30, 30, 6001))
        assert solver.l2_integrability(r.psi_shifted).integrable

    def test_zero_tail(self):
        g = GridSpec(0, 1, 101)
        res = solver.l2_integrability(zero(g))
        assert res.integrable and res.tail_decay_rate == -np.inf


class TestBiortho:
    def test_real_well(self, well):
        found = solver.scan_spectrum(systems.potential_field(well), [1, 4, 9], DIRICHLET)
        rep = solver.biortho_matrix(found)
        assert np.max(np.abs(rep.gram - np.eye(3))) < 1e-8

    def test_shifted_well(self, well_shift_1):
        found = solver.scan_spectrum(well_shift_1.V2, [1 - 0.5j, 4, 9], DIRICHLET)
        rep = solver.biortho_matrix(found)
        assert rep.max_offdiag < 1e-6
        assert np.max(np.abs(np.diag(rep.gram) - 1)) < 1e-8

    def test_single_state(self, well):
        rep = solver.biortho_matrix([solver.find_eigenvalue(systems.potential_field(well), 1.1, DIRICHLET)])
        assert rep.gram.shape == (1, 1) and rep.gram[0, 0] == pytest.approx(1)

    def test_self_orthogonal_excluded(self, caplog):
        g = GridSpec(0, 2 * np.pi, 2001)
        f = field_of(g, lambda x: np.exp(1j * x))  # integral of e^{2ix} over a period is 0
        rep = solver.biortho_matrix([f, field_of(g, lambda x: np.ones_like(x))])
        assert rep.excluded == (0,)
        assert rep.gram.shape == (1, 1)


def test_eigenresult_dict(soliton):
    r = solver.find_eigenvalue(systems.potential_field(soliton), -0.9)
    d = r.to_dict()
    assert d["re"] == pytest.approx(-1) and d["iterations"] == r.iterations


def test_created_level_in_one_step_potential(soliton):
    grid = soliton.default_grid()
    res = engine.one_step(systems.potential_field(soliton, grid), engine.principal_seed(soliton, -1 - 1j, grid))
    r = solver.find_eigenvalue(res.V1, -1 - 0.9j)
    assert abs(r.energy - (-1 - 1j)) < 1e-6
