import numpy as np
import pytest
from scipy.sparse import diags
from scipy.sparse.linalg import eigs

from darboux import engine, systems
from darboux.field import ComplexField, GridSpec

_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = dict(item.user_properties).get("detail", "")
        _ACCEPTANCE.append((marker.kwargs["criterion"], marker.kwargs["title"], rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for n, title, passed, detail in sorted(_ACCEPTANCE):
        tr.write_line(f"{'PASS' if passed else 'FAIL'}  {n:2d}. {title}  {detail}")


@pytest.fixture(scope="session")
def soliton():
    return systems.SolitonWell()


@pytest.fixture(scope="session")
def well():
    return systems.InfiniteWell()


@pytest.fixture(scope="session")
def soliton_shift(soliton):
    """Soliton ground level -1 shifted to -1 - i on the default grid."""
    return engine.shift_level(soliton, -1.0, -1.0)


@pytest.fixture(scope="session")
def well_shift_1(well):
    return engine.shift_level(well, 1.0, -1.0)


@pytest.fixture(scope="session")
def well_shift_2(well):
    return engine.shift_level(well, 4.0, -1.0)


def field_of(grid: GridSpec, func) -> ComplexField:
    return ComplexField(grid, func(grid.x))


def soliton_closed_form(x, gamma):
    """Two-step image of the soliton for -1 -> -1 + i gamma: -2 k^2 sech^2(k x), k^2 = 1 - i gamma."""
    k = np.sqrt(1 - 1j * gamma + 0j)
    return -2 * k**2 / np.cosh(k * x) ** 2


def fd_dirichlet_spectrum(V, k=6, sigma=5.2):
    """Eigenvalues of the three-point Dirichlet matrix of -d^2/dx^2 + V nearest ``sigma``."""
    h = V.grid.h
    v = V.values[1:-1]
    off = np.full(len(v) - 1, -1 / h**2)
    A = diags([off, 2 / h**2 + v, off], [-1, 0, 1], format="csc")
    w = eigs(A, k=k, sigma=sigma, return_eigenvectors=False)
    return np.array(sorted(w, key=lambda z: (round(z.real, 6), z.imag)))


def richardson_spectrum(build, n=2001, **kw):
    """O(h^4) spectrum from FD spectra on ``n`` and ``2n - 1`` points; ``build(grid)`` returns V."""
    coarse = fd_dirichlet_spectrum(build(GridSpec(0, np.pi, n)), **kw)
    fine = fd_dirichlet_spectrum(build(GridSpec(0, np.pi, 2 * n - 1)), **kw)
    return (4 * fine - coarse) / 3
