import functools
import math

import numpy as np
import pytest

from warpgeo import families


@functools.lru_cache(maxsize=None)
def near_extremal(n, k):
    return families.near_extremal_family(n, k)


@functools.lru_cache(maxsize=None)
def ricci_capped(n, k):
    return families.ricci_capped_family(n, k)


@pytest.fixture(scope="session")
def round3():
    return families.round_sphere(3)


@pytest.fixture(scope="session")
def analytic_zoo():
    """Five distinct closed-form profiles."""
    return [
        families.round_sphere(3),
        families.scaled_round(4, 1.3),
        families.perturbed_round(3, 0.1),
        families.ellipsoid(3, 1.0, 1.5),
        families.capped_cylinder(3, 1.0, 1.0),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def fd_derivatives(f, s, h):
    """Central differences ``(f', f'')`` with step ``h``."""
    fp = (f(s + h) - f(s - h)) / (2 * h)
    fpp = (f(s + h) - 2 * f(s) + f(s - h)) / (h * h)
    return fp, fpp


PI = math.pi


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        status, title, detail = results[num]
        terminalreporter.write_line(f"{status} criterion {num:2d}: {title} {detail}".rstrip())
