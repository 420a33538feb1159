import os
import subprocess
import sys

import numpy as np
import pytest

from warpgeo import _kernels_py, kernels
from warpgeo.families import ellipsoid, round_sphere
from warpgeo.geodesic import ray_fan, round_distance

compiled = pytest.importorskip("warpgeo._kernels", reason="compiled extension not built")


def _args(p, s1=0.8, rays=48, levels=(0.3, 1.0, 2.0)):
    t = p.geodesic_table
    return (t.f, t.fp, t.fpp, t.hs, t.D, s1, np.linspace(0.05, np.pi - 0.05, rays), np.array(levels),
            1.01 * p.D, 1e-9, 0.05)


@pytest.mark.parametrize("make", [lambda: round_sphere(3), lambda: ellipsoid(3, 1.0, 1.5)])
def test_backends_agree(make):
    p = make()
    a = _kernels_py.shoot_fan(*_args(p))
    b = compiled.shoot_fan(*_args(p))
    for x, y in zip(a[:2], b[:2]):
        assert np.array_equal(np.isfinite(x), np.isfinite(y))
        ok = np.isfinite(x)
        assert np.max(np.abs(x[ok] - y[ok])) < 1e-9
    assert np.allclose(a[2], b[2], atol=1e-12)


def test_crossings_on_round_sphere_match_closed_form():
    p = round_sphere(3)
    sc, tc, drift, *_ = kernels.shoot_fan(*_args(p))
    ok = np.isfinite(sc)
    lev = np.broadcast_to(np.array([0.3, 1.0, 2.0]), sc.shape)
    want = round_distance(1.0, 0.8, sc[ok], lev[ok])
    # the shot is a minimising great-circle arc whenever it is shorter than pi
    short = tc[ok] < np.pi - 1e-6
    assert np.max(np.abs(tc[ok][short] - want[short])) < 1e-7
    assert float(np.max(drift)) < 1e-9


def test_fan_min_length_backends_agree():
    rng = np.random.default_rng(3)
    sc = np.sort(rng.uniform(0, 3, size=(40, 4)), axis=0)
    tc = rng.uniform(0, 3, size=(40, 4))
    sc[5, 1] = np.nan
    targets = np.linspace(0.1, 2.9, 17)
    a = _kernels_py.fan_min_length(sc, tc, targets)
    b = compiled.fan_min_length(sc, tc, targets)
    assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_table_eval_reproduces_nodes():
    p = ellipsoid(3, 1.0, 1.5)
    t = p.geodesic_table
    s = np.linspace(0, p.D, t.f.size)
    f, fp = kernels.table_eval(t.f, t.fp, t.fpp, t.hs, t.D, s)
    assert np.allclose(f, t.f, atol=1e-14) and np.allclose(fp, t.fp, atol=1e-14)


def test_pure_fallback_selected_by_environment():
    env = dict(os.environ, WARPGEO_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import warpgeo.kernels as k; print(k.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND == "cython"
