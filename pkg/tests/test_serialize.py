import json

import numpy as np
import pytest

from warpgeo import families
from warpgeo.errors import ConfigError
from warpgeo.serialize import dumps, load_profile, profile_from_dict, profile_to_dict, save_profile


@pytest.mark.parametrize("p", [
    families.round_sphere(3),
    families.ellipsoid(4, 1.0, 1.7),
    families.capped_cylinder(3, 1.0, 1.0),
    families.near_extremal_family(3, 2),
], ids=lambda p: p.name)
def test_analytic_round_trip(tmp_path, p):
    path = tmp_path / "p.json"
    save_profile(p, path)
    q = load_profile(path)
    assert q.n == p.n and q.D == p.D
    s = np.linspace(0, p.D, 97)
    assert np.array_equal(q.f(s), p.f(s))


def test_sampled_round_trip(tmp_path):
    from warpgeo.profile import sampled_profile

    grid = np.linspace(0, np.pi, 65)
    p = sampled_profile(3, grid, np.sin(grid), np.cos(grid), -np.sin(grid))
    path = tmp_path / "s.json"
    save_profile(p, path)
    q = load_profile(path)
    assert q.kind == "sampled"
    s = np.linspace(0, np.pi, 101)
    assert np.array_equal(q.f(s), p.f(s))


def test_bad_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_profile(bad)
    with pytest.raises(ConfigError):
        profile_from_dict({"format": "other", "n": 3, "kind": "analytic"})
    with pytest.raises(ConfigError):
        profile_from_dict({"n": 3, "kind": "analytic", "analytic": {"name": "nope"}})
    d = profile_to_dict(families.round_sphere(3))
    d["D"] = 3.0
    with pytest.raises(ConfigError):
        profile_from_dict(d)
    with pytest.raises(ConfigError):
        profile_from_dict({"n": 3, "kind": "weird"})


def test_dumps_deterministic():
    obj = {"b": np.float64(1.5), "a": [np.int64(2), np.arange(3)], "c": float("inf")}
    t = dumps(obj)
    assert t == dumps(dict(reversed(list(obj.items()))))
    assert json.loads(t)["a"] == [2, [0, 1, 2]]
