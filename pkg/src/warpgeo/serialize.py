"""Profile file format.

A profile file is a JSON object::

    {"format": "warpgeo-profile", "version": 1, "n": 3, "D": 3.14159...,
     "kind": "analytic", "analytic": {"name": "ellipsoid", "params": {...}}}

or, for grid data, ``"kind": "sampled"`` with ``"grid"``, ``"f"`` and
optional ``"fp"``, ``"fpp"`` arrays.  Floats are written with ``repr``
precision, so a save/load cycle reproduces the profile bit for bit.
"""
from __future__ import annotations

import json
import os
from typing import Any

import numpy as np

from .errors import ConfigError
from .profile import MetricProfile, sampled_profile

FORMAT = "warpgeo-profile"
VERSION = 1


def _plain(x: Any):
    """JSON-friendly copy (numpy scalars and arrays become Python objects)."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return x


def profile_to_dict(p: MetricProfile) -> dict:
    out = {"format": FORMAT, "version": VERSION, "n": int(p.n), "D": float(p.D), "kind": p.kind}
    from .families import GENERATORS

    if p.kind == "analytic" and p.name in GENERATORS:
        out["analytic"] = {"name": p.name, "params": _plain(dict(p.params))}
        return out
    if p.samples is None:
        raise ConfigError(f"profile {p.name!r} has neither a known generator nor grid data")
    smp = p.samples
    out["kind"] = "sampled"
    out["name"] = p.name
    out["grid"] = smp.grid.tolist()
    out["f"] = smp.f.tolist()
    out["fp"] = None if smp.fp is None else smp.fp.tolist()
    out["fpp"] = None if smp.fpp is None else smp.fpp.tolist()
    return out


def profile_from_dict(d: dict) -> MetricProfile:
    if d.get("format", FORMAT) != FORMAT:
        raise ConfigError(f"not a profile file (format={d.get('format')!r})")
    try:
        n = int(d["n"])
        kind = d["kind"]
    except KeyError as exc:
        raise ConfigError(f"profile file lacks field {exc}") from None
    if kind == "analytic":
        from .families import generate

        spec = d.get("analytic") or {}
        try:
            p = generate(spec["name"], n, **spec.get("params", {}))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"cannot rebuild analytic profile: {exc}") from None
        if "D" in d and abs(p.D - float(d["D"])) > 1e-12 * max(1.0, p.D):
            raise ConfigError(f"stored D={d['D']} differs from regenerated D={p.D}")
        return p
    if kind == "sampled":
        return sampled_profile(n, d["grid"], d["f"], d.get("fp"), d.get("fpp"), name=d.get("name", "sampled"))
    raise ConfigError(f"unknown profile kind {kind!r}")


def save_profile(p: MetricProfile, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(profile_to_dict(p), fh, indent=1)
        fh.write("\n")


def load_profile(path: str | os.PathLike) -> MetricProfile:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return profile_from_dict(data)


def dumps(obj: Any) -> str:
    """Deterministic JSON text of a report-like object."""
    return json.dumps(_plain(obj), indent=1, sort_keys=True, allow_nan=True)
