"""End-to-end experiments, configuration and report output.

A configuration is a JSON object; every key except ``experiment`` is
optional::

    {"experiment": "stability_vif",
     "family": {"name": "near_extremal", "n": 3, "params": {}},
     "k": [1, 2, 3, 4, 5, 6],
     "eta_grid": [0.02, 0.04, ...],
     "eta_surgery": 0.1,
     "n_samples": 48,
     "seed": 0,
     "out_dir": "runs/stability_vif",
     "formats": ["json", "csv", "plotdata"]}
"""
from __future__ import annotations

import csv
import io
import json
import platform
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import pmap, worker_count
from .errors import ConfigError, WarpGeoError
from .families import FamilySpec, check_hypotheses
from .profile import MetricProfile, volume
from .serialize import _plain, dumps

EXPERIMENTS = ("stability_vif", "stability_gh_ricci", "surgery_gh", "rigidity", "diameter_bound", "envelopes")
CSV_HEADER = "k,eps,width,min_a_symmetric,diameter,volume,gh_bound,vif_bound,eta_star,hypotheses_ok,status"
FORMATS = ("json", "csv", "plotdata")

_DEFAULT_FAMILY = {
    "stability_vif": ("near_extremal", {}),
    "stability_gh_ricci": ("ricci_capped", {}),
    "surgery_gh": ("near_extremal", {}),
    "rigidity": ("round", {}),
    "diameter_bound": ("ricci_capped", {}),
    "envelopes": ("near_extremal", {}),
}
# families without a member index ignore k
_INDEXED = {"near_extremal", "ricci_capped", "random_designed"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    family: FamilySpec
    k: tuple = (1, 2, 3, 4, 5, 6)
    eta_grid: tuple = tuple(round(0.02 * j, 10) for j in range(1, 16))
    eta_surgery: float = 0.1
    n_samples: int = 48
    seed: int = 0
    out_dir: str | None = None
    formats: tuple = ("json",)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if not self.k:
            raise ConfigError("k range is empty")
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown formats {sorted(bad)}")
        if any(not (0 < e < 0.5) for e in self.eta_grid) or not self.eta_grid:
            raise ConfigError("eta grid must be nonempty and inside (0, 0.5)")
        from .families import GENERATORS

        if self.family.name not in GENERATORS and self.family.name != "random_designed":
            raise ConfigError(f"unknown family {self.family.name!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if "experiment" not in d:
            raise ConfigError("config needs an 'experiment' field")
        exp = d["experiment"]
        fam = d.get("family")
        if fam is None:
            name, params = _DEFAULT_FAMILY.get(exp, ("near_extremal", {}))
            fam = {"name": name, "n": d.get("n", 3), "params": params}
        elif isinstance(fam, str):
            fam = FamilySpec.parse(fam, int(d.get("n", 3))).to_dict()
        known = {"experiment", "family", "k", "eta_grid", "eta_surgery", "n_samples", "seed",
                 "out_dir", "formats", "n"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        kw = {}
        for key in ("eta_surgery", "n_samples", "seed", "out_dir"):
            if key in d:
                kw[key] = d[key]
        if "k" in d:
            kw["k"] = tuple(int(x) for x in d["k"])
        if "eta_grid" in d:
            kw["eta_grid"] = tuple(float(x) for x in d["eta_grid"])
        if "formats" in d:
            kw["formats"] = tuple(d["formats"])
        try:
            return cls(exp, FamilySpec.from_dict(fam), **kw)
        except (TypeError, KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config: {exc}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.to_dict()
        return _plain(d)


@dataclass
class Row:
    k: int
    eps: float
    width: float | None = None
    min_a_symmetric: float | None = None
    diameter: float | None = None
    volume: float | None = None
    gh_bound: float | None = None
    vif_bound: float | None = None
    eta_star: float | None = None
    hypotheses_ok: bool = False
    status: str = "ok"
    flags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def csv_cells(self) -> list[str]:
        def cell(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return [cell(getattr(self, c)) for c in CSV_HEADER.split(",")]


@dataclass
class RunReport:
    experiment: str
    rows: list
    passed: bool
    assertions: dict
    config: dict
    environment: dict

    def to_dict(self) -> dict:
        return _plain({"experiment": self.experiment, "passed": self.passed, "assertions": self.assertions,
                       "rows": [asdict(r) for r in self.rows], "config": self.config,
                       "environment": self.environment})

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(d["experiment"], [Row(**r) for r in d["rows"]], d["passed"], d["assertions"],
                   d["config"], d["environment"])

    @property
    def headline(self) -> str:
        return "vif_bound" if self.experiment == "stability_vif" else "gh_bound"


# --------------------------------------------------------------------------
# per-row work


def _eps(k: int) -> float:
    return 2.0 ** (-k)


def _member(cfg: ExperimentConfig, k: int) -> MetricProfile:
    over = {"k": k} if cfg.family.name in _INDEXED and cfg.family.name != "random_designed" else {}
    if cfg.family.name == "random_designed":
        over = {"seed": cfg.seed + k}
    return cfg.family.generate(**over)


def _basic(row: Row, p: MetricProfile) -> None:
    from .sweepout import find_minimal_leaves

    rep = find_minimal_leaves(p)
    row.width = float(rep.width)
    row.min_a_symmetric = None if rep.min_a_symmetric is None else float(rep.min_a_symmetric)
    row.diameter = float(p.D)
    row.volume = float(volume(p))


def _hyp(row: Row, p: MetricProfile, ricci: bool) -> None:
    checks = check_hypotheses(p, row.eps, ricci)
    row.flags = {k: bool(v[0]) for k, v in checks.items()}
    row.hypotheses_ok = all(row.flags.values())


def _row(cfg: ExperimentConfig, k: int) -> Row:
    from . import comparison, conformal, estimates

    row = Row(k=int(k), eps=_eps(k))
    try:
        p = _member(cfg, k)
        _basic(row, p)
        exp = cfg.experiment
        kw = {"n_s": cfg.n_samples, "n_phi": cfg.n_samples}
        if exp in ("stability_vif", "stability_gh_ricci"):
            _hyp(row, p, exp == "stability_gh_ricci")
            rep = comparison.sweep_eta(p, None, cfg.eta_grid, **kw)
            row.gh_bound, row.vif_bound = rep.gh.value, rep.vif.value
            row.eta_star = rep.eta_gh if exp == "stability_gh_ricci" else rep.eta_used
            row.extra = {"if_bound": rep.if_.value, "eta_gh": rep.eta_gh, "eta_vif": rep.eta_used}
        elif exp == "surgery_gh":
            _hyp(row, p, False)
            rec = comparison.surgery_bad_set(p, cfg.eta_surgery, **kw)
            row.gh_bound = rec.gh_bound_excised
            row.eta_star = cfg.eta_surgery
            row.extra = {"vol_Z": rec.vol_Z, "vol_bdry_Z": rec.vol_bdry_Z, "psi_bound": rec.psi_bound,
                         "Z": [list(z) for z in rec.Z]}
        elif exp == "rigidity":
            rr = conformal.rigidity_check(p)
            row.flags = {"scal": rr.scal_ok, "width": rr.width_ok}
            row.hypotheses_ok = rr.scal_ok and rr.width_ok
            row.extra = {"min_scal": rr.min_scal, "max_dev_from_round": rr.max_dev_from_round}
        elif exp == "diameter_bound":
            dc = estimates.check_diameter_bound(p)
            row.flags = {"applicable": dc.applicable}
            row.hypotheses_ok = dc.applicable
            row.extra = {"hemisphere_length": dc.hemisphere_length, "d0": dc.d0, "w0": dc.w0,
                         "min_scal": dc.min_scal, "min_ricci": dc.min_ricci, "ok": dc.ok}
        elif exp == "envelopes":
            _hyp(row, p, False)
            ev = estimates.check_v_envelope(p, row.eps)
            row.extra = {"rk_contains": estimates.rk_contains(p, row.eps), "v_envelope_ok": ev.ok,
                         "min_slack_lower": ev.min_slack_lower, "min_slack_upper": ev.min_slack_upper,
                         "radius": ev.radius, "sine_deviation": estimates.sine_deviation(p)}
    except WarpGeoError as exc:
        row.status = f"error: {type(exc).__name__}: {exc}"
    return row


# --------------------------------------------------------------------------
# assertions


def _decreasing(rows: list, key: str) -> bool:
    vals = [getattr(r, key) if hasattr(r, key) else r.extra.get(key) for r in rows]
    return len(vals) >= 1 and all(b < a for a, b in zip(vals, vals[1:]))


def _assess(exp: str, rows: list) -> dict:
    ok_rows = [r for r in rows if r.status == "ok"]
    gated = [r for r in ok_rows if r.hypotheses_ok]
    out: dict = {"no_errors": len(ok_rows) == len(rows)}
    if exp == "stability_vif":
        out["vif_decreasing"] = _decreasing(gated, "vif_bound")
    elif exp == "stability_gh_ricci":
        out["gh_decreasing"] = _decreasing(gated, "gh_bound")
    elif exp == "surgery_gh":
        out["volume_within_psi"] = all(r.extra["vol_Z"] + r.extra["vol_bdry_Z"] <= r.extra["psi_bound"]
                                       for r in ok_rows)
        out["gh_excised_decreasing"] = _decreasing(gated, "gh_bound")
    elif exp == "rigidity":
        devs = [r.extra["max_dev_from_round"] for r in gated]
        out["round_when_extremal"] = all(d is not None and d < 1e-9 for d in devs)
    elif exp == "diameter_bound":
        out["length_within_d0"] = all(r.extra["ok"] for r in ok_rows)
    elif exp == "envelopes":
        out["rk_in_envelope"] = all(r.extra["rk_contains"] for r in ok_rows)
        out["v_in_envelope"] = all(r.extra["v_envelope_ok"] for r in ok_rows)
    for r in rows:
        if r.status == "ok" and not r.hypotheses_ok and exp in ("stability_vif", "stability_gh_ricci",
                                                                "surgery_gh", "envelopes"):
            r.status = "hypotheses_failed"
    return out


def environment() -> dict:
    from . import kernels

    return {"warpgeo": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "backend": kernels.BACKEND, "threads": worker_count(), "platform": sys.platform}


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    """Run every member, assemble rows sorted by ``k`` and evaluate the assertions.

    Errors in a row are recorded in its status; the run continues.
    """
    ks = sorted(set(int(k) for k in cfg.k))
    # the sweep inside each row is already threaded; rows run one after another
    rows = pmap(lambda k: _row(cfg, k), ks, workers=1)
    checks = _assess(cfg.experiment, rows)
    return RunReport(cfg.experiment, rows, all(checks.values()), checks, cfg.to_dict(), environment())


# --------------------------------------------------------------------------
# output


def to_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER.split(","))
    for r in report.rows:
        w.writerow(r.csv_cells())
    return buf.getvalue()


def to_plotdata(report: RunReport) -> str:
    """Whitespace-separated ``k bound`` columns, then an ``eta bound`` block when available."""
    key = report.headline
    lines = [f"# k {key}"]
    for r in report.rows:
        v = getattr(r, key)
        lines.append(f"{r.k} {repr(float(v)) if v is not None else 'nan'}")
    etas = [(r.eta_star, getattr(r, key)) for r in report.rows if r.eta_star is not None and getattr(r, key) is not None]
    if etas:
        lines.append("")
        lines.append(f"# eta {key}")
        lines += [f"{repr(float(e))} {repr(float(v))}" for e, v in etas]
    return "\n".join(lines) + "\n"


def emit(report: RunReport, fmt: str, out_dir=None) -> str:
    """Render ``report`` in ``fmt``; written to ``out_dir/<experiment>.<ext>`` when a directory is given."""
    if fmt == "json":
        text, ext = dumps(report.to_dict()) + "\n", "json"
    elif fmt == "csv":
        text, ext = to_csv(report), "csv"
    elif fmt == "plotdata":
        text, ext = to_plotdata(report), "dat"
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{report.experiment}.{ext}").write_text(text, encoding="utf-8")
    return text


def exit_code(report: RunReport) -> int:
    return 0 if report.passed else 2

