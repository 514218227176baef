"""Experiment configuration, orchestration and persistence.

A configuration is a YAML or JSON mapping::

    seed: 7
    solver: {d: 2, grid_points: 32, delta: 0.5, nodes: 24}
    initial_data: {random_divfree: {amplitude: 0.2, spectral_decay: 2}}
    norm_specs: ["4,4,0,1", "inf,2,0,0"]
    march: {t_final: 5.0, steps: 200, record_every: 10}
    rate_fits: [{k: 1, q: 4, window: [0.01, 0.1]}]
    outputs: {directory: out, formats: [json, csv, trajectory]}

Unknown keys anywhere are errors. Results land in ``report.json`` plus flat
CSV tables; nothing time-dependent is written, so identical configs give
bit-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import mild, norms
from .data import CHOICES, make_initial_data
from .mild import ContractionError, ResolutionError, SolverConfig
from .norms import MixedNormSpec
from .trajio import save_trajectory

DIVERGENCE_LIMIT = 1e-10
FORMATS = ("json", "csv", "trajectory")

_SECTIONS = {"seed", "solver", "initial_data", "norm_specs", "march", "rate_fits", "outputs"}
_SOLVER_KEYS = {
    "d",
    "box_length",
    "grid_points",
    "delta",
    "nodes",
    "grading",
    "picard_max_iterations",
    "contraction_tolerance",
    "blowup_threshold",
    "control",
}
_DATA_KEYS = {
    "taylor_green": {"amplitude"},
    "random_divfree": {"amplitude", "spectral_decay", "seed", "cutoff"},
    "singular_ld": {"alpha", "mollification_radius", "center", "amplitude"},
    "from_file": {"path"},
}
_MARCH_KEYS = {"t_final", "steps", "record_every", "blowup_threshold"}
_RATE_KEYS = {"k", "q", "window", "source"}
_OUTPUT_KEYS = {"directory", "formats"}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def _mapping(value, where):
    if not isinstance(value, dict):
        raise ConfigError(where, f"expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(mapping, allowed, where):
    extra = sorted(set(mapping) - set(allowed))
    if extra:
        raise ConfigError(f"{where}.{extra[0]}" if where else extra[0], "unknown key")


def _spec(value, where):
    if isinstance(value, MixedNormSpec):
        return value
    try:
        if isinstance(value, str):
            return MixedNormSpec.parse(value)
        if isinstance(value, dict):
            _reject_unknown(value, {"p", "q", "m", "n", "delta"}, where)
            return MixedNormSpec(**{k: (float(v) if k in "pq" else v) for k, v in value.items()})
        if isinstance(value, (list, tuple)):
            return MixedNormSpec.parse(",".join(str(v) for v in value))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from exc
    raise ConfigError(where, f"cannot read a norm spec from {value!r}")


@dataclass(frozen=True)
class RateFit:
    k: int
    q: float
    window: tuple | None = None
    source: str = "solve"


@dataclass(frozen=True)
class ExperimentConfig:
    solver: SolverConfig
    initial_data: tuple  # (choice, params)
    norm_specs: tuple = ()
    march: dict | None = None
    rate_fits: tuple = ()
    output_directory: str = "nsmild-out"
    formats: tuple = ("json", "csv")
    seed: int = 0
    base_dir: str = "."

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"{path} is not valid YAML/JSON: {exc}") from exc
        return cls.from_mapping(raw, base_dir=path.parent)

    @classmethod
    def from_mapping(cls, raw, base_dir="."):
        raw = _mapping(raw if raw is not None else {}, "<root>")
        _reject_unknown(raw, _SECTIONS, "")
        if "solver" not in raw:
            raise ConfigError("solver", "missing required section")
        if "initial_data" not in raw:
            raise ConfigError("initial_data", "missing required section")

        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError("seed", "must be an integer in [0, 2^64)")

        solver_raw = dict(_mapping(raw["solver"], "solver"))
        _reject_unknown(solver_raw, _SOLVER_KEYS, "solver")
        if "d" not in solver_raw:
            raise ConfigError("solver.d", "missing required key")
        if "control" in solver_raw:
            solver_raw["control"] = _spec(solver_raw["control"], "solver.control")
        try:
            solver = SolverConfig(**solver_raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError("solver", str(exc)) from exc

        choice, params = cls._initial_data(raw["initial_data"], seed, base_dir)

        specs = []
        for i, s in enumerate(raw.get("norm_specs") or []):
            spec = _spec(s, f"norm_specs[{i}]")
            try:
                spec.validate(solver.d)
            except ValueError as exc:
                raise ConfigError(f"norm_specs[{i}]", str(exc)) from exc
            specs.append(spec)

        march = raw.get("march")
        if march is not None:
            march = dict(_mapping(march, "march"))
            _reject_unknown(march, _MARCH_KEYS, "march")
            for key in ("t_final", "steps"):
                if key not in march:
                    raise ConfigError(f"march.{key}", "missing required key")

        fits = []
        for i, r in enumerate(raw.get("rate_fits") or []):
            r = _mapping(r, f"rate_fits[{i}]")
            _reject_unknown(r, _RATE_KEYS, f"rate_fits[{i}]")
            if "k" not in r or "q" not in r:
                raise ConfigError(f"rate_fits[{i}]", "needs k and q")
            src = r.get("source", "solve")
            if src not in ("solve", "march"):
                raise ConfigError(f"rate_fits[{i}].source", "must be 'solve' or 'march'")
            if src == "march" and march is None:
                raise ConfigError(f"rate_fits[{i}].source", "no march section configured")
            win = r.get("window")
            fits.append(RateFit(int(r["k"]), float(r["q"]), tuple(win) if win else None, src))

        out = _mapping(raw.get("outputs") or {}, "outputs")
        _reject_unknown(out, _OUTPUT_KEYS, "outputs")
        formats = tuple(out.get("formats", ("json", "csv")))
        bad = [f for f in formats if f not in FORMATS]
        if bad:
            raise ConfigError("outputs.formats", f"unknown format {bad[0]!r}")
        directory = str(out.get("directory", "nsmild-out"))

        return cls(
            solver=solver,
            initial_data=(choice, params),
            norm_specs=tuple(specs),
            march=march,
            rate_fits=tuple(fits),
            output_directory=directory,
            formats=formats,
            seed=seed,
            base_dir=str(base_dir),
        )

    @staticmethod
    def _initial_data(value, seed, base_dir):
        if isinstance(value, str):
            value = {value: {}}
        value = _mapping(value, "initial_data")
        if len(value) != 1:
            raise ConfigError("initial_data", f"exactly one choice of {CHOICES} required")
        (choice, params), = value.items()
        if choice not in _DATA_KEYS:
            raise ConfigError("initial_data", f"unknown choice {choice!r}")
        params = dict(_mapping(params or {}, f"initial_data.{choice}"))
        _reject_unknown(params, _DATA_KEYS[choice], f"initial_data.{choice}")
        if choice == "random_divfree":
            if "amplitude" not in params:
                raise ConfigError("initial_data.random_divfree.amplitude", "missing required key")
            params.setdefault("seed", seed)
        if choice == "singular_ld":
            for key in ("alpha", "mollification_radius"):
                if key not in params:
                    raise ConfigError(f"initial_data.singular_ld.{key}", "missing required key")
        if choice == "from_file":
            if "path" not in params:
                raise ConfigError("initial_data.from_file.path", "missing required key")
            params["path"] = str(Path(base_dir, params["path"]))
        return choice, params

    @property
    def output_path(self):
        return Path(self.base_dir, self.output_directory)

    def as_dict(self):
        s = self.solver
        solver = {k: getattr(s, k) for k in sorted(_SOLVER_KEYS) if k != "control"}
        solver["control"] = s.control_spec.as_dict()
        return {
            "seed": self.seed,
            "solver": solver,
            "initial_data": {self.initial_data[0]: self.initial_data[1]},
            "norm_specs": [sp.as_dict() for sp in self.norm_specs],
            "march": self.march,
            "rate_fits": [
                {"k": r.k, "q": r.q, "window": list(r.window) if r.window else None, "source": r.source}
                for r in self.rate_fits
            ],
            "outputs": {"directory": self.output_directory, "formats": list(self.formats)},
        }


def _clean(x):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


class _Tables:
    """Collects rows per table and records provenance in the manifest."""

    def __init__(self):
        self.tables = {}
        self.manifest = []

    def add(self, name, header, rows, operation, args):
        self.tables[name] = (list(header), [list(r) for r in rows])
        self.manifest.append(
            {"table": f"{name}.csv", "columns": list(header), "operation": operation, "args": args}
        )

    def write(self, directory):
        for name, (header, rows) in self.tables.items():
            with open(directory / f"{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else v


def _taylor_green_error(traj, a, domain):
    if domain.d != 2:
        return None
    rate = 2.0 * (2 * math.pi / domain.box_length) ** 2
    return [
        (traj.state(i) - a * math.exp(-rate * t)).l2() / max((a * math.exp(-rate * t)).l2(), 1e-300)
        for i, t in enumerate(traj.times)
    ]


def run_experiment(config, write=True):
    """Run one experiment and (optionally) persist it. Returns the report dict."""
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.from_mapping(config)
    dom = config.solver.domain
    choice, params = config.initial_data
    tables = _Tables()
    report = {
        "config": config.as_dict(),
        "seed": config.seed,
        "status": "running",
        "diagnostics": [],
    }

    a = make_initial_data(choice, dom, **params)
    report["initial_data"] = {
        "choice": choice,
        "l2": a.l2(),
        "divergence_ratio": a.divergence_ratio(),
    }

    try:
        u, picard = mild.solve_mild(a, config.solver)
        report["status"] = picard.status
    except ContractionError as exc:
        picard = exc.report
        u = None
        report["status"] = "failed"
        report["diagnostics"].append(f"{type(exc).__name__}: {exc}")
    report["picard"] = picard.as_dict() if picard is not None else None
    if picard is not None:
        rows = [
            (i + 1, n, c, r)
            for i, (n, c, r) in enumerate(zip(picard.norms, picard.corrections, picard.ratios))
        ]
        tables.add(
            "picard",
            ("iteration", "control_norm", "correction_norm", "ratio"),
            rows,
            "solve_mild",
            {"control": config.solver.control_spec.as_dict()},
        )

    if u is not None:
        _evaluate(config, a, u, report, tables)

    if write:
        _persist(config, report, tables, u)
    report["manifest"] = tables.manifest
    return _clean(report)


def _evaluate(config, a, u, report, tables):
    dom = u.domain
    div = [u.state(i).divergence_ratio() for i in range(len(u))]
    l2 = u.l2_norms()
    tg = _taylor_green_error(u, a, dom) if config.initial_data[0] == "taylor_green" else None
    header = ["node", "t", "l2", "divergence_ratio"]
    if tg is not None:
        header.append("solution_error")
    rows = []
    for i, t in enumerate(u.times):
        row = [i, t, l2[i], div[i]]
        if tg is not None:
            row.append(tg[i])
        rows.append(row)
    tables.add("nodes", header, rows, "solve_mild", {"nodes": len(u)})
    invariants = {"max_divergence_ratio": max(div), "divergence_limit": DIVERGENCE_LIMIT}
    if tg is not None:
        invariants["solution_error"] = max(tg)
    report["invariants"] = invariants
    if max(div) > DIVERGENCE_LIMIT:
        report["status"] = "invariant_violation"
        report["diagnostics"].append(
            f"divergence ratio {max(div):.3e} above {DIVERGENCE_LIMIT:g}"
        )

    norm_rows = []
    report["norms"] = []
    for spec in config.norm_specs:
        entry = {"spec": spec.as_dict()}
        try:
            entry["terms"] = {
                f"{j},{k}": v for (j, k), v in norms.weighted_norm_terms(u, spec).items()
            }
            entry["value"] = float(sum(entry["terms"].values()))
        except (ResolutionError, ValueError) as exc:
            entry["value"] = None
            entry["error"] = str(exc)
            report["diagnostics"].append(f"norm {spec.as_dict()}: {exc}")
        report["norms"].append(entry)
        norm_rows.append([spec.p, spec.q, spec.m, spec.n, spec.delta, entry["value"]])
    if config.norm_specs:
        tables.add(
            "norms",
            ("p", "q", "m", "n", "delta", "value"),
            norm_rows,
            "weighted_mixed_norm",
            {"specs": [s.as_dict() for s in config.norm_specs]},
        )

    marched = None
    if config.march is not None:
        m = config.march
        try:
            marched = mild.time_march(
                a,
                float(m["t_final"]),
                int(m["steps"]),
                record_every=int(m.get("record_every", 1)),
                blowup_threshold=float(m.get("blowup_threshold", 1e3)),
            )
            g = [
                math.sqrt(t) * norms.gradient_lq_sum(marched.state(i), 1, dom.d)
                for i, t in enumerate(marched.times)
            ]
            ml2 = marched.l2_norms()
            tables.add(
                "march",
                ("t", "l2", "weighted_grad_ld"),
                [(t, ml2[i], g[i]) for i, t in enumerate(marched.times)],
                "time_march",
                dict(m),
            )
            report["march"] = {"status": "ok", "final_l2": float(ml2[-1])}
        except ContractionError as exc:
            report["march"] = {"status": "failed", "error": str(exc)}
            report["diagnostics"].append(f"time_march: {exc}")

    rate_rows = []
    report["rates"] = []
    for r in config.rate_fits:
        traj = u if r.source == "solve" else marched
        entry = {"k": r.k, "q": r.q, "window": r.window, "source": r.source}
        if traj is None:
            entry["error"] = "source trajectory unavailable"
        else:
            try:
                entry["slope"], entry["r2"] = norms.smoothing_rate_fit(traj, r.k, r.q, r.window)
            except ValueError as exc:
                entry["error"] = str(exc)
        report["rates"].append(entry)
        rate_rows.append([r.source, r.k, r.q, *(r.window or (None, None)), entry.get("slope"), entry.get("r2")])
    if config.rate_fits:
        tables.add(
            "rates",
            ("source", "k", "q", "t_lo", "t_hi", "slope", "r2"),
            rate_rows,
            "smoothing_rate_fit",
            {},
        )


def _persist(config, report, tables, u):
    out = config.output_path
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("outputs.directory", f"cannot create {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError("outputs.directory", f"{out} is not writable")
    if "csv" in config.formats:
        tables.write(out)
    if "trajectory" in config.formats and u is not None:
        save_trajectory(out / "solution.nstraj", u)
        tables.manifest.append(
            {"file": "solution.nstraj", "operation": "solve_mild", "args": {}}
        )
    if "json" in config.formats:
        doc = dict(report)
        doc["manifest"] = tables.manifest
        (out / "report.json").write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")
