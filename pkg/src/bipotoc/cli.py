"""Command-line driver.

Usage::

    bipotoc <command> [--config cfg.json] [--seed N] [--output PATH]
                      [--format json|csv] [--threads N]

Commands: otoc-curve, estimates, sample, entropy, channel, figure1.
The config file is JSON and mirrors :class:`RunConfig` field by field.
Exit status: 0 success, 1 invalid configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import channels, estimates, montecarlo
from .io import dumps_json, to_csv
from .linalg import BipartiteDims, RngStream
from .models import DEFAULT_TOL, HamiltonianSpec, ModelKind, build_hamiltonian, eigendecompose
from .otoc import evolution, g_exact

SCHEMA_VERSION = "1.0"
THREADS_ENV = "BIPOTOC_THREADS"
# sections merged key-by-key with defaults; others are replaced whole
MERGED_SECTIONS = ("times", "tolerances", "output", "markov_window")
COMMANDS = ("otoc-curve", "estimates", "sample", "entropy", "channel", "figure1")

FIGURE1_MODELS = {
    "tfim_chaotic": {"kind": "tfim", "params": {"g": -1.05, "h": 0.5}},
    "tfim_integrable": {"kind": "tfim", "params": {"g": -1.05, "h": 0.0}},
    "xxz": {"kind": "xxz", "params": {"J": 0.4, "delta": 2.5}},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    command: str
    model: dict = field(default_factory=lambda: {"kind": "tfim", "n_sites": 6, "params": {"g": -1.05, "h": 0.5}})
    cut: dict = field(default_factory=lambda: {"n_sites_a": 1})
    times: dict = field(default_factory=lambda: {"t_min": 0.0, "t_max": 20.0, "n_points": 201})
    t: float = 1.0
    keep: str = "A"
    ensemble: dict = field(default_factory=lambda: {"kind": "haar_local"})
    n_samples: int = 10_000
    seed: int = 0
    stream_id: int = 0
    epsilons: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    percentiles: list = field(default_factory=lambda: [50.0, 90.0, 99.0])
    n_values: list = field(default_factory=lambda: [4, 6, 8])
    # empirical Markov time fraction; skipped when d exceeds max_dim
    markov_window: dict = field(default_factory=lambda: {"t_max": 1000.0, "n_points": 2000, "max_dim": 64})
    tolerances: dict = field(default_factory=lambda: {"tol_level": DEFAULT_TOL, "tol_gap": DEFAULT_TOL, "eq_tol": 1e-10})
    output: dict = field(default_factory=lambda: {"path": None, "format": "json"})

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        if "command" not in data:
            raise ConfigError("command", "missing")
        defaults = cls(command=data["command"])
        merged = asdict(defaults)
        for k, v in data.items():
            if isinstance(merged.get(k), dict) and isinstance(v, dict) and k in MERGED_SECTIONS:
                merged[k] = {**merged[k], **v}
            else:
                merged[k] = v
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))

    # validation -------------------------------------------------------

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
        if self.command != "figure1":
            self.hamiltonian_spec()
            self.dims()
        if self.command == "otoc-curve":
            self.time_grid()
        if self.keep not in ("A", "B"):
            raise ConfigError("keep", "must be 'A' or 'B'")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ConfigError("n_samples", "must be a positive integer")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        fmt = self.output.get("format", "json")
        if fmt not in ("json", "csv"):
            raise ConfigError("output.format", "must be 'json' or 'csv'")
        if self.command in ("sample", "entropy", "estimates") and not self.epsilons:
            raise ConfigError("epsilons", "must not be empty")
        if any(e <= 0 for e in self.epsilons):
            raise ConfigError("epsilons", "must be positive")
        if self.command == "figure1":
            if not self.n_values or any(int(n) != n or n < 2 for n in self.n_values):
                raise ConfigError("n_values", "must be a nonempty list of integers >= 2")
        mw = self.markov_window
        if mw.get("t_max", 1.0) <= 0:
            raise ConfigError("markov_window.t_max", "must be positive")
        if int(mw.get("n_points", 1)) != mw.get("n_points", 1) or mw.get("n_points", 1) < 1:
            raise ConfigError("markov_window.n_points", "must be a positive integer")
        for k in ("tol_level", "tol_gap", "eq_tol"):
            if self.tolerances.get(k, 1.0) <= 0:
                raise ConfigError(f"tolerances.{k}", "must be positive")

    def hamiltonian_spec(self, n_sites: int | None = None) -> HamiltonianSpec:
        m = self.model
        try:
            kind = ModelKind(m.get("kind"))
        except ValueError:
            raise ConfigError("model.kind", f"unknown model {m.get('kind')!r}") from None
        n = n_sites if n_sites is not None else m.get("n_sites", 0)
        try:
            return HamiltonianSpec(kind=kind, n_sites=int(n), params=dict(m.get("params", {})),
                                   custom_path=m.get("custom_path"))
        except ValueError as exc:
            raise ConfigError("model", str(exc)) from None

    def dims(self, total: int | None = None) -> BipartiteDims:
        if total is None:
            spec = self.hamiltonian_spec()
            total = spec.dim
            if total is None:
                from .io import load_matrix

                try:
                    total = load_matrix(spec.custom_path).shape[0]
                except FileNotFoundError:
                    raise ConfigError("model.custom_path", f"file not found: {spec.custom_path}") from None
        if "n_sites_a" in self.cut and self.cut["n_sites_a"] is not None:
            d_a = 2 ** int(self.cut["n_sites_a"])
        elif "d_a" in self.cut:
            d_a = int(self.cut["d_a"])
        else:
            raise ConfigError("cut", "needs n_sites_a or d_a")
        if d_a < 1 or total % d_a:
            raise ConfigError("cut", f"d_a = {d_a} does not divide the dimension {total}")
        return BipartiteDims(d_a, total // d_a)

    def time_grid(self) -> np.ndarray:
        tg = self.times
        if "values" in tg and tg["values"] is not None:
            t = np.asarray(tg["values"], dtype=float)
            if t.size == 0 or np.any(np.diff(t) <= 0):
                raise ConfigError("times.values", "must be a nonempty strictly increasing list")
            return t
        n = tg.get("n_points", 201)
        if int(n) != n or n < 1:
            raise ConfigError("times.n_points", "must be >= 1")
        return np.linspace(tg.get("t_min", 0.0), tg.get("t_max", 20.0), int(n))


def _spectrum(cfg: RunConfig, n_sites=None):
    spec = cfg.hamiltonian_spec(n_sites)
    H = build_hamiltonian(spec)
    tol = cfg.tolerances
    return eigendecompose(H, tol.get("tol_level", DEFAULT_TOL), tol.get("tol_gap", DEFAULT_TOL))


def _model_tag(cfg: RunConfig) -> str:
    m = cfg.model
    params = ",".join(f"{k}={v}" for k, v in sorted(m.get("params", {}).items()))
    return f"{m.get('kind')}(n={m.get('n_sites')}{',' if params else ''}{params})"


# commands ------------------------------------------------------------------


def run_otoc_curve(cfg: RunConfig, threads: int = 1) -> dict:
    sp = _spectrum(cfg)
    dims = cfg.dims(sp.dim)
    rows = [{"t": float(t), "G": g_exact(evolution(sp, t), dims, check=False)} for t in cfg.time_grid()]
    return {"model": _model_tag(cfg), "d_a": dims.d_a, "d_b": dims.d_b, "table": rows}


def run_estimates(cfg: RunConfig, threads: int = 1) -> dict:
    sp = _spectrum(cfg)
    dims = cfg.dims(sp.dim)
    report = estimates.hierarchy_report(sp, dims, _model_tag(cfg))
    profile = estimates.eigenstate_entanglement_profile(sp, dims)
    deficit = (1.0 - 1.0 / dims.d_max) - profile
    prop4 = [
        {"percentile": float(p), **estimates.prop4_bound(
            profile, dims, float(np.percentile(deficit, p)), report.nrc).as_dict()}
        for p in cfg.percentiles
    ]
    mw = cfg.markov_window
    empirical = None
    if dims.d <= mw.get("max_dim", 64):
        empirical = channels.markov_time_fraction(sp, dims, cfg.epsilons, mw["t_max"], int(mw["n_points"]), cfg.keep)
    markov = []
    for k, eps in enumerate(cfg.epsilons):
        raw = channels.markov_fraction_bound(report, eps, cfg.keep)
        markov.append({
            "epsilon": float(eps),
            "bound": raw,
            "display": min(raw, 1.0),
            "vacuous": raw > 1.0,
            "empirical_lower": None if empirical is None else float(empirical[k]),
        })
    out = report.as_dict()
    out["table"] = [
        {"estimator": name, "value": getattr(report, name)} for name in ("haar", "nrc", "nrc_plus", "exact")
    ]
    out["prop4"] = prop4
    out["markov"] = markov
    return out


def _evolution_at(cfg: RunConfig):
    sp = _spectrum(cfg)
    return evolution(sp, cfg.t), cfg.dims(sp.dim)


def run_sample(cfg: RunConfig, threads: int = 1) -> dict:
    u, dims = _evolution_at(cfg)
    ens_cfg = cfg.ensemble
    try:
        ens = montecarlo.EnsembleSpec(ens_cfg.get("kind", "haar_local"), dims,
                                      ens_cfg.get("n_sites_a"), ens_cfg.get("n_sites_b"))
    except ValueError as exc:
        raise ConfigError("ensemble", str(exc)) from None
    rng = RngStream(int(cfg.seed), int(cfg.stream_id))
    stats = montecarlo.sample_otoc(u, ens, int(cfg.n_samples), rng, threads)
    out = {"model": _model_tag(cfg), "t": cfg.t, "ensemble": ens.kind.value, **stats.as_dict()}
    if ens.kind is montecarlo.EnsembleKind.HAAR_LOCAL:
        out["table"] = [
            {**row.as_dict()}
            for row in (
                montecarlo.ConcentrationRow(e, stats.exceedance(e), montecarlo.otoc_concentration_bound(e, dims),
                                            stats.n_samples)
                for e in cfg.epsilons
            )
        ]
    return out


def run_entropy(cfg: RunConfig, threads: int = 1) -> dict:
    u, dims = _evolution_at(cfg)
    rng = RngStream(int(cfg.seed), int(cfg.stream_id))
    stats = montecarlo.entropy_production_estimate(u, dims, cfg.keep, int(cfg.n_samples), rng, threads)
    dk = dims.factor(cfg.keep)
    out = {"model": _model_tag(cfg), "t": cfg.t, "keep": cfg.keep, "g_exact": g_exact(u, dims), **stats.as_dict()}
    out["table"] = [
        montecarlo.ConcentrationRow(e, stats.exceedance(e), montecarlo.state_concentration_bound(e, dk),
                                    stats.n_samples).as_dict()
        for e in cfg.epsilons
    ]
    return out


def run_channel(cfg: RunConfig, threads: int = 1) -> dict:
    u, dims = _evolution_at(cfg)
    ch = channels.reduced_channel(u, dims, cfg.keep)
    check = channels.choi_distance_check(u, dims, cfg.keep)
    lower, upper = channels.diamond_bounds(u, dims, cfg.keep)
    return {
        "model": _model_tag(cfg),
        "t": cfg.t,
        "keep": cfg.keep,
        "g": check.g,
        "g_max": check.g_max,
        "choi_distance_sq": check.distance_sq,
        "identity_residual": check.residual,
        "diamond_lower": lower,
        "diamond_upper": upper,
        "choi_trace_witness": channels.choi_trace_witness(ch),
        "trace_preserving": ch.is_trace_preserving(),
        "unital": ch.is_unital(),
        "completely_positive": ch.is_completely_positive(),
    }


def run_figure1(cfg: RunConfig, threads: int = 1) -> dict:
    rows = []
    d_a = 2 ** int(cfg.cut.get("n_sites_a", 1)) if cfg.cut.get("n_sites_a") is not None else int(cfg.cut.get("d_a", 2))
    n_reached = None
    for name, model in FIGURE1_MODELS.items():
        for n in cfg.n_values:
            sub = copy.deepcopy(cfg)
            sub.model = {**model, "n_sites": int(n)}
            try:
                sp = _spectrum(sub)
                dims = BipartiteDims.from_total(sp.dim, d_a)
                rep = estimates.hierarchy_report(sp, dims, name)
            except MemoryError as exc:
                raise MemoryError(f"figure1 ran out of memory at n={n} (completed up to n={n_reached})") from exc
            for est in ("haar", "nrc", "nrc_plus", "exact"):
                rows.append({"model": name, "n": int(n), "estimator": est, "value": getattr(rep, est),
                             "ordered": rep.ordered})
            n_reached = n
    for n in cfg.n_values:
        rows.append({"model": "haar_asymptote", "n": int(n), "estimator": "haar_inf",
                     "value": estimates.haar_asymptote(d_a), "ordered": True})
    return {"d_a": d_a, "haar_asymptote": estimates.haar_asymptote(d_a), "table": rows}


RUNNERS = {
    "otoc-curve": run_otoc_curve,
    "estimates": run_estimates,
    "sample": run_sample,
    "entropy": run_entropy,
    "channel": run_channel,
    "figure1": run_figure1,
}


def run(cfg: RunConfig, threads: int = 1) -> dict:
    """Execute ``cfg`` and return the result record."""
    start = time.perf_counter()
    payload = RUNNERS[cfg.command](cfg, threads)
    return {
        "schema_version": SCHEMA_VERSION,
        "config_echo": cfg.to_dict(),
        "payload": payload,
        "wall_time_seconds": time.perf_counter() - start,
    }


def render(record: dict, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(record["payload"])
    return dumps_json(record) + "\n"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bipotoc", description="Bipartite OTOC toolkit")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="JSON config file mirroring RunConfig")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", type=Path, help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--threads", type=int)
    return p


def build_config(args) -> RunConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError("--config", f"file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError("--config", "top level must be a JSON object")
    if data.get("command", args.command) != args.command:
        raise ConfigError("command", f"config says {data['command']!r} but {args.command!r} was requested")
    data["command"] = args.command
    if args.seed is not None:
        data["seed"] = args.seed
    out = dict(data.get("output") or {})
    if args.output is not None:
        out["path"] = str(args.output)
    if args.format is not None:
        out["format"] = args.format
    if out:
        data["output"] = out
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args)
        threads = args.threads or int(os.environ.get(THREADS_ENV, "1") or 1)
        if threads < 1:
            raise ConfigError("--threads", "must be positive")
        record = run(cfg, threads)
    except (ConfigError, FileNotFoundError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, np.linalg.LinAlgError, MemoryError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    text = render(record, cfg.output.get("format", "json"))
    path = cfg.output.get("path")
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
