"""Command-line front end: rhoest --config run.json [--out DIR] [--seed N] [--threads N]."""
import argparse
import csv
import json
import logging
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .criterion import rho_estimate, rho_select
from .errors import NumericalError, RhoError, UsageError
from .selection import PenalizedFamily, make_histogram_family, make_scale_family, vc_dimension_proxy
from .sim import Scenario, draw_sample, run_scenario, verify_inequalities
from .zoo import (make_histogram_net, make_linear_regression_net, make_sequence_model,
                  make_translation_net, make_uniform_shift_net)

log = logging.getLogger("rhoest")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Grid(_Strict):
    min: float
    max: float
    step: float = Field(gt=0)

    def values(self):
        k = int(np.floor((self.max - self.min) / self.step + 1e-9)) + 1
        return self.min + self.step * np.arange(k)


class TranslationModel(_Strict):
    kind: Literal["translation"]
    shape: str = "gaussian"
    theta: Grid
    scale: float = Field(1.0, gt=0)


class UniformShiftModel(_Strict):
    kind: Literal["uniform_shift"]
    theta: Grid


class HistogramModel(_Strict):
    kind: Literal["histogram"]
    partition: list[float]
    resolution: Union[int, float]
    max_points: int = 250_000


class SequenceModelSpec(_Strict):
    kind: Literal["sequence"]
    alphabet: Union[str, list[str]]
    depth_cap: int = 60
    enum_depth: int = 2


class LinearRegressionModel(_Strict):
    kind: Literal["linear_regression"]
    shape: str = "gaussian"
    a: Grid
    b: Grid
    scale: float = Field(1.0, gt=0)


ModelSpec = Annotated[Union[TranslationModel, UniformShiftModel, HistogramModel,
                            SequenceModelSpec, LinearRegressionModel], Field(discriminator="kind")]


class HistogramFamily(_Strict):
    kind: Literal["histogram"]
    partitions: list[list[float]]
    resolution: Union[int, float]
    mode: Literal["vc", "histo"] = "vc"
    delta: Optional[list[float]] = None
    max_points: int = 250_000


class ScaleShape(_Strict):
    shape: str
    gamma: float = Field(gt=0)


class ScaleFamily(_Strict):
    kind: Literal["scale"]
    shapes: list[ScaleShape]
    theta: Grid
    j_range: tuple[int, int] = (-8, 8)
    i_max: int = Field(6, ge=0)


FamilySpec = Annotated[Union[HistogramFamily, ScaleFamily], Field(discriminator="kind")]


class Generator(_Strict):
    """Draws the data set from a scenario-style truth description."""
    kind: Literal["translation", "linreg", "histogram", "sequence"]
    n: int = Field(gt=0)
    truth: dict = {}
    seed: int = 0


class DataSpec(_Strict):
    values: Optional[list] = None
    csv: Optional[str] = None
    generator: Optional[Generator] = None


class ScenarioSpec(_Strict):
    name: str
    kind: Literal["translation", "linreg", "histogram", "sequence"]
    n_list: list[int]
    replications: int = Field(gt=0)
    seed: int = 0
    estimators: list[str] = ["rho"]
    losses: list[str] = ["sq"]
    truth: dict = {}
    model: dict = {}


class RunConfig(_Strict):
    command: Literal["estimate", "select", "simulate", "verify"]
    seed: Optional[int] = None
    model: Optional[ModelSpec] = None
    family: Optional[FamilySpec] = None
    data: Optional[DataSpec] = None
    scenario: Optional[Union[str, ScenarioSpec]] = None
    budget: float = Field(1.0, gt=0)
    dimension_constant: float = Field(1.0, gt=0)
    table: Union[bool, Literal["auto"]] = "auto"
    output_prefix: Optional[str] = None


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def bundled_scenarios():
    root = resources.files("rhoest") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name):
    path = resources.files("rhoest") / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise UsageError(f"no bundled scenario {name!r}; available: {bundled_scenarios()}")
    return ScenarioSpec.model_validate(json.loads(path.read_text()))


def _read_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].startswith("#"):
                continue
            try:
                vals = [float(v) for v in rec]
            except ValueError:
                if not rows:
                    continue  # header line
                raise UsageError(f"non-numeric row in {path}: {rec}")
            rows.append(vals[0] if len(vals) == 1 else vals)
    if not rows:
        raise UsageError(f"no data in {path}")
    return rows


def _load_data(cfg):
    d = cfg.data
    if d is None:
        raise UsageError("this command needs a data section")
    given = [x is not None for x in (d.values, d.csv, d.generator)]
    if sum(given) != 1:
        raise UsageError("data needs exactly one of values, csv, generator")
    if d.values is not None:
        vals = d.values
    elif d.csv is not None:
        vals = _read_csv(d.csv)
    else:
        g = d.generator
        seed = cfg.seed if cfg.seed is not None else g.seed
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        X = draw_sample(g.kind, g.truth, g.n, rng)
        return X
    if vals and isinstance(vals[0], str):
        out = np.empty(len(vals), dtype=object)
        out[:] = [tuple(v) for v in vals]
        return out
    if vals and isinstance(vals[0], list) and vals[0] and isinstance(vals[0][0], str):
        out = np.empty(len(vals), dtype=object)
        out[:] = [tuple(v) for v in vals]
        return out
    return np.asarray(vals, dtype=float)


def _build_net(spec, X):
    n = len(X)
    if spec.kind == "translation":
        return make_translation_net(spec.shape, spec.theta.min, spec.theta.max, spec.theta.step,
                                    n, scale=spec.scale)
    if spec.kind == "uniform_shift":
        return make_uniform_shift_net(spec.theta.min, spec.theta.max, spec.theta.step, n)
    if spec.kind == "histogram":
        return make_histogram_net(spec.partition, spec.resolution, n, max_points=spec.max_points)
    if spec.kind == "sequence":
        model, net = make_sequence_model(spec.alphabet, (), spec.depth_cap, sample=X,
                                         enum_depth=spec.enum_depth)
        return net
    if spec.kind == "linear_regression":
        return make_linear_regression_net(spec.shape, n, spec.a.values(), spec.b.values(),
                                          scale=spec.scale)
    raise UsageError(f"unknown model kind {spec.kind}")


def _point_summary(net, j):
    out = {"index": int(j), "params": np.asarray(net.params[j]).tolist()}
    dens = getattr(net, "densities", None)
    if dens is not None:
        out["word"] = list(dens[j].prefix)
    return out


def _upsilon_summary(res):
    out = {"minimum": float(res.upsilon)}
    if res.table is not None:
        u = res.table.upsilon
        out.update({"points": int(u.size), "q50": float(np.median(u)), "maximum": float(u.max())})
    return out


def _write(out_dir, name, payload):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s", path)
    return path


def _prefix(cfg, default):
    return cfg.output_prefix or default


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_estimate(cfg, out_dir, threads=1):
    if cfg.model is None:
        raise UsageError("estimate needs a model section")
    X = _load_data(cfg)
    start = time.perf_counter()
    net = _build_net(cfg.model, X)
    res = rho_estimate(X, net, table=cfg.table)
    slack = res.slack_set()
    report = {
        "command": "estimate",
        "estimate": _point_summary(net, res.index),
        "net_size": len(net),
        "upsilon": _upsilon_summary(res),
        "slack_set_size": int(len(slack)),
        "runtime_seconds": time.perf_counter() - start,
        "config": cfg.model_dump(mode="json"),
    }
    _write(out_dir, _prefix(cfg, "estimate") + ".json", report)
    return EXIT_OK


def _build_family(cfg, n):
    spec = cfg.family
    if spec.kind == "histogram":
        return make_histogram_family(spec.partitions, spec.resolution, n, delta=spec.delta,
                                     mode=spec.mode, dimension_constant=cfg.dimension_constant,
                                     max_points=spec.max_points)
    grid = spec.theta
    return make_scale_family([(s.shape, s.gamma) for s in spec.shapes],
                             [("translation", (grid.min, grid.max, grid.step), 1.0)],
                             j_range=spec.j_range, i_max=spec.i_max, n=n,
                             dimension_constant=cfg.dimension_constant)


def cmd_select(cfg, out_dir, threads=1):
    if cfg.family is None and cfg.model is None:
        raise UsageError("select needs a family (or a single model)")
    X = _load_data(cfg)
    start = time.perf_counter()
    if cfg.family is None:
        net = _build_net(cfg.model, X)
        family = PenalizedFamily([net], [0.0], [vc_dimension_proxy(3, len(X), cfg.dimension_constant)])
    else:
        family = _build_family(cfg, len(X))
    res = rho_select(X, family, table=cfg.table)
    report = {
        "command": "select",
        "selected_model": res.label,
        "estimate": _point_summary(family.union_net, res.index),
        "models": len(family),
        "union_size": len(family.union_net),
        "penalty": float(family.pen[res.index]),
        "upsilon": {"minimum": float(res.upsilon)},
        "weight_sum": family.weight_sum,
        "dropped_mass": family.dropped_mass,
        "runtime_seconds": time.perf_counter() - start,
        "config": cfg.model_dump(mode="json"),
    }
    _write(out_dir, _prefix(cfg, "select") + ".json", report)
    return EXIT_OK


def cmd_simulate(cfg, out_dir, threads=1):
    if cfg.scenario is None:
        raise UsageError("simulate needs a scenario (bundled name or full description)")
    spec = load_bundled(cfg.scenario) if isinstance(cfg.scenario, str) else cfg.scenario
    if cfg.seed is not None:
        spec = spec.model_copy(update={"seed": cfg.seed})
    sc = Scenario(**spec.model_dump())
    report = run_scenario(sc, workers=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = _prefix(cfg, spec.name)
    report.to_csv(out_dir / f"{stem}.csv")
    payload = report.to_dict()
    payload["run_config"] = cfg.model_copy(update={"scenario": spec}).model_dump(mode="json")
    _write(out_dir, f"{stem}.json", payload)
    return EXIT_OK


def cmd_verify(cfg, out_dir, threads=1):
    seed = cfg.seed if cfg.seed is not None else 0
    rep = verify_inequalities(seed=seed, budget=cfg.budget)
    for line in rep.lines():
        log.info(line)
    payload = rep.to_dict()
    payload["config"] = cfg.model_dump(mode="json")
    _write(out_dir, _prefix(cfg, "verify") + ".json", payload)
    return EXIT_OK if rep.passed else EXIT_FAIL


COMMANDS = {"estimate": cmd_estimate, "select": cmd_select, "simulate": cmd_simulate,
            "verify": cmd_verify}


def load_config(path, seed=None):
    with open(path) as fh:
        raw = json.load(fh)
    cfg = RunConfig.model_validate(raw)
    if seed is not None:
        cfg = cfg.model_copy(update={"seed": seed})
    return cfg


def main(argv=None):
    ap = argparse.ArgumentParser(prog="rhoest", description=__doc__)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override the configured seed")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for simulations")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.seed)
        return COMMANDS[cfg.command](cfg, Path(args.out), max(1, args.threads))
    except (OSError, json.JSONDecodeError, ValidationError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RhoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
