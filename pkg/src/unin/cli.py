"""Command-line surface: generate / train / eval / predict / ablate.

Every command is deterministic given its flags and seed; artifacts are
written atomically under the output directory. Exit codes: 0 success,
2 configuration error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import metrics, predictor, trajdata
from .errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    DatasetError,
    NumericError,
    ParseError,
    ShapeError,
    UninError,
)
from .fileio import atomic_write_text, dump_json, format_float
from .predictor import ModelConfig, TrajectoryPredictor
from .trajdata import GeneratorConfig


@dataclass(frozen=True)
class RunConfig:
    """Flat training configuration; every key may appear in a config file."""

    t_obs: int = 4
    t_pred: int = 10
    frame_dt: float = 0.5
    d_e: int = 8
    d_a: int = 8
    gcn_layers: int = 1
    gcn_channels: int = 2
    tcn_kernel: int = 3
    tcn_channels: int = 16
    uni_kernel: int = 3
    uni_repeats: int = 2
    uni_conv_mode: str = "rows"
    mixture_components: int = 3
    per_pair_attention: bool = False
    category_pi_bias: bool = False
    sigma_bias: float = 1.0
    n_max: int = 0  # 0: derive from the dataset
    n_categories: int = 0  # 0: derive from the dataset
    lr: float = 0.005
    epochs: int = 50
    lr_decay_factor: float = 0.2
    lr_decay_every: int = 10
    momentum: float = 0.0
    train_ratio: float = 0.6
    val_ratio: float = 0.2
    test_ratio: float = 0.2
    seed: int = 0

    def model_config(self, n_max: int, n_categories: int) -> ModelConfig:
        return ModelConfig(
            t_obs=self.t_obs,
            t_pred=self.t_pred,
            n_categories=n_categories,
            n_max=n_max,
            d_e=self.d_e,
            d_a=self.d_a,
            gcn_layers=self.gcn_layers,
            gcn_channels=self.gcn_channels,
            tcn_kernel=self.tcn_kernel,
            tcn_channels=self.tcn_channels,
            uni_kernel=self.uni_kernel,
            uni_repeats=self.uni_repeats,
            uni_conv_mode=self.uni_conv_mode,
            mixture_components=self.mixture_components,
            per_pair_attention=self.per_pair_attention,
            category_pi_bias=self.category_pi_bias,
            sigma_bias=self.sigma_bias,
            seed=self.seed,
        )


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse flat ``key = value`` lines with ``#`` comments."""
    typed = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in typed:
            raise ConfigError(f"{source}: line {lineno}: unknown key {key!r}")
        kind = typed[key]
        try:
            if kind in ("int", int):
                values[key] = int(value)
            elif kind in ("float", float):
                values[key] = float(value)
            elif kind in ("bool", bool):
                if value.lower() not in ("true", "false"):
                    raise ValueError(f"expected true/false, got {value!r}")
                values[key] = value.lower() == "true"
            else:
                values[key] = value
        except ValueError as err:
            raise ConfigError(f"{source}: line {lineno}: bad value for {key!r}: {err}") from err
    return RunConfig(**values)


def load_run_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config_text(handle.read(), source=path)


def config_echo(config: RunConfig, derived: dict) -> str:
    lines = []
    blob = asdict(config)
    blob.update(derived)
    for key in sorted(blob):
        value = blob[key]
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = format_float(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def _derive_sizes(scenarios, config: RunConfig) -> tuple[int, int]:
    data_n_max = max(s.n_agents for s in scenarios)
    data_cats = max(int(s.categories().max()) for s in scenarios) + 1
    n_max = config.n_max or data_n_max
    n_categories = config.n_categories or data_cats
    if n_max < data_n_max:
        raise ConfigError(f"n_max={n_max} below the dataset maximum of {data_n_max} agents")
    if n_categories < data_cats:
        raise ConfigError(f"n_categories={n_categories} below the dataset's {data_cats} categories")
    return n_max, n_categories


# ---------------------------------------------------------------------------
# Commands


def cmd_generate(args) -> int:
    ranges = tuple(
        tuple(float(x) for x in pair.split(":")) for pair in args.speed_ranges.split(",")
    )
    counts = tuple(int(x) for x in args.agents_per_category.split(","))
    if any(len(r) != 2 for r in ranges):
        raise ConfigError(f"speed ranges must be lo:hi pairs, got {args.speed_ranges!r}")
    config = GeneratorConfig(
        num_scenarios=args.scenarios,
        agents_per_category=counts,
        speed_ranges=ranges,
        motifs=tuple(args.motifs.split(",")),
        t_obs=args.t_obs,
        t_pred=args.t_pred,
        frame_dt=args.frame_dt,
        seed=args.seed,
    )
    scenarios = trajdata.generate_synthetic(config)
    os.makedirs(args.out, exist_ok=True)
    entries = []
    for i, scenario in enumerate(scenarios):
        name = f"scenario_{i:04d}.csv"
        trajdata.write_csv(os.path.join(args.out, name), scenario)
        entries.append(
            {
                "file": name,
                "motif": trajdata.scenario_motif(config, i),
                "agents": scenario.n_agents,
            }
        )
    manifest = {
        "seed": config.seed,
        "scenario_count": len(scenarios),
        "t_obs": config.t_obs,
        "t_pred": config.t_pred,
        "frame_dt": config.frame_dt,
        "agents_per_category": list(config.agents_per_category),
        "speed_ranges": [list(r) for r in config.speed_ranges],
        "motifs": list(config.motifs),
        "files": entries,
    }
    atomic_write_text(os.path.join(args.out, "manifest.json"), dump_json(manifest) + "\n")
    print(f"wrote {len(scenarios)} scenarios to {args.out}")
    return 0


def cmd_train(args) -> int:
    config = load_run_config(args.config)
    if args.epochs is not None:
        config = replace(config, epochs=args.epochs)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.lr is not None:
        config = replace(config, lr=args.lr)

    scenarios = trajdata.load_dataset(args.data, config.t_obs, config.t_pred, config.frame_dt)
    ratios = (config.train_ratio, config.val_ratio, config.test_ratio)
    train_set, val_set, _ = trajdata.split_dataset(scenarios, ratios, config.seed)
    if not train_set:
        raise DatasetError("training split is empty")
    n_max, n_categories = _derive_sizes(scenarios, config)
    model_config = config.model_config(n_max, n_categories)

    model, history = predictor.train(
        train_set,
        model_config,
        config.epochs,
        val_scenarios=val_set,
        base_lr=config.lr,
        lr_decay_factor=config.lr_decay_factor,
        lr_decay_every=config.lr_decay_every,
        momentum=config.momentum,
    )

    os.makedirs(args.out, exist_ok=True)
    run_blob = asdict(config)
    run_blob["n_max"] = n_max
    run_blob["n_categories"] = n_categories
    model.save(os.path.join(args.out, "checkpoint.json"), extra_config=run_blob)

    lines = ["epoch,lr,train_nll,val_ade,val_fde"]
    for rec in history:
        lines.append(
            f"{rec.epoch},{format_float(rec.lr)},{format_float(rec.train_nll)},"
            f"{_metric_text(rec.val_ade)},{_metric_text(rec.val_fde)}"
        )
    atomic_write_text(os.path.join(args.out, "history.csv"), "\n".join(lines) + "\n")
    atomic_write_text(
        os.path.join(args.out, "config.resolved"),
        config_echo(config, {"n_max": n_max, "n_categories": n_categories}),
    )
    final = history[-1]
    print(f"trained {config.epochs} epochs; final train NLL {final.train_nll:.4f}")
    return 0


def _metric_text(value: float) -> str:
    return "nan" if math.isnan(value) else format_float(value)


def _select_split(scenarios, blob: dict, which: str):
    ratios = (
        float(blob.get("train_ratio", 0.6)),
        float(blob.get("val_ratio", 0.2)),
        float(blob.get("test_ratio", 0.2)),
    )
    seed = int(blob.get("seed", 0))
    train_set, val_set, test_set = trajdata.split_dataset(scenarios, ratios, seed)
    return {"train": train_set, "val": val_set, "test": test_set}[which]


def cmd_eval(args) -> int:
    model, blob = TrajectoryPredictor.load(args.model)
    frame_dt = float(blob.get("frame_dt", 0.5))
    scenarios = trajdata.load_dataset(args.data, model.config.t_obs, model.config.t_pred, frame_dt)
    if args.split != "all":
        scenarios = _select_split(scenarios, blob, args.split)
    if not scenarios:
        raise DatasetError(f"split {args.split!r} is empty")

    weights = None
    if args.weights:
        parts = [float(w) for w in args.weights.split(",")]
        weights = {i: w for i, w in enumerate(parts)}
    protocol = "best-of-k" if args.best_of else "deterministic"
    report = metrics.evaluate_model(
        model,
        scenarios,
        protocol=protocol,
        num_samples=args.best_of or 20,
        seed=int(blob.get("seed", 0)),
        weights=weights,
    )
    text = dump_json(report.to_dict()) + "\n"
    print(text, end="")
    if args.out:
        atomic_write_text(args.out, text)
    return 0


def cmd_predict(args) -> int:
    model, blob = TrajectoryPredictor.load(args.model)
    frame_dt = float(blob.get("frame_dt", 0.5))
    scenario = trajdata.load_scenario_file(
        args.scenario, model.config.t_obs, model.config.t_pred, frame_dt
    )
    if scenario.n_agents == 0:
        raise DatasetError(f"{args.scenario}: empty scenario")

    samples = None
    if args.samples > 0:
        samples = model.sample(scenario, args.samples, seed=int(blob.get("seed", 0)))

    svg = render_svg(scenario, samples)
    atomic_write_text(args.svg, svg)

    csv_path = args.csv or (os.path.splitext(args.svg)[0] + ".csv")
    lines = ["agent_id,step,sample,x,y"]
    if samples is not None:
        for s in range(samples.shape[0]):
            for i, track in enumerate(scenario.tracks):
                for step in range(scenario.future_steps):
                    x, y = samples[s, i, step]
                    lines.append(f"{track.agent_id},{step + 1},{s},{format_float(float(x))},{format_float(float(y))}")
    atomic_write_text(csv_path, "\n".join(lines) + "\n")

    if args.dump:
        result = model.forward(scenario, record=True)
        dump = [
            {
                "step": t,
                "E": rec.kernel.tolist(),
                "R": rec.normalized.tolist(),
                "A_scores": rec.scores.tolist(),
                "CI": rec.category_interaction.tolist(),
                "ATT": rec.attention.tolist(),
            }
            for t, rec in enumerate(result.steps)
        ]
        atomic_write_text(args.dump, json.dumps(dump, indent=2) + "\n")
    print(f"wrote {args.svg} and {csv_path}")
    return 0


def cmd_ablate(args) -> int:
    config = load_run_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    kernels = [int(k) for k in args.kernels.split(",")]
    scenarios = trajdata.load_dataset(args.data, config.t_obs, config.t_pred, config.frame_dt)
    ratios = (config.train_ratio, config.val_ratio, config.test_ratio)
    train_set, val_set, test_set = trajdata.split_dataset(scenarios, ratios, config.seed)
    eval_set = test_set or val_set or train_set
    n_max, n_categories = _derive_sizes(scenarios, config)
    rows = metrics.ablation_run(
        train_set,
        eval_set,
        config.model_config(n_max, n_categories),
        kernel_sizes=kernels,
        epochs=args.epochs,
        base_lr=config.lr,
        lr_decay_factor=config.lr_decay_factor,
        lr_decay_every=config.lr_decay_every,
    )
    os.makedirs(args.out, exist_ok=True)
    lines = ["kernel,ade,fde"]
    for row in rows:
        lines.append(f"{row.kernel},{format_float(row.ade)},{format_float(row.fde)}")
    atomic_write_text(os.path.join(args.out, "ablation.csv"), "\n".join(lines) + "\n")
    best = min(rows, key=lambda r: r.ade)
    summary = f"best kernel by ADE: {best.kernel} (ade={best.ade:.4f}, fde={best.fde:.4f})\n"
    atomic_write_text(os.path.join(args.out, "ablation_summary.txt"), summary)
    print(summary, end="")
    return 0


# ---------------------------------------------------------------------------
# SVG rendering


def _viewport(points: np.ndarray, width: int, height: int):
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    margin = 0.05 * float(span.max())
    if margin == 0:
        margin = 1.0
    lo = lo - margin
    hi = hi + margin
    span = hi - lo
    scale = min(width / span[0], height / span[1])

    def to_px(p):
        x = (p[0] - lo[0]) * scale
        y = height - (p[1] - lo[1]) * scale  # flip: data y up, svg y down
        return float(x), float(y)

    return to_px


def _polyline(points, color: str, dash: str | None = None, width: float = 1.5) -> str:
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline points="{coords}" fill="none" stroke="{color}" '
        f'stroke-width="{width}"{dash_attr} />'
    )


def _agent_color(index: int) -> str:
    return f"hsl({(index * 67) % 360},70%,40%)"


def _density_color(level: float) -> str:
    # low density: deep blue; high density: bright yellow
    r = int(40 + 215 * level)
    g = int(40 + 180 * level)
    b = int(160 - 120 * level)
    return f"rgb({r},{g},{b})"


def render_svg(scenario, samples: np.ndarray | None, width: int = 800, height: int = 600) -> str:
    """Draw observed tracks, true futures, and sampled future points
    (colored by how many nearby samples agree)."""
    t_obs = scenario.t_obs
    cloud = []
    for tr in scenario.tracks:
        cloud.extend(tr.positions[tr.present].tolist())
    if samples is not None:
        cloud.extend(samples.reshape(-1, 2).tolist())
    to_px = _viewport(np.array(cloud), width, height)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white" />',
    ]
    if samples is not None:
        flat = samples.reshape(-1, 2)
        radius = 0.03 * float(np.ptp(flat, axis=0).max() or 1.0)
        for i in range(len(scenario.tracks)):
            points = samples[:, i].reshape(-1, 2)
            counts = np.array(
                [np.sum(np.linalg.norm(points - p, axis=1) < radius) for p in points]
            )
            top = counts.max() or 1
            for p, c in zip(points, counts):
                x, y = to_px(p)
                parts.append(
                    f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2" '
                    f'fill="{_density_color(c / top)}" fill-opacity="0.7" />'
                )
    for i, tr in enumerate(scenario.tracks):
        color = _agent_color(i)
        observed = [to_px(p) for t, p in enumerate(tr.positions[:t_obs]) if tr.present[t]]
        if len(observed) >= 2:
            parts.append(_polyline(observed, color, width=2.0))
        future = [
            to_px(tr.positions[t])
            for t in range(t_obs - 1, scenario.t_pred)
            if tr.present[t]
        ]
        if len(future) >= 2:
            parts.append(_polyline(future, color, dash="5,4"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unin",
        description="Heterogeneous trajectory prediction: data, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write synthetic scenario CSVs")
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--scenarios", type=int, required=True)
    gen.add_argument("--agents-per-category", default="2,2")
    gen.add_argument("--speed-ranges", default="0.8:1.4,1.6:3.0")
    gen.add_argument("--motifs", default=",".join(trajdata.DEFAULT_MOTIFS))
    gen.add_argument("--t-obs", type=int, default=4)
    gen.add_argument("--t-pred", type=int, default=10)
    gen.add_argument("--frame-dt", type=float, default=0.5)
    gen.set_defaults(func=cmd_generate)

    tr = sub.add_parser("train", help="train a model on a scenario directory")
    tr.add_argument("--data", required=True)
    tr.add_argument("--config", default=None)
    tr.add_argument("--out", required=True)
    tr.add_argument("--epochs", type=int, default=None)
    tr.add_argument("--seed", type=int, default=None)
    tr.add_argument("--lr", type=float, default=None)
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a checkpoint")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--split", choices=["all", "train", "val", "test"], default="all")
    ev.add_argument("--best-of", type=int, default=None)
    ev.add_argument("--weights", default=None)
    ev.add_argument("--out", default=None)
    ev.set_defaults(func=cmd_eval)

    pr = sub.add_parser("predict", help="predict one scenario and render an SVG")
    pr.add_argument("--model", required=True)
    pr.add_argument("--scenario", required=True)
    pr.add_argument("--samples", type=int, default=20)
    pr.add_argument("--svg", required=True)
    pr.add_argument("--csv", default=None)
    pr.add_argument("--dump", default=None)
    pr.set_defaults(func=cmd_predict)

    ab = sub.add_parser("ablate", help="kernel-size ablation")
    ab.add_argument("--data", required=True)
    ab.add_argument("--config", default=None)
    ab.add_argument("--out", required=True)
    ab.add_argument("--kernels", default="1,2,3,5,10")
    ab.add_argument("--epochs", type=int, default=10)
    ab.add_argument("--seed", type=int, default=None)
    ab.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError, DatasetError, CheckpointError, ContractError, ShapeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return 4
    except UninError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
