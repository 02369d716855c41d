"""Experiment driver: seeded training runs, greedy evaluation, parameter
sweeps, and figure-data emission.

Every run is a pure function of (configuration, seed): the seed feeds a
seed tree whose branches drive the environment, the learner, and the
evaluation environment separately, and all output files are written with
round-trip float formatting in a fixed order, so repeating a command
reproduces its outputs byte for byte.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import replace

import numpy as np

from . import config as cfgmod
from . import dqn
from .config import ExperimentConfig

SCHEMA_COMMENT = "# aoisched-metrics v1"
PLOTDATA_COMMENT = "# aoisched-plotdata v1"

TRAIN_COLUMNS = [
    "episode", "reward_raw", "reward_penalized", "loss", "epsilon",
    "aaoi_s", "ee_bits_per_joule_per_hz", "r_total_bps", "p_total_w",
    "transmitted_ratio", "cpu_energy_j",
]

SWEEP_COLUMNS = [
    "axis", "value", "scheme", "seeds",
    "reward_raw_mean", "reward_raw_std",
    "aaoi_s_mean", "aaoi_s_std",
    "ee_bits_per_joule_per_hz_mean", "ee_bits_per_joule_per_hz_std",
    "transmitted_ratio_mean", "transmitted_ratio_std",
    "r_total_bps_mean", "p_total_w_mean",
]

SWEEP_AXES = {
    "p_max": "sweep_p_max_dbm",
    "packet_bits": "sweep_packet_bits",
    "subcarriers": "sweep_subcarriers",
}


class UnknownFigureError(ValueError):
    def __init__(self, figure_id, valid):
        super().__init__(
            f"unknown figure id {figure_id!r}; valid ids: {', '.join(valid)}"
        )
        self.valid = valid


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if not np.isfinite(value):
        raise ValueError("refusing to write a non-finite value to metrics")
    return repr(value)


def _write_csv(path, columns, rows, comment=SCHEMA_COMMENT):
    buf = io.StringIO()
    buf.write(comment + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_cell(row.get(c)) for c in columns])
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_metrics(path) -> tuple[list[str], list[dict]]:
    """Read a metrics or plot-data CSV, skipping comment lines."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return list(reader.fieldnames or []), list(reader)


def _spawned_rngs(seed: int):
    env_ss, agent_ss, eval_ss = np.random.SeedSequence(seed).spawn(3)
    return (
        np.random.default_rng(env_ss),
        np.random.default_rng(agent_ss),
        np.random.default_rng(eval_ss),
    )


def train_run(cfg: ExperimentConfig, seed: int):
    """Train one scheme; returns (scheme, result) without touching disk."""
    parts = cfgmod.build_components(cfg)
    scheme = cfgmod.build_scheme(cfg, parts)
    env_rng, agent_rng, _ = _spawned_rngs(seed)
    env = cfgmod.build_env(cfg, scheme.catalog, env_rng, parts)
    result = dqn.train(env, scheme, cfgmod.train_settings(cfg), agent_rng)
    return scheme, result


def run_train(cfg: ExperimentConfig, seed: int, out_dir: str) -> dict:
    """Full training run; emits one metrics row per episode plus a checkpoint."""
    scheme, result = train_run(cfg, seed)
    metrics_path = os.path.join(out_dir, "train_metrics.csv")
    checkpoint_path = os.path.join(out_dir, "checkpoint.txt")
    _write_csv(metrics_path, TRAIN_COLUMNS, result.episodes)
    os.makedirs(out_dir, exist_ok=True)
    dqn.save_checkpoint(checkpoint_path, result.params, result.adam)
    return {
        "metrics": metrics_path,
        "checkpoint": checkpoint_path,
        "result": result,
        "scheme": scheme,
    }


def _greedy_rows(cfg: ExperimentConfig, scheme, params, seed: int) -> list[dict]:
    parts = cfgmod.build_components(cfg)
    _, _, eval_rng = _spawned_rngs(seed)
    # evaluation rolls its own environment stream but shares the eval rng
    # for both the environment and any randomized fixed dimension
    env = cfgmod.build_env(cfg, scheme.catalog, eval_rng, parts)
    return dqn.greedy_evaluate(
        env, scheme, params, cfg.eval_episodes, cfg.steps, eval_rng
    )


def run_evaluate(cfg: ExperimentConfig, seed: int, checkpoint_path: str,
                 out_dir: str) -> dict:
    """Greedy rollouts of a stored policy; one metrics row per episode."""
    parts = cfgmod.build_components(cfg)
    scheme = cfgmod.build_scheme(cfg, parts)
    params, _ = dqn.load_checkpoint(checkpoint_path)
    rows = _greedy_rows(cfg, scheme, params, seed)
    metrics_path = os.path.join(out_dir, "eval_metrics.csv")
    _write_csv(metrics_path, TRAIN_COLUMNS, rows)
    return {"metrics": metrics_path, "rows": rows}


def evaluate_point(cfg: ExperimentConfig, seed: int) -> dict:
    """Train then greedily evaluate; returns the evaluation means."""
    scheme, result = train_run(cfg, seed)
    rows = _greedy_rows(cfg, scheme, result.params, seed)

    def mean(key):
        return float(np.mean([row[key] for row in rows]))

    return {
        "reward_raw": mean("reward_raw"),
        "aaoi_s": mean("aaoi_s"),
        "ee_bits_per_joule_per_hz": mean("ee_bits_per_joule_per_hz"),
        "transmitted_ratio": mean("transmitted_ratio"),
        "r_total_bps": mean("r_total_bps"),
        "p_total_w": mean("p_total_w"),
    }


def apply_axis(cfg: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    if axis == "p_max":
        return replace(cfg, p_max_dbm=float(value))
    if axis == "packet_bits":
        return replace(cfg, packet_bits=[float(value)])
    if axis == "subcarriers":
        return replace(cfg, subcarriers=int(value))
    raise ValueError(f"unknown sweep axis {axis!r}; pick one of {sorted(SWEEP_AXES)}")


def run_sweep(cfg: ExperimentConfig, axis: str, seeds: list[int], out_dir: str,
              schemes: list[str] | None = None,
              values: list[float] | None = None) -> dict:
    """Train and evaluate every (axis value, scheme, seed) combination.

    Rows aggregate over seeds (mean and population standard deviation) and
    are written in deterministic (value, scheme) order.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; pick one of {sorted(SWEEP_AXES)}")
    values = list(values) if values is not None else list(getattr(cfg, SWEEP_AXES[axis]))
    schemes = list(schemes) if schemes else [cfg.scheme]

    rows = []
    for value in values:
        for scheme_name in schemes:
            point_cfg = apply_axis(replace(cfg, scheme=scheme_name), axis, value)
            summaries = [evaluate_point(point_cfg, seed) for seed in seeds]

            def agg(key):
                data = np.asarray([s[key] for s in summaries], dtype=float)
                return float(data.mean()), float(data.std())

            reward_m, reward_s = agg("reward_raw")
            aaoi_m, aaoi_s_ = agg("aaoi_s")
            ee_m, ee_s = agg("ee_bits_per_joule_per_hz")
            ratio_m, ratio_s = agg("transmitted_ratio")
            rows.append({
                "axis": axis,
                "value": float(value),
                "scheme": scheme_name,
                "seeds": len(seeds),
                "reward_raw_mean": reward_m, "reward_raw_std": reward_s,
                "aaoi_s_mean": aaoi_m, "aaoi_s_std": aaoi_s_,
                "ee_bits_per_joule_per_hz_mean": ee_m,
                "ee_bits_per_joule_per_hz_std": ee_s,
                "transmitted_ratio_mean": ratio_m,
                "transmitted_ratio_std": ratio_s,
                "r_total_bps_mean": agg("r_total_bps")[0],
                "p_total_w_mean": agg("p_total_w")[0],
            })
    metrics_path = os.path.join(out_dir, "sweep_metrics.csv")
    _write_csv(metrics_path, SWEEP_COLUMNS, rows)
    return {"metrics": metrics_path, "rows": rows}


# ------------------------------------------------------------------- figures

FIGURES = {
    "loss": {"kind": "train", "y": "loss", "ylabel": "training loss"},
    "reward": {"kind": "train", "y": "reward_raw", "ylabel": "mean reward per episode"},
    "epsilon": {"kind": "train", "y": "epsilon", "ylabel": "exploration rate"},
    "aaoi-vs-pmax": {"kind": "sweep", "axis": "p_max", "y": "aaoi_s",
                     "xlabel": "power budget (dBm)", "ylabel": "mean age (s)"},
    "reward-vs-pmax": {"kind": "sweep", "axis": "p_max", "y": "reward_raw",
                       "xlabel": "power budget (dBm)", "ylabel": "reward"},
    "ee-vs-pmax": {"kind": "sweep", "axis": "p_max", "y": "ee_bits_per_joule_per_hz",
                   "xlabel": "power budget (dBm)", "ylabel": "EE (bits/J/Hz)"},
    "drop-vs-pmax": {"kind": "sweep", "axis": "p_max", "y": "transmitted_ratio",
                     "xlabel": "power budget (dBm)",
                     "ylabel": "transmitted/generated ratio"},
    "aaoi-vs-packet-size": {"kind": "sweep", "axis": "packet_bits", "y": "aaoi_s",
                            "xlabel": "packet size (bits)", "ylabel": "mean age (s)"},
    "reward-vs-packet-size": {"kind": "sweep", "axis": "packet_bits", "y": "reward_raw",
                              "xlabel": "packet size (bits)", "ylabel": "reward"},
    "aaoi-vs-subcarriers": {"kind": "sweep", "axis": "subcarriers", "y": "aaoi_s",
                            "xlabel": "subcarriers", "ylabel": "mean age (s)"},
    "reward-vs-subcarriers": {"kind": "sweep", "axis": "subcarriers", "y": "reward_raw",
                              "xlabel": "subcarriers", "ylabel": "reward"},
}


def emit_plot_data(metrics_path: str, figure_id: str, out_dir: str,
                   render: bool = True) -> dict:
    """Project a metrics file onto one figure's series.

    Writes one two-column (x, y[, y_std]) CSV per series and, by default,
    renders the assembled figure to PNG alongside the data files.
    """
    if figure_id not in FIGURES:
        raise UnknownFigureError(figure_id, sorted(FIGURES))
    spec = FIGURES[figure_id]
    _, rows = read_metrics(metrics_path)

    series: dict[str, tuple] = {}
    if spec["kind"] == "train":
        xs, ys = [], []
        for row in rows:
            if row.get(spec["y"], "") == "":
                continue
            xs.append(float(row["episode"]))
            ys.append(float(row[spec["y"]]))
        series[""] = (xs, ys, None)
        columns = ["x", "y"]
    else:
        matching = [r for r in rows if r.get("axis") == spec["axis"]]
        for row in matching:
            name = row["scheme"]
            xs, ys, stds = series.setdefault(name, ([], [], []))
            xs.append(float(row["value"]))
            ys.append(float(row[f"{spec['y']}_mean"]))
            stds.append(float(row[f"{spec['y']}_std"]))
        columns = ["x", "y", "y_std"]

    os.makedirs(out_dir, exist_ok=True)
    written = []
    if not series:
        series[""] = ([], [], [] if spec["kind"] == "sweep" else None)
    for name in sorted(series):
        xs, ys, stds = series[name]
        suffix = f"__{name}" if name else ""
        path = os.path.join(out_dir, f"{figure_id}{suffix}.csv")
        data_rows = []
        for i in range(len(xs)):
            row = {"x": xs[i], "y": ys[i]}
            if stds is not None:
                row["y_std"] = stds[i]
            data_rows.append(row)
        _write_csv(path, columns, data_rows, comment=PLOTDATA_COMMENT)
        written.append(path)

    png_path = None
    if render and any(len(s[0]) for s in series.values()):
        from . import plots

        png_path = os.path.join(out_dir, f"{figure_id}.png")
        plots.render_figure(
            png_path,
            title=figure_id,
            xlabel=spec.get("xlabel", "episode"),
            ylabel=spec["ylabel"],
            series=series,
        )
    return {"series": written, "png": png_path}
