"""Displacement-error metrics, protocols, and the kernel-size ablation.

Average displacement error (ADE) is the mean L2 error over all masked
(agent, step) pairs; final displacement error (FDE) is the mean L2 error
at the last step over the agents present there. FDE divides by the agent
count; the historical variant that also divides by the step count is kept
behind ``literal_denominator`` for comparability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, ContractError


def _as_mask(mask, shape) -> np.ndarray:
    if mask is None:
        return np.ones(shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise ContractError(f"mask shape {mask.shape} does not match {shape}")
    return mask


def _errors(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ContractError(f"prediction shape {pred.shape} != truth shape {truth.shape}")
    return np.linalg.norm(pred - truth, axis=-1)


def ade(pred: np.ndarray, truth: np.ndarray, mask=None) -> float:
    """Mean L2 error over masked (agent, step) pairs."""
    errors = _errors(pred, truth)
    mask = _as_mask(mask, errors.shape)
    if not mask.any():
        raise ContractError("empty mask: no (agent, step) pairs to average")
    return float(errors[mask].mean())


def fde(pred: np.ndarray, truth: np.ndarray, mask=None, literal_denominator: bool = False) -> float:
    """Mean final-step L2 error over agents present at the final step.

    ``literal_denominator=True`` divides the final-step error sum by
    N * T instead of the agent count.
    """
    errors = _errors(pred, truth)
    mask = _as_mask(mask, errors.shape)
    final = mask[:, -1]
    if not final.any():
        raise ContractError("no agent present at the final step")
    total = float(errors[final, -1].sum())
    if literal_denominator:
        return total / (errors.shape[0] * errors.shape[1])
    return total / float(final.sum())


def per_category_metrics(
    pred: np.ndarray, truth: np.ndarray, categories: Sequence[int], mask=None
) -> dict[int, dict[str, float]]:
    """ADE/FDE restricted to each category present in the fixture."""
    categories = np.asarray(categories, dtype=int)
    errors = _errors(pred, truth)
    mask = _as_mask(mask, errors.shape)
    report: dict[int, dict[str, float]] = {}
    for cat in sorted(set(int(c) for c in categories)):
        rows = categories == cat
        sub_mask = mask[rows]
        if not sub_mask.any():
            continue
        entry = {"ade": float(errors[rows][sub_mask].mean())}
        final = sub_mask[:, -1]
        if final.any():
            entry["fde"] = float(errors[rows][:, -1][final].mean())
        report[cat] = entry
    return report


def weighted_metrics(
    per_category: Mapping[int, Mapping[str, float]],
    weights: Mapping[int, float],
) -> tuple[float, float]:
    """Category-weighted ADE/FDE; weights renormalize over the categories
    actually present."""
    cats = sorted(per_category)
    if not cats:
        raise ContractError("no per-category metrics to weight")
    for cat in cats:
        if cat not in weights:
            raise ConfigError(f"category {cat} has no weight")
    total = sum(weights[c] for c in cats)
    if total <= 0:
        raise ConfigError("weights over present categories sum to zero")
    wade = sum(weights[c] / total * per_category[c]["ade"] for c in cats)
    wfde = sum(weights[c] / total * per_category[c].get("fde", per_category[c]["ade"]) for c in cats)
    return float(wade), float(wfde)


def best_of_k(samples: np.ndarray, truth: np.ndarray, mask=None) -> tuple[float, float]:
    """Per agent, keep the sample minimizing that agent's ADE; report the
    mean ADE and FDE of the kept samples."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 4:
        raise ContractError(f"samples must be (K, N, T, 2), got {samples.shape}")
    truth = np.asarray(truth, dtype=np.float64)
    mask = _as_mask(mask, truth.shape[:2])
    if not mask.any():
        raise ContractError("empty mask")
    n_agents = truth.shape[0]
    ades = []
    fdes = []
    for agent in range(n_agents):
        steps = mask[agent]
        if not steps.any():
            continue
        errors = np.linalg.norm(samples[:, agent] - truth[None, agent], axis=-1)  # (K, T)
        per_sample = errors[:, steps].mean(axis=1)
        best = int(np.argmin(per_sample))
        ades.append(float(per_sample[best]))
        if steps[-1]:
            fdes.append(float(errors[best, -1]))
    min_ade = float(np.mean(ades))
    min_fde = float(np.mean(fdes)) if fdes else float("nan")
    return min_ade, min_fde


def constant_velocity_baseline(observed: np.ndarray, steps: int) -> np.ndarray:
    """Extrapolate each agent with its last observed velocity.

    ``observed`` is (N, t_obs, 2); a single observed frame extrapolates
    with zero velocity (hold position).
    """
    observed = np.asarray(observed, dtype=np.float64)
    if observed.ndim != 3 or observed.shape[2] != 2:
        raise ContractError(f"observed must be (N, t_obs, 2), got {observed.shape}")
    last = observed[:, -1]
    if observed.shape[1] >= 2:
        velocity = observed[:, -1] - observed[:, -2]
    else:
        velocity = np.zeros_like(last)
    horizon = np.arange(1, steps + 1)
    return last[:, None, :] + horizon[None, :, None] * velocity[:, None, :]


# ---------------------------------------------------------------------------
# Model evaluation


@dataclass
class MetricReport:
    ade: float
    fde: float
    per_category: dict[int, dict[str, float]]
    protocol: str
    pair_count: int
    agent_count: int
    wade: float | None = None
    wfde: float | None = None

    def to_dict(self) -> dict:
        blob = {
            "ade": self.ade,
            "fde": self.fde,
            "per_category": {str(k): dict(v) for k, v in self.per_category.items()},
            "protocol": self.protocol,
            "pair_count": self.pair_count,
            "agent_count": self.agent_count,
        }
        if self.wade is not None:
            blob["wade"] = self.wade
            blob["wfde"] = self.wfde
        return blob


def evaluate_model(
    model,
    scenarios: Sequence,
    protocol: str = "deterministic",
    num_samples: int = 20,
    seed: int = 0,
    weights: Mapping[int, float] | None = None,
) -> MetricReport:
    """Run a model over scenarios and pool displacement errors.

    ``protocol`` is ``deterministic`` (highest-weight component means) or
    ``best-of-k`` (per-agent best of ``num_samples`` draws); the report is
    tagged so numbers are never compared across protocols silently.
    """
    if protocol not in ("deterministic", "best-of-k"):
        raise ConfigError(f"unknown protocol {protocol!r}")
    if not scenarios:
        raise ContractError("no scenarios to evaluate")

    step_errors: list[float] = []
    step_cats: list[int] = []
    final_errors: list[float] = []
    final_cats: list[int] = []
    total_pairs = 0

    for index, scenario in enumerate(scenarios):
        t_obs = scenario.t_obs
        truth = np.stack([tr.positions[t_obs:] for tr in scenario.tracks])
        mask = np.stack([tr.present[t_obs:] for tr in scenario.tracks])
        total_pairs += int(mask.sum())
        cats = scenario.categories()
        if protocol == "deterministic":
            pred = model.predict(scenario)
            errors = np.linalg.norm(pred - truth, axis=-1)
            for agent in range(scenario.n_agents):
                steps = mask[agent]
                step_errors.extend(errors[agent][steps].tolist())
                step_cats.extend([int(cats[agent])] * int(steps.sum()))
                if steps[-1]:
                    final_errors.append(float(errors[agent, -1]))
                    final_cats.append(int(cats[agent]))
        else:
            samples = model.sample(scenario, num_samples, seed=seed + index)
            errors = np.linalg.norm(samples - truth[None], axis=-1)  # (S, N, T)
            for agent in range(scenario.n_agents):
                steps = mask[agent]
                if not steps.any():
                    continue
                per_sample = errors[:, agent, :][:, steps].mean(axis=1)
                best = int(np.argmin(per_sample))
                step_errors.append(float(per_sample[best]))
                step_cats.append(int(cats[agent]))
                if steps[-1]:
                    final_errors.append(float(errors[best, agent, -1]))
                    final_cats.append(int(cats[agent]))

    if not step_errors:
        raise ContractError("evaluation produced no (agent, step) pairs")

    per_category: dict[int, dict[str, float]] = {}
    for cat in sorted(set(step_cats)):
        entry = {
            "ade": float(np.mean([e for e, c in zip(step_errors, step_cats) if c == cat]))
        }
        cat_finals = [e for e, c in zip(final_errors, final_cats) if c == cat]
        if cat_finals:
            entry["fde"] = float(np.mean(cat_finals))
        per_category[cat] = entry

    report = MetricReport(
        ade=float(np.mean(step_errors)),
        fde=float(np.mean(final_errors)) if final_errors else float("nan"),
        per_category=per_category,
        protocol="deterministic" if protocol == "deterministic" else f"best-of-K:{num_samples}",
        pair_count=total_pairs,
        agent_count=len(final_errors),
    )
    if weights is not None:
        report.wade, report.wfde = weighted_metrics(per_category, weights)
    return report


# ---------------------------------------------------------------------------
# Kernel-size ablation


@dataclass
class AblationRow:
    kernel: int
    ade: float
    fde: float


def ablation_run(
    train_scenarios: Sequence,
    eval_scenarios: Sequence,
    config,
    kernel_sizes: Sequence[int] = (1, 2, 3, 5, 10),
    epochs: int = 10,
    **train_kwargs,
) -> list[AblationRow]:
    """Train one model per neighborhood-convolution kernel size with shared
    seed and data; evaluate each deterministically."""
    from dataclasses import replace

    from .predictor import train

    if not kernel_sizes:
        raise ConfigError("kernel_sizes must not be empty")
    rows = []
    for k in kernel_sizes:
        try:
            model, _ = train(train_scenarios, replace(config, uni_kernel=int(k)), epochs, **train_kwargs)
            report = evaluate_model(model, eval_scenarios)
        except Exception as err:
            raise type(err)(f"kernel={k}: {err}") from err
        rows.append(AblationRow(int(k), report.ade, report.fde))
    return rows
