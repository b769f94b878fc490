"""Trajectory model: interaction pipeline, GCN/TCN backbone, mixture head.

Per observed frame the interaction pipeline (inverse-distance kernel,
category attention, neighborhood convolution) produces a fused interaction
matrix which drives a residual graph convolution over node features. A
temporal convolution plus a learned time-axis resize maps the observed
horizon to the prediction horizon, and linear heads emit bivariate
Gaussian-mixture parameters per agent per future step. Training minimizes
the negative log-likelihood of the observed future with plain SGD.

Coordinates are handled relative to each agent's last observed position;
predictions and samples are shifted back before any metric sees them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import hga, numerics as nm, uni
from .errors import CheckpointError, ConfigError, ContractError, NumericError, ShapeError
from .numerics import ParamSet, Tensor
from .trajdata import Scenario, build_stc_graph

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and sizing knobs.

    ``n_max`` bounds how many agents a category embedding can absorb and
    ``n_categories`` sizes the category table; both are normally derived
    from the dataset at training time.
    """

    t_obs: int = 4
    t_pred: int = 10
    n_categories: int = 2
    n_max: int = 8
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
    seed: int = 0

    @property
    def future_steps(self) -> int:
        return self.t_pred - self.t_obs

    def validate(self) -> None:
        if not (0 < self.t_obs < self.t_pred):
            raise ConfigError(f"need 0 < t_obs < t_pred, got {self.t_obs}/{self.t_pred}")
        if self.mixture_components < 1:
            raise ConfigError(f"mixture_components must be at least 1, got {self.mixture_components}")
        if self.n_categories < 1:
            raise ConfigError("n_categories must be at least 1")
        if self.n_max < 1:
            raise ConfigError("n_max must be at least 1")
        for name in ("d_e", "d_a", "gcn_channels", "tcn_channels", "uni_kernel", "uni_repeats", "tcn_kernel"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.gcn_layers < 1:
            raise ConfigError("gcn_layers must be at least 1")
        if self.gcn_layers > 2:
            warnings.warn(
                f"gcn_layers={self.gcn_layers}: depths beyond 2 tend to oversmooth",
                stacklevel=2,
            )
        if self.t_obs < self.tcn_kernel:
            raise ConfigError(f"t_obs={self.t_obs} is shorter than tcn_kernel={self.tcn_kernel}")
        if self.uni_conv_mode not in ("rows", "columns"):
            raise ConfigError(f"uni_conv_mode must be 'rows' or 'columns', got {self.uni_conv_mode!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, blob: Mapping) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: blob[k] for k in blob if k in known}
        return cls(**kwargs)


def build_params(config: ModelConfig) -> ParamSet:
    config.validate()
    ps = ParamSet(seed=config.seed)
    ps.add("hga.w_embed", (config.n_max * 2, config.d_e), fan_in=config.n_max * 2)
    if config.per_pair_attention:
        for c1 in range(config.n_categories):
            for c2 in range(config.n_categories):
                ps.add(f"hga.mu_{c1}_{c2}", (2 * config.d_e, config.d_a), fan_in=2 * config.d_e)
    else:
        ps.add("hga.mu", (2 * config.d_e, config.d_a), fan_in=2 * config.d_e)
    for r in range(config.uni_repeats):
        ps.add(f"uni.kernel_{r}", (config.uni_kernel,), fan_in=config.uni_kernel)
    if config.gcn_channels != 2:
        ps.add("gcn.w_in", (2, config.gcn_channels), fan_in=2)
    for layer in range(config.gcn_layers):
        ps.add(f"gcn.w_{layer}", (config.gcn_channels, config.gcn_channels), fan_in=config.gcn_channels)
        ps.add(f"gcn.b_{layer}", (config.gcn_channels,), fan_in=config.gcn_channels)
    for j in range(config.tcn_kernel):
        ps.add(f"tcn.w_{j}", (config.gcn_channels, config.tcn_channels), fan_in=config.gcn_channels * config.tcn_kernel)
    ps.add("tcn.b", (config.tcn_channels,), fan_in=config.gcn_channels * config.tcn_kernel)
    ps.add("tcn.resize", (config.future_steps, config.t_obs), fan_in=config.t_obs)
    k = config.mixture_components
    ch = config.tcn_channels
    ps.add("head.w_pi", (ch, k), fan_in=ch)
    ps.add("head.b_pi", (k,), fan_in=ch)
    ps.add("head.w_mu", (ch, 2 * k), fan_in=ch)
    ps.add("head.b_mu", (2 * k,), fan_in=ch)
    ps.add("head.w_sigma", (ch, 2 * k), fan_in=ch)
    ps.add("head.b_sigma", (2 * k,), fan_in=ch, offset=config.sigma_bias)
    ps.add("head.w_rho", (ch, k), fan_in=ch)
    ps.add("head.b_rho", (k,), fan_in=ch)
    return ps


# ---------------------------------------------------------------------------
# Mixture parameters


@dataclass
class GMMParams:
    """Raw mixture outputs; weights, scales and correlations are recovered
    through softmax/exp/tanh so their invariants hold by construction."""

    pi_logits: Tensor  # (N, T, K)
    mu: Tensor  # (N, T, K, 2)
    log_sigma: Tensor  # (N, T, K, 2)
    rho_raw: Tensor  # (N, T, K)

    @property
    def n_agents(self) -> int:
        return self.pi_logits.shape[0]

    @property
    def n_steps(self) -> int:
        return self.pi_logits.shape[1]

    @property
    def components(self) -> int:
        return self.pi_logits.shape[2]

    @property
    def pi(self) -> np.ndarray:
        x = self.pi_logits.values
        e = np.exp(x - x.max(axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)

    @property
    def means(self) -> np.ndarray:
        return self.mu.values

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(self.log_sigma.values)

    @property
    def rho(self) -> np.ndarray:
        return np.tanh(self.rho_raw.values)

    def validate(self) -> None:
        pi = self.pi
        if not np.allclose(pi.sum(axis=-1), 1.0, atol=1e-9):
            raise ContractError("mixture weights do not sum to 1")
        if pi.min() < 0:
            raise ContractError("negative mixture weight")
        if self.sigma.min() <= 0:
            raise ContractError("non-positive sigma")
        if np.abs(self.rho).max() >= 1.0:
            raise ContractError("correlation outside (-1, 1)")

    @classmethod
    def from_moments(cls, pi, mu, sigma, rho) -> "GMMParams":
        pi = np.asarray(pi, dtype=np.float64)
        sigma = np.asarray(sigma, dtype=np.float64)
        rho = np.asarray(rho, dtype=np.float64)
        return cls(
            pi_logits=Tensor(np.log(pi)),
            mu=Tensor(np.asarray(mu, dtype=np.float64)),
            log_sigma=Tensor(np.log(sigma)),
            rho_raw=Tensor(np.arctanh(rho)),
        )


# ---------------------------------------------------------------------------
# Backbone operations


def gcn_forward(v: Tensor, interaction: Tensor, layers: Sequence[tuple[Tensor, Tensor]]) -> Tensor:
    """Residual graph convolution: H <- relu(H + F (H W + b)) per layer."""
    h = v
    for w, b in layers:
        if w.shape[0] != h.shape[1]:
            raise ShapeError(f"channel mismatch: features {h.shape} vs weight {w.shape}")
        h = nm.relu(nm.add(h, nm.matmul(interaction, nm.add(nm.matmul(h, w), b))))
    return h


def _shift_matrix(t_obs: int, kernel: int, tap: int) -> np.ndarray:
    # Row r of tap j reads input step r + (j - kernel//2); out-of-range reads zero.
    offset = tap - kernel // 2
    s = np.zeros((t_obs, t_obs))
    for r in range(t_obs):
        c = r + offset
        if 0 <= c < t_obs:
            s[r, c] = 1.0
    return s


def tcn_forward(
    history: Tensor,
    taps: Sequence[Tensor],
    bias: Tensor,
    resize: Tensor,
) -> Tensor:
    """Temporal convolution over the observed steps, then a learned linear
    resize from the observation horizon to the target horizon.

    ``history`` is (t_obs, n, ch); each agent's output depends only on its
    own time series. Returns (target_steps, n, out_ch).
    """
    if history.values.ndim != 3:
        raise ShapeError(f"history must be (t_obs, n, ch), got {history.shape}")
    t_obs, n, ch = history.shape
    kernel = len(taps)
    if t_obs < kernel:
        raise ConfigError(f"t_obs={t_obs} is shorter than the temporal kernel {kernel}")
    if resize.shape[1] != t_obs:
        raise ShapeError(f"resize must be (target, {t_obs}), got {resize.shape}")
    x2 = nm.reshape(history, (t_obs, n * ch))
    mixed = None
    for j, w in enumerate(taps):
        shifted = nm.matmul(Tensor(_shift_matrix(t_obs, kernel, j), _op="shift"), x2)
        rows = nm.reshape(shifted, (t_obs * n, ch))
        term = nm.matmul(rows, w)
        mixed = term if mixed is None else nm.add(mixed, term)
    out_ch = mixed.shape[1]
    z = nm.relu(nm.add(mixed, bias))
    stacked = nm.reshape(z, (t_obs, n * out_ch))
    resized = nm.matmul(resize, stacked)
    return nm.reshape(resized, (resize.shape[0], n, out_ch))


def gmm_head(
    features: Tensor,
    weights: Mapping[str, Tensor],
    n_agents: int,
    n_steps: int,
    components: int,
) -> GMMParams:
    """Linear heads over per-(step, agent) feature rows.

    ``features`` is (n_steps * n_agents, ch) in time-major order; outputs
    are rearranged agent-major.
    """
    if features.shape[0] != n_steps * n_agents:
        raise ShapeError(f"expected {n_steps * n_agents} feature rows, got {features.shape[0]}")

    def head(prefix: str, per_component: int):
        raw = nm.add(nm.matmul(features, weights[f"w_{prefix}"]), weights[f"b_{prefix}"])
        if per_component == 1:
            raw = nm.reshape(raw, (n_steps, n_agents, components))
            return nm.transpose(raw, (1, 0, 2))
        raw = nm.reshape(raw, (n_steps, n_agents, components, per_component))
        return nm.transpose(raw, (1, 0, 2, 3))

    return GMMParams(
        pi_logits=head("pi", 1),
        mu=head("mu", 2),
        log_sigma=head("sigma", 2),
        rho_raw=head("rho", 1),
    )


def nll_loss(gmm: GMMParams, truth: np.ndarray, mask: np.ndarray | None = None) -> Tensor:
    """Negative log-likelihood of the true future under the mixture.

    Summed over the masked (agent, step) pairs; divide by the mask count
    for a reportable mean. Masked pairs contribute exactly zero.
    """
    truth = np.asarray(truth, dtype=np.float64)
    n, t = gmm.n_agents, gmm.n_steps
    if truth.shape != (n, t, 2):
        raise ShapeError(f"truth must be ({n}, {t}, 2), got {truth.shape}")
    if mask is None:
        mask = np.ones((n, t), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (n, t):
        raise ShapeError(f"mask must be ({n}, {t}), got {mask.shape}")
    if not mask.any():
        raise ContractError("every (agent, step) pair is masked; empty loss")

    log_pi_full = nm.sub(
        gmm.pi_logits,
        nm.reshape(nm.logsumexp(gmm.pi_logits, axis=2), (n, t, 1)),
    )
    diff = nm.sub(Tensor(truth.reshape(n, t, 1, 2)), gmm.mu)  # (N, T, K, 2)
    dx = nm.select(diff, 0, axis=3)
    dy = nm.select(diff, 1, axis=3)
    sx = nm.select(gmm.log_sigma, 0, axis=3)
    sy = nm.select(gmm.log_sigma, 1, axis=3)
    zx = nm.mul(dx, nm.exp(nm.neg(sx)))
    zy = nm.mul(dy, nm.exp(nm.neg(sy)))
    rho = nm.tanh(gmm.rho_raw)
    one_minus = nm.sub(Tensor(1.0), nm.mul(rho, rho))
    quad = nm.sub(
        nm.add(nm.mul(zx, zx), nm.mul(zy, zy)),
        nm.mul(Tensor(2.0), nm.mul(rho, nm.mul(zx, zy))),
    )
    log_density = nm.sub(
        nm.neg(nm.add(nm.add(Tensor(LOG_2PI), nm.add(sx, sy)), nm.mul(Tensor(0.5), nm.log(one_minus)))),
        nm.div(quad, nm.mul(Tensor(2.0), one_minus)),
    )
    log_mixture = nm.logsumexp(nm.add(log_pi_full, log_density), axis=2)  # (N, T)
    kept = nm.mul(log_mixture, Tensor(mask.astype(np.float64)))
    return nm.neg(nm.reduce_sum(kept))


def sample_trajectories(gmm: GMMParams, num_samples: int, seed: int) -> np.ndarray:
    """Draw correlated bivariate samples: pick a component from the mixture
    weights, then transform two standard normals. Returns
    (num_samples, N, T, 2)."""
    if num_samples < 1:
        raise ContractError("num_samples must be at least 1")
    rng = np.random.default_rng(seed)
    pi = gmm.pi
    mu = gmm.means
    sigma = gmm.sigma
    rho = gmm.rho
    n, t, k = pi.shape
    u = rng.random((num_samples, n, t, 1))
    cdf = np.cumsum(pi, axis=-1)[None]
    comp = np.minimum((u > cdf).sum(axis=-1), k - 1)  # (S, N, T)
    z = rng.standard_normal((num_samples, n, t, 2))

    idx = comp[..., None, None]
    mu_k = np.take_along_axis(np.broadcast_to(mu, comp.shape + (k, 2)), idx, axis=3)[..., 0, :]
    sig_k = np.take_along_axis(np.broadcast_to(sigma, comp.shape + (k, 2)), idx, axis=3)[..., 0, :]
    rho_k = np.take_along_axis(np.broadcast_to(rho, comp.shape + (k,)), comp[..., None], axis=3)[..., 0]

    x = mu_k[..., 0] + sig_k[..., 0] * z[..., 0]
    y = mu_k[..., 1] + sig_k[..., 1] * (rho_k * z[..., 0] + np.sqrt(1.0 - rho_k**2) * z[..., 1])
    return np.stack([x, y], axis=-1)


def predict_deterministic(gmm: GMMParams) -> np.ndarray:
    """Mean of the highest-weight component per (agent, step); ties go to
    the lower component index."""
    pi = gmm.pi
    best = np.argmax(pi, axis=-1)  # (N, T)
    mu = gmm.means
    return np.take_along_axis(mu, best[..., None, None], axis=2)[:, :, 0, :]


# ---------------------------------------------------------------------------
# Full model


@dataclass
class StepRecord:
    """Interaction diagnostics for one observed frame."""

    kernel: np.ndarray  # E
    normalized: np.ndarray  # R
    scores: np.ndarray  # per-pair attention score vectors
    category_interaction: np.ndarray  # CI
    attention: np.ndarray  # ATT


@dataclass
class ForwardResult:
    gmm: GMMParams
    refs: np.ndarray  # (slots, 2) per-agent coordinate origin
    fused: list[Tensor]  # F per observed step
    steps: list[StepRecord] | None = None


class TrajectoryPredictor:
    """Owns the parameter set and wires the full forward pass."""

    def __init__(self, config: ModelConfig, params: ParamSet | None = None):
        config.validate()
        self.config = config
        self.params = params if params is not None else build_params(config)

    def _uni_kernels(self) -> list[Tensor]:
        return [self.params[f"uni.kernel_{r}"] for r in range(self.config.uni_repeats)]

    def _gcn_layers(self) -> list[tuple[Tensor, Tensor]]:
        return [
            (self.params[f"gcn.w_{l}"], self.params[f"gcn.b_{l}"])
            for l in range(self.config.gcn_layers)
        ]

    def _attention_weights(self):
        if self.config.per_pair_attention:
            c = self.config.n_categories
            return [self.params[f"hga.mu_{c1}_{c2}"] for c1 in range(c) for c2 in range(c)]
        return self.params["hga.mu"]

    def _check_scenario(self, scenario: Scenario) -> None:
        cfg = self.config
        if scenario.t_obs != cfg.t_obs or scenario.t_pred != cfg.t_pred:
            raise ContractError(
                f"scenario horizons {scenario.t_obs}/{scenario.t_pred} do not match "
                f"model {cfg.t_obs}/{cfg.t_pred}"
            )
        if not scenario.fully_observed():
            raise ContractError("every agent must be present throughout the observed window")
        if int(scenario.categories().max()) >= cfg.n_categories:
            raise ContractError(
                f"scenario uses category {int(scenario.categories().max())}, "
                f"model table has {cfg.n_categories}"
            )

    def forward(self, scenario: Scenario, pad: int = 0, record: bool = False) -> ForwardResult:
        """Run the interaction pipeline and heads.

        ``pad`` appends phantom agent slots with zero features, zero
        attention rows and no category membership; real-agent outputs must
        not depend on them.
        """
        self._check_scenario(scenario)
        cfg = self.config
        graph = build_stc_graph(scenario)
        n = scenario.n_agents
        slots = n + pad
        cats = scenario.categories()

        refs = np.zeros((slots, 2))
        refs[:n] = np.array([tr.positions[cfg.t_obs - 1] for tr in scenario.tracks])
        membership = [int(c) for c in cats] + [None] * pad

        mu = self._attention_weights()
        kernels = self._uni_kernels()
        layers = self._gcn_layers()

        features_over_time = []
        fused_matrices = []
        records: list[StepRecord] | None = [] if record else None
        for t in range(cfg.t_obs):
            positions = np.array([tr.positions[t] for tr in scenario.tracks])
            kernel = np.zeros((slots, slots))
            kernel[:n, :n] = hga.distance_kernel(positions)
            normalized = hga.laplacian_normalize(kernel)

            emb = hga.embed_categories(graph, t, self.params["hga.w_embed"], cfg.n_max)
            scores = hga.category_attention(emb, mu)
            importance = hga.category_importance(scores)
            ci = hga.normalize_category_interaction(importance, len(emb.categories))
            imp_matrix = nm.reshape(importance, (len(emb.categories), len(emb.categories)))

            expanded = hga.expand_to_agents(imp_matrix, membership, emb.categories)
            attention = hga.agent_attention(normalized, expanded)
            h = uni.uni_conv(attention, kernels, mode=cfg.uni_conv_mode)
            ci_expanded = hga.expand_to_agents(ci, membership, emb.categories)
            fused = uni.fuse_interaction(ci_expanded, h)
            fused_matrices.append(fused)

            v = np.zeros((slots, 2))
            v[:n] = positions - refs[:n]
            node_features = Tensor(v, _op="node_features")
            if cfg.gcn_channels != 2:
                node_features = nm.matmul(node_features, self.params["gcn.w_in"])
            hidden = gcn_forward(node_features, fused, layers)
            features_over_time.append(nm.reshape(hidden, (1, slots * cfg.gcn_channels)))

            if records is not None:
                records.append(
                    StepRecord(
                        kernel=kernel.copy(),
                        normalized=normalized.copy(),
                        scores=scores.values.copy(),
                        category_interaction=ci.values.copy(),
                        attention=attention.values.copy(),
                    )
                )

        stacked = nm.reshape(
            nm.concat(features_over_time, axis=0), (cfg.t_obs, slots, cfg.gcn_channels)
        )
        taps = [self.params[f"tcn.w_{j}"] for j in range(cfg.tcn_kernel)]
        temporal = tcn_forward(stacked, taps, self.params["tcn.b"], self.params["tcn.resize"])
        rows = nm.reshape(temporal, (cfg.future_steps * slots, cfg.tcn_channels))
        heads = {
            "w_pi": self.params["head.w_pi"],
            "b_pi": self.params["head.b_pi"],
            "w_mu": self.params["head.w_mu"],
            "b_mu": self.params["head.b_mu"],
            "w_sigma": self.params["head.w_sigma"],
            "b_sigma": self.params["head.b_sigma"],
            "w_rho": self.params["head.w_rho"],
            "b_rho": self.params["head.b_rho"],
        }
        gmm = gmm_head(rows, heads, slots, cfg.future_steps, cfg.mixture_components)
        return ForwardResult(gmm=gmm, refs=refs, fused=fused_matrices, steps=records)

    def loss(self, scenario: Scenario) -> tuple[Tensor, int]:
        """Summed NLL over the scenario's masked future and the pair count."""
        result = self.forward(scenario)
        cfg = self.config
        truth = np.stack([tr.positions[cfg.t_obs :] for tr in scenario.tracks]) - result.refs[:, None, :]
        mask = np.stack([tr.present[cfg.t_obs :] for tr in scenario.tracks])
        return nll_loss(result.gmm, truth, mask), int(mask.sum())

    def predict(self, scenario: Scenario) -> np.ndarray:
        """Deterministic trajectories in absolute coordinates, (N, T_f, 2)."""
        result = self.forward(scenario)
        return predict_deterministic(result.gmm) + result.refs[:, None, :]

    def sample(self, scenario: Scenario, num_samples: int, seed: int) -> np.ndarray:
        """Sampled trajectories in absolute coordinates, (S, N, T_f, 2)."""
        result = self.forward(scenario)
        draws = sample_trajectories(result.gmm, num_samples, seed)
        return draws + result.refs[None, :, None, :]

    def save(self, path: str, extra_config: Mapping | None = None) -> None:
        config = dict(extra_config) if extra_config else {}
        config.update(self.config.to_dict())
        nm.save_checkpoint(path, self.params, config)

    @classmethod
    def load(cls, path: str) -> tuple["TrajectoryPredictor", dict]:
        config_blob, values = nm.load_checkpoint(path)
        config = ModelConfig.from_dict(config_blob)
        model = cls(config)
        expected = set(model.params.names())
        if expected != set(values):
            missing = expected - set(values)
            surplus = set(values) - expected
            raise CheckpointError(f"{path}: parameter names mismatch (missing {missing or '{}'}, surplus {surplus or '{}'})")
        for name, arr in values.items():
            try:
                model.params.set_values(name, arr)
            except ShapeError as err:
                raise CheckpointError(f"{path}: {err}") from err
        return model, config_blob


# ---------------------------------------------------------------------------
# Training


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_nll: float
    val_ade: float
    val_fde: float


def _category_frequency_bias(scenarios: Sequence[Scenario], config: ModelConfig) -> np.ndarray:
    counts = np.zeros(config.n_categories)
    for s in scenarios:
        for tr in s.tracks:
            counts[tr.category] += 1
    freq = counts / max(counts.sum(), 1.0)
    freq = np.clip(freq, 1e-6, None)
    bias = np.zeros(config.mixture_components)
    for k in range(config.mixture_components):
        bias[k] = math.log(freq[k % config.n_categories])
    return bias


def train(
    train_scenarios: Sequence[Scenario],
    config: ModelConfig,
    epochs: int,
    val_scenarios: Sequence[Scenario] = (),
    base_lr: float = 0.005,
    lr_decay_factor: float = 0.2,
    lr_decay_every: int = 10,
    momentum: float = 0.0,
) -> tuple[TrajectoryPredictor, list[EpochRecord]]:
    """Full-scenario SGD with stepwise learning-rate decay.

    The default decay (factor 0.2 every 10 epochs) matches
    :func:`unin.numerics.lr_schedule`. History records the epoch's mean
    train NLL and the deterministic validation ADE/FDE.
    """
    from . import metrics

    if not train_scenarios:
        raise ContractError("training set is empty")
    if epochs < 1:
        raise ConfigError(f"epochs must be at least 1, got {epochs}")
    if not (0.0 < lr_decay_factor <= 1.0):
        raise ConfigError("lr_decay_factor must be in (0, 1]")
    if lr_decay_every < 1:
        raise ConfigError("lr_decay_every must be at least 1")

    model = TrajectoryPredictor(config)
    if config.category_pi_bias:
        bias = _category_frequency_bias(train_scenarios, config)
        model.params.set_values("head.b_pi", model.params["head.b_pi"].values + bias)

    velocity: dict[str, np.ndarray] = {}
    history: list[EpochRecord] = []
    for epoch in range(epochs):
        lr = base_lr * lr_decay_factor ** (epoch // lr_decay_every)
        total_nll = 0.0
        total_count = 0
        for index, scenario in enumerate(train_scenarios):
            try:
                loss, count = model.loss(scenario)
                grads = nm.backward(loss, model.params)
            except NumericError as err:
                raise NumericError(f"epoch {epoch}, scenario {index}: {err}") from err
            total_nll += loss.item()
            total_count += count
            if momentum > 0.0:
                for name, p in model.params.items():
                    g = grads[name].values
                    v = velocity.get(name)
                    v = g if v is None else momentum * v + g
                    velocity[name] = v
                    model.params.set_values(name, p.values - lr * v)
            else:
                nm.sgd_step(model.params, grads, lr)

        if val_scenarios:
            val = metrics.evaluate_model(model, val_scenarios)
            val_ade, val_fde = val.ade, val.fde
        else:
            val_ade = val_fde = float("nan")
        history.append(EpochRecord(epoch, lr, total_nll / total_count, val_ade, val_fde))
    return model, history
