"""Experiment orchestration, sample accounting, and curve metrics.

The x-axis of every comparison is cumulative REAL environment samples:
synthetic replay costs zero, pre-training experience is charged as a fixed
offset before the first training episode.
"""

from __future__ import annotations

import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import cartpole, enhancer, experience, gan, policy
from .config import ExperimentConfig, validate
from .errors import CsvParseError, UsageError

DEFAULT_SEEDS = tuple(range(10))
CURVE_HEADER = "episode,reward,cumulative_samples"
_CURVE_RE = re.compile(r"curve_(?P<mode>[a-z]+)_(?P<seed>\d+)\.csv$")


@dataclass
class LearningCurve:
    mode: str
    seed: int
    rewards: np.ndarray  # per-episode reward (= episode length on CartPole)
    cumulative_samples: np.ndarray  # offset included, strictly increasing
    offset: int

    def __len__(self) -> int:
        return len(self.rewards)


@dataclass
class Aggregate:
    bins: np.ndarray  # common cumulative-sample grid
    mean: np.ndarray
    std: np.ndarray


def _env_params(config: ExperimentConfig) -> cartpole.EnvParams:
    return replace(cartpole.DEFAULT_PARAMS, max_steps=config.env_max_steps)


def _synthetic_batches(pre: enhancer.PretrainResult, config: ExperimentConfig,
                       rng: np.random.Generator, params: cartpole.EnvParams):
    for _ in range(config.synthetic_batches):
        yield gan.generate(pre.gan, config.gan_batch_size, rng, pre.stats, params)


def run_experiment(config: ExperimentConfig, return_details: bool = False):
    """One full run of the configured mode; returns its learning curve.

    Mode none trains from scratch; gan/egan first run the pre-training
    pipeline, update the policy on synthetic batches (zero real samples), and
    start the curve offset by the pre-training buffer size.  With
    return_details=True, also returns the pre-training result (None for mode
    none) and the trained agent.
    """
    validate(config)
    params = _env_params(config)
    pretrain_ss, agent_ss, train_ss = np.random.SeedSequence(config.seed).spawn(3)
    agent = policy.make_agent(
        np.random.default_rng(agent_ss),
        hidden=config.policy_hidden,
        learning_rate=config.pg_learning_rate,
        optimizer=config.pg_optimizer,
        gamma=config.pg_discount,
        update_frequency=config.pg_update_frequency,
    )
    offset = 0
    pre = None
    if config.mode in ("gan", "egan"):
        pretrain_rng = np.random.default_rng(pretrain_ss)
        pre = enhancer.pretrain_pipeline(config, pretrain_rng, params)
        offset = pre.real_samples
        policy.pretrain_on_synthetic(
            agent,
            _synthetic_batches(pre, config, pretrain_rng, params),
            learning_rate=config.pretrain_learning_rate,
        )

    train_rng = np.random.default_rng(train_ss)

    def policy_fn(state, rng):
        return policy.select_action(agent, state, rng)

    n_episodes = config.total_episodes()
    rewards = np.empty(n_episodes)
    cumulative = np.empty(n_episodes, dtype=np.int64)
    total = offset
    for ep in range(n_episodes):
        quads, length = experience.run_episode(policy_fn, train_rng, params)
        trace = policy.EpisodeTrace(
            states=np.array([q.s_t.as_array() for q in quads]),
            actions=np.array([q.a for q in quads], dtype=np.intp),
            rewards=np.array([q.r for q in quads]),
        )
        policy.record_episode(agent, trace)
        total += length
        rewards[ep] = float(sum(q.r for q in quads))
        cumulative[ep] = total
    curve = LearningCurve(config.mode, config.seed, rewards, cumulative, offset)
    if return_details:
        return curve, pre, agent
    return curve


def run_many(configs, max_workers: int | None = None) -> list[LearningCurve]:
    """Run independent experiments in parallel processes, order preserved.

    Every (config, seed) run owns its RNG streams, so concurrency cannot
    change any curve.
    """
    configs = list(configs)
    workers = max_workers or min(len(configs), os.cpu_count() or 1)
    if workers <= 1 or len(configs) <= 1:
        return [run_experiment(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_experiment, configs))


def rolling_average(rewards, window: int = 100) -> np.ndarray:
    """Trailing mean; windows shorter than `window` average what is available."""
    if window < 1:
        raise UsageError(f"window must be >= 1, got {window}")
    r = np.asarray(rewards, dtype=np.float64)
    if r.size == 0:
        return r.copy()
    csum = np.cumsum(r)
    out = np.empty_like(r)
    head = min(window, r.size)
    out[:head] = csum[:head] / np.arange(1, head + 1)
    if r.size > window:
        out[window:] = (csum[window:] - csum[:-window]) / window
    return out


def samples_to_threshold(
    curve: LearningCurve, r_star: float, window: int = 100
) -> int | None:
    """Cumulative samples (offset included) at the first rolling-average
    crossing of r_star, or None when the curve never reaches it."""
    rolled = rolling_average(curve.rewards, window)
    hits = np.nonzero(rolled >= r_star)[0]
    if hits.size == 0:
        return None
    return int(curve.cumulative_samples[hits[0]])


def aggregate_runs(
    curves, bin_width: int = 500, window: int = 100
) -> Aggregate:
    """Resample rolling-average curves onto a shared cumulative-sample grid."""
    curves = list(curves)
    if len(curves) < 2:
        raise UsageError(f"aggregation needs >= 2 curves, got {len(curves)}")
    lo = max(int(c.cumulative_samples[0]) for c in curves)
    hi = min(int(c.cumulative_samples[-1]) for c in curves)
    start = int(math.ceil(lo / bin_width)) * bin_width
    if start > hi:
        raise UsageError("curves share no common cumulative-sample range")
    bins = np.arange(start, hi + 1, bin_width, dtype=np.int64)
    resampled = np.empty((len(curves), bins.size))
    for i, c in enumerate(curves):
        rolled = rolling_average(c.rewards, window)
        resampled[i] = np.interp(bins, c.cumulative_samples, rolled)
    return Aggregate(bins=bins, mean=resampled.mean(axis=0), std=resampled.std(axis=0))


@dataclass
class SweepResult:
    pretrain_episodes: int
    episode_mean: np.ndarray  # rolling reward vs online episode number
    episode_std: np.ndarray
    samples: Aggregate  # rolling reward vs cumulative real samples
    curves: list


def sweep_pretrain_length(
    base_config: ExperimentConfig,
    lengths,
    seeds=DEFAULT_SEEDS,
    window: int = 100,
    bin_width: int = 500,
) -> list[SweepResult]:
    """Re-run the base configuration at each pre-training length over a shared
    seed set; aggregate per online episode number and per cumulative sample."""
    lengths = list(lengths)
    if not lengths:
        raise UsageError("lengths must be nonempty")
    results = []
    for length in lengths:
        curves = [
            run_experiment(replace(base_config, pretrain_episodes=length, seed=seed))
            for seed in seeds
        ]
        rolled = np.array([rolling_average(c.rewards, window) for c in curves])
        results.append(
            SweepResult(
                pretrain_episodes=length,
                episode_mean=rolled.mean(axis=0),
                episode_std=rolled.std(axis=0),
                samples=aggregate_runs(curves, bin_width=bin_width, window=window),
                curves=curves,
            )
        )
    return results


# ---------------------------------------------------------------------------
# CSV artifacts


def curve_filename(mode: str, seed: int) -> str:
    return f"curve_{mode}_{seed}.csv"


def save_curve_csv(curve: LearningCurve, path) -> None:
    lines = [CURVE_HEADER]
    rewards = curve.rewards.tolist()
    cumulative = curve.cumulative_samples.tolist()
    for i in range(len(curve)):
        lines.append(f"{i + 1},{rewards[i]!r},{int(cumulative[i])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_curve_csv(path) -> LearningCurve:
    name = os.path.basename(str(path))
    match = _CURVE_RE.search(name)
    mode, seed = (match.group("mode"), int(match.group("seed"))) if match else ("?", -1)
    rewards, cumulative = [], []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != CURVE_HEADER:
            raise CsvParseError(str(path), 1, f"unexpected header {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise CsvParseError(str(path), line_no, "expected 3 fields")
            try:
                rewards.append(float(parts[1]))
                cumulative.append(int(parts[2]))
            except ValueError as exc:
                raise CsvParseError(str(path), line_no, str(exc)) from exc
    if not rewards:
        raise CsvParseError(str(path), 2, "curve file has no data rows")
    # episode reward equals episode length, so the offset is recoverable
    offset = cumulative[0] - int(rewards[0])
    return LearningCurve(
        mode, seed, np.array(rewards), np.array(cumulative, dtype=np.int64), offset
    )


def save_aggregate_csv(agg: Aggregate, path) -> None:
    lines = ["samples_bin,mean,std"]
    for b, m, s in zip(agg.bins.tolist(), agg.mean.tolist(), agg.std.tolist()):
        lines.append(f"{int(b)},{m!r},{s!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def find_curves(runs_dir) -> dict[str, list[LearningCurve]]:
    """All curve_<mode>_<seed>.csv files in a directory, grouped by mode."""
    groups: dict[str, list[LearningCurve]] = {}
    for name in sorted(os.listdir(runs_dir)):
        if _CURVE_RE.fullmatch(name):
            curve = load_curve_csv(os.path.join(runs_dir, name))
            groups.setdefault(curve.mode, []).append(curve)
    return groups


def _quantile(sorted_values: np.ndarray, q: float) -> float:
    """Linear-interpolated quantile that stays silent on repeated infinities."""
    pos = q * (sorted_values.size - 1)
    lo, hi = int(math.floor(pos)), int(math.ceil(pos))
    a, b = float(sorted_values[lo]), float(sorted_values[hi])
    if a == b:
        return a
    frac = pos - lo
    return a * (1.0 - frac) + b * frac


def threshold_summary(curves, r_star: float, window: int = 100) -> tuple[float, float]:
    """(median, IQR) of samples-to-threshold; unreached runs count as inf."""
    values = np.sort(
        np.array(
            [
                float(v) if (v := samples_to_threshold(c, r_star, window)) is not None
                else np.inf
                for c in curves
            ]
        )
    )
    median = _quantile(values, 0.5)
    iqr = _quantile(values, 0.75) - _quantile(values, 0.25)
    return median, iqr


def write_report(runs_dir, r_star: float, window: int = 100,
                 bin_width: int = 500) -> list[tuple[str, float, float]]:
    """Aggregate every mode found in runs_dir and emit report.csv rows."""
    groups = find_curves(runs_dir)
    if not groups:
        raise UsageError(f"no curve CSVs found in {runs_dir}")
    order = [m for m in ("none", "gan", "egan") if m in groups] + sorted(
        m for m in groups if m not in ("none", "gan", "egan")
    )
    rows = []
    for mode in order:
        curves = groups[mode]
        if len(curves) >= 2:
            try:
                agg = aggregate_runs(curves, bin_width=bin_width, window=window)
            except UsageError:
                pass  # curves too short to share a bin; report rows still apply
            else:
                save_aggregate_csv(agg, os.path.join(runs_dir, f"aggregate_{mode}.csv"))
        median, iqr = threshold_summary(curves, r_star, window)
        rows.append((mode, median, iqr))
    lines = ["mode,median_samples_to_threshold,iqr"]
    for mode, median, iqr in rows:
        lines.append(f"{mode},{median!r},{iqr!r}")
    with open(os.path.join(runs_dir, "report.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return rows
