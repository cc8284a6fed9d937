"""Experience collection, the 10-dim encoded representation, and CSV persistence.

A transition is a quadruplet (s_t, a, s_{t+1}, r).  For the GAN it is encoded
as a vector x = x1 || x2 with x1 = (normalized s_t, action code) and
x2 = (normalized s_{t+1}, reward code), every channel mapped into [-1, 1]:

* states: per-dimension min-max scaling from the collected buffer,
* action: 0 -> -1, 1 -> +1,
* reward: r -> (r - 0.5) * 2.

The episode-done flag is not part of x; decode reconstructs it geometrically
from the successor state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cartpole
from .cartpole import CartPoleState, EnvParams, DEFAULT_PARAMS
from .errors import CsvParseError, UsageError

ENCODED_DIM = 10
HALF_DIM = 5

CSV_HEADER = "x,x_dot,theta,theta_dot,a,nx,nx_dot,ntheta,ntheta_dot,r,done"


@dataclass(frozen=True)
class ExperienceQuadruplet:
    s_t: CartPoleState
    a: int
    s_next: CartPoleState
    r: float
    done: bool


@dataclass(frozen=True)
class NormalizationStats:
    """Per-dimension state min/max, pooled over s_t and s_{t+1}."""

    state_min: np.ndarray
    state_max: np.ndarray


class ReplayBuffer:
    """Ordered transition store with honest real-sample accounting."""

    def __init__(self, capacity: int | None = None):
        self.capacity = capacity
        self.items: list[ExperienceQuadruplet] = []
        self.samples_consumed = 0  # environment steps charged to this buffer

    def __len__(self) -> int:
        return len(self.items)

    def add(self, quad: ExperienceQuadruplet, real: bool = True) -> None:
        self.items.append(quad)
        if real:
            self.samples_consumed += 1
        if self.capacity is not None and len(self.items) > self.capacity:
            del self.items[0]

    def extend(self, quads, real: bool = True) -> None:
        for q in quads:
            self.add(q, real=real)

    def stats(self) -> NormalizationStats:
        return compute_stats(self.items)


def run_episode(
    policy_fn,
    rng: np.random.Generator,
    params: EnvParams = DEFAULT_PARAMS,
    max_steps: int | None = None,
) -> tuple[list[ExperienceQuadruplet], int]:
    """Roll out one episode; policy_fn(state, rng) -> action in {0, 1}."""
    cap = params.max_steps if max_steps is None else max_steps
    state = cartpole.reset(rng, params)
    quads: list[ExperienceQuadruplet] = []
    for t in range(cap):
        action = int(policy_fn(state, rng))
        nxt, reward, done = cartpole.step(state, action, params)
        done = done or (t + 1 == cap)
        quads.append(ExperienceQuadruplet(state, action, nxt, reward, done))
        state = nxt
        if done:
            break
    return quads, len(quads)


def random_policy(state: CartPoleState, rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2))


def collect_random(
    params: EnvParams,
    n_episodes: int,
    rng: np.random.Generator,
    capacity: int | None = None,
) -> ReplayBuffer:
    """Every transition of n_episodes uniform-random-action episodes."""
    if n_episodes < 1:
        raise UsageError(f"n_episodes must be >= 1, got {n_episodes}")
    buffer = ReplayBuffer(capacity=capacity)
    for _ in range(n_episodes):
        quads, _ = run_episode(random_policy, rng, params)
        buffer.extend(quads)
    return buffer


def compute_stats(quads) -> NormalizationStats:
    if not quads:
        raise UsageError("cannot compute normalization stats of an empty buffer")
    states = np.array(
        [q.s_t.as_array() for q in quads] + [q.s_next.as_array() for q in quads]
    )
    return NormalizationStats(states.min(axis=0), states.max(axis=0))


def _scale(values: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    lo, hi = stats.state_min, stats.state_max
    span = hi - lo
    ok = span > 0
    out = np.where(ok, 2.0 * (values - lo) / np.where(ok, span, 1.0) - 1.0, values)
    return out


def _unscale(values: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    lo, hi = stats.state_min, stats.state_max
    span = hi - lo
    ok = span > 0
    return np.where(ok, (values + 1.0) / 2.0 * span + lo, values)


def encode(q: ExperienceQuadruplet, stats: NormalizationStats) -> np.ndarray:
    """Quadruplet -> 10-vector; zero-range state dims pass through unscaled."""
    x = np.empty(ENCODED_DIM)
    x[0:4] = _scale(q.s_t.as_array(), stats)
    x[4] = 1.0 if q.a == 1 else -1.0
    x[5:9] = _scale(q.s_next.as_array(), stats)
    x[9] = (q.r - 0.5) * 2.0
    return x


def encode_batch(quads, stats: NormalizationStats) -> np.ndarray:
    out = np.empty((len(quads), ENCODED_DIM))
    for i, q in enumerate(quads):
        out[i] = encode(q, stats)
    return out


def decode(
    x: np.ndarray,
    stats: NormalizationStats,
    params: EnvParams = DEFAULT_PARAMS,
) -> ExperienceQuadruplet:
    """Total inverse of encode: any 10-vector becomes a quadruplet.

    Action thresholds at 0 (ties go to action 1), reward is clamped to [0, 1]
    and rounded, done is inferred from the successor state leaving the bounds.
    """
    x = np.asarray(x, dtype=np.float64)
    s_t = CartPoleState.from_array(_unscale(x[0:4], stats))
    a = 1 if x[4] >= 0.0 else 0
    s_next = CartPoleState.from_array(_unscale(x[5:9], stats))
    raw_r = min(max(x[9] / 2.0 + 0.5, 0.0), 1.0)
    r = 1.0 if raw_r >= 0.5 else 0.0
    done = cartpole.is_terminal(s_next, params)
    return ExperienceQuadruplet(s_t, a, s_next, r, done)


def decode_batch(xs: np.ndarray, stats: NormalizationStats,
                 params: EnvParams = DEFAULT_PARAMS) -> list[ExperienceQuadruplet]:
    return [decode(row, stats, params) for row in np.atleast_2d(xs)]


def _stats_path(path) -> str:
    text = str(path)
    return (text[: -len(".csv")] if text.endswith(".csv") else text) + ".stats.csv"


def save_csv(buffer: ReplayBuffer, path) -> None:
    """Write the dataset plus a `<name>.stats.csv` sidecar of per-dim min/max."""
    lines = [CSV_HEADER]
    for q in buffer.items:
        fields = (
            [repr(float(v)) for v in q.s_t.as_array().tolist()]
            + [str(q.a)]
            + [repr(float(v)) for v in q.s_next.as_array().tolist()]
            + [repr(float(q.r)), str(int(q.done))]
        )
        lines.append(",".join(fields))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if buffer.items:
        stats = buffer.stats()
        dims = ["x", "x_dot", "theta", "theta_dot"]
        side = ["dim,min,max"]
        for name, lo, hi in zip(
            dims, stats.state_min.tolist(), stats.state_max.tolist()
        ):
            side.append(f"{name},{lo!r},{hi!r}")
        with open(_stats_path(path), "w") as fh:
            fh.write("\n".join(side) + "\n")


def load_csv(path) -> ReplayBuffer:
    buffer = ReplayBuffer()
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise CsvParseError(str(path), 1, f"unexpected header {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 11:
                raise CsvParseError(
                    str(path), line_no, f"expected 11 fields, found {len(parts)}"
                )
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise CsvParseError(str(path), line_no, str(exc)) from exc
            quad = ExperienceQuadruplet(
                s_t=CartPoleState(*vals[0:4]),
                a=int(vals[4]),
                s_next=CartPoleState(*vals[5:9]),
                r=vals[9],
                done=bool(int(vals[10])),
            )
            buffer.add(quad, real=False)
    return buffer
