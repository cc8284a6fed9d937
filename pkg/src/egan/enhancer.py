"""Transition-consistency network and the KL-driven generator refinement.

The enhancer is a regression MLP from the encoded (state, action) half of a
sample to the encoded (next state, reward) half.  Once trained on real data
it acts as a fixed oracle of the environment dynamics: generated pairs are
scored by the KL divergence between the per-dimension Gaussian moments of the
generated second half (P) and of the enhancer's prediction from the generated
first half (Q).  Gradient descent on that penalty pulls the generator toward
transition-consistent samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gan as gan_mod
from . import nn
from .errors import ShapeError, UsageError
from .experience import HALF_DIM

VARIANCE_FLOOR = 1e-6


@dataclass
class EnhancerModel:
    net: nn.MlpNetwork
    opt: nn.OptimizerState
    kl_weight: float = 1.0


@dataclass
class BatchGaussian:
    mean: np.ndarray
    var: np.ndarray  # biased (/n) sample variance, floored at VARIANCE_FLOOR

    @property
    def dim(self) -> int:
        return self.mean.size


def make_enhancer(
    rng: np.random.Generator,
    hidden=(60, 60),
    learning_rate: float = 1e-3,
    kl_weight: float = 1.0,
    input_dim: int = HALF_DIM,
    output_dim: int = HALF_DIM,
) -> EnhancerModel:
    net = nn.init_network(
        [input_dim, *hidden, output_dim], ["tanh"] * (len(hidden) + 1), rng
    )
    return EnhancerModel(
        net=net, opt=nn.make_optimizer(net, "adam", learning_rate), kl_weight=kl_weight
    )


def predict(model: EnhancerModel, x1: np.ndarray) -> np.ndarray:
    out, _ = nn.forward(model.net, x1)
    return out


def enhancer_mse(model: EnhancerModel, encoded: np.ndarray) -> float:
    """Mean squared error of E(x1) against x2 over an encoded dataset."""
    data = np.atleast_2d(encoded)
    pred = predict(model, data[:, :HALF_DIM])
    return float(np.mean((pred - data[:, HALF_DIM:]) ** 2))


def train_enhancer(
    model: EnhancerModel,
    encoded: np.ndarray,
    n_steps: int,
    rng: np.random.Generator,
    batch_size: int = 64,
) -> list[float]:
    """Minimize MSE(E(x1), x2) over minibatches of encoded real samples."""
    data = np.atleast_2d(np.asarray(encoded, dtype=np.float64))
    if data.shape[0] == 0:
        raise UsageError("cannot train the enhancer on an empty dataset")
    batches = gan_mod._Minibatcher(data, batch_size, rng)
    losses = []
    for _ in range(n_steps):
        batch = batches.next()
        x1, x2 = batch[:, :HALF_DIM], batch[:, HALF_DIM:]
        pred, cache = nn.forward(model.net, x1)
        diff = pred - x2
        loss = float(np.mean(diff**2))
        grads, _ = nn.backward(model.net, cache, 2.0 * diff / diff.size)
        nn.optimizer_step(model.net, grads, model.opt)
        losses.append(loss)
    return losses


def fit_gaussian(batch: np.ndarray) -> BatchGaussian:
    """Per-dimension sample mean and biased variance, floored at 1e-6."""
    data = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if data.shape[0] < 2:
        raise UsageError(f"need >= 2 rows to fit a Gaussian, got {data.shape[0]}")
    return BatchGaussian(
        mean=data.mean(axis=0), var=np.maximum(data.var(axis=0), VARIANCE_FLOOR)
    )


def kl_diagonal_gaussian(p: BatchGaussian, q: BatchGaussian) -> float:
    """Closed-form KL(P || Q) between diagonal Gaussians, summed over dims."""
    if p.dim != q.dim:
        raise ShapeError(f"dimension mismatch: {p.dim} vs {q.dim}")
    terms = (
        0.5 * np.log(q.var / p.var)
        + (p.var + (p.mean - q.mean) ** 2) / (2.0 * q.var)
        - 0.5
    )
    return float(terms.sum())


def kl_regularizer(p_batch: np.ndarray, q_batch: np.ndarray) -> float:
    """KL between the fitted moments of two sample batches (P generated, Q target)."""
    return kl_diagonal_gaussian(fit_gaussian(p_batch), fit_gaussian(q_batch))


def kl_regularizer_with_grad(
    p_batch: np.ndarray, q_batch: np.ndarray
) -> tuple[float, np.ndarray]:
    """KL plus its gradient w.r.t. the P batch entries (Q is a constant target).

    The penalty reaches P through the fitted mean and variance only; a floored
    variance is a flat region and contributes no gradient.
    """
    p_data = np.atleast_2d(np.asarray(p_batch, dtype=np.float64))
    p = fit_gaussian(p_data)
    q = fit_gaussian(q_batch)
    kl = kl_diagonal_gaussian(p, q)
    n = p_data.shape[0]
    raw_var = p_data.var(axis=0)
    live = raw_var > VARIANCE_FLOOR
    d_mean = (p.mean - q.mean) / q.var / n
    d_var = np.where(live, -0.5 / p.var + 0.5 / q.var, 0.0)
    grad = d_mean + d_var * 2.0 * (p_data - p.mean) / n
    return kl, grad


def kl_penalty(model: EnhancerModel):
    """Regularizer closure for joint GAN updates: g_out -> (KL, d KL/d g_out)."""

    def _penalty(g_out: np.ndarray) -> tuple[float, np.ndarray]:
        target = predict(model, g_out[:, :HALF_DIM])
        kl, d_p = kl_regularizer_with_grad(g_out[:, HALF_DIM:], target)
        grad = np.zeros_like(g_out)
        grad[:, HALF_DIM:] = d_p
        return kl, grad

    return _penalty


def egan_refine(
    gan: gan_mod.GanPair,
    model: EnhancerModel,
    k: int,
    kl_weight: float,
    rng: np.random.Generator,
    n_samples: int = 6000,
    learning_rate: float = 1e-3,
) -> list[float]:
    """k rounds of: generate a test set, score its KL, step G on the penalty alone.

    The recorded history holds the (unweighted) KL of each freshly generated
    batch before that round's update.  Uses a dedicated Adam state so the
    refinement step size is independent of the adversarial learning rate.
    """
    if k < 1:
        return []
    opt = nn.make_optimizer(gan.g, "adam", learning_rate)
    history = []
    for _ in range(k):
        z = gan_mod.sample_noise(rng, n_samples, gan.noise_dim)
        g_out, cache = nn.forward(gan.g, z)
        target = predict(model, g_out[:, :HALF_DIM])
        kl, d_p = kl_regularizer_with_grad(g_out[:, HALF_DIM:], target)
        history.append(kl)
        grad = np.zeros_like(g_out)
        grad[:, HALF_DIM:] = kl_weight * d_p
        grads, _ = nn.backward(gan.g, cache, grad)
        nn.optimizer_step(gan.g, grads, opt)
    return history


def save_kl_history(history, path) -> None:
    lines = ["iter,kl"]
    for i, kl in enumerate(history, start=1):
        lines.append(f"{i},{kl!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class PretrainResult:
    gan: gan_mod.GanPair
    enhancer: EnhancerModel | None
    stats: object  # NormalizationStats of the collected buffer
    buffer: object  # the collected ReplayBuffer
    real_samples: int  # environment transitions consumed, charged to the curve
    gan_history: list = field(default_factory=list)
    enhancer_history: list = field(default_factory=list)
    kl_history: list = field(default_factory=list)


def pretrain_pipeline(config, rng: np.random.Generator, params=None) -> PretrainResult:
    """Collect random experience, train the GAN (and, for egan, the enhancer
    plus the refinement loop); returns a generator ready for sampling and the
    real-sample count the curve must be offset by."""
    from . import experience
    from .cartpole import DEFAULT_PARAMS

    if config.mode not in ("gan", "egan"):
        raise UsageError(f"pretrain_pipeline needs mode gan or egan, got {config.mode!r}")
    params = params or DEFAULT_PARAMS
    buffer = experience.collect_random(params, config.pretrain_episodes, rng)
    stats = buffer.stats()
    encoded = experience.encode_batch(buffer.items, stats)

    pair = gan_mod.make_gan(
        rng,
        noise_dim=config.noise_dim,
        g_hidden=config.g_hidden,
        d_hidden=config.d_hidden,
        learning_rate=config.gan_learning_rate,
        batch_size=config.gan_batch_size,
    )
    model = None
    enhancer_history: list[float] = []
    kl_history: list[float] = []
    if config.mode == "egan":
        model = make_enhancer(
            rng,
            hidden=config.enhancer_hidden,
            learning_rate=config.enhancer_learning_rate,
            kl_weight=config.kl_weight,
        )
    regularizer = None
    reg_weight = 0.0
    if model is not None and config.joint_update:
        # joint mode needs the enhancer ready before adversarial training
        enhancer_history = train_enhancer(
            model, encoded, config.enhancer_train_steps, rng,
            batch_size=config.gan_batch_size,
        )
        regularizer = kl_penalty(model)
        reg_weight = config.kl_weight
    gan_history = gan_mod.train_gan(
        pair,
        encoded,
        config.gan_train_steps,
        rng,
        mode=config.gan_generator_mode,
        regularizer=regularizer,
        reg_weight=reg_weight,
    )
    if model is not None:
        if not config.joint_update:
            enhancer_history = train_enhancer(
                model, encoded, config.enhancer_train_steps, rng,
                batch_size=config.gan_batch_size,
            )
        kl_history = egan_refine(
            pair,
            model,
            config.refine_iterations,
            config.kl_weight,
            rng,
            n_samples=config.refine_samples,
            learning_rate=config.refine_learning_rate,
        )
    return PretrainResult(
        gan=pair,
        enhancer=model,
        stats=stats,
        buffer=buffer,
        real_samples=buffer.samples_consumed,
        gan_history=gan_history,
        enhancer_history=enhancer_history,
        kl_history=kl_history,
    )
