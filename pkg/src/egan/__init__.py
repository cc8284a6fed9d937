"""Synthetic experience replay for pre-training a CartPole policy-gradient agent.

A generator/discriminator pair learns the joint distribution of encoded
(state, action, next state, reward) transitions collected by a random policy;
an optional transition-consistency network refines the generator with a
moment-matching KL penalty; the resulting samples pre-train a REINFORCE agent
before it touches the real environment.
"""

from .cartpole import CartPoleState, EnvParams, reset, step
from .config import ExperimentConfig, load_config, validate
from .enhancer import (
    EnhancerModel,
    egan_refine,
    fit_gaussian,
    kl_regularizer,
    make_enhancer,
    pretrain_pipeline,
    train_enhancer,
)
from .experience import (
    ExperienceQuadruplet,
    ReplayBuffer,
    collect_random,
    decode,
    encode,
    load_csv,
    run_episode,
    save_csv,
)
from .gan import GanPair, gan_value, generate, make_gan, sample_noise, train_gan
from .harness import (
    LearningCurve,
    aggregate_runs,
    rolling_average,
    run_experiment,
    samples_to_threshold,
    sweep_pretrain_length,
)
from .nn import MlpNetwork, backward, forward, init_network, optimizer_step
from .policy import (
    PolicyAgent,
    discounted_returns,
    make_agent,
    pretrain_on_synthetic,
    select_action,
    update_on_episodes,
)

__version__ = "0.1.0"
