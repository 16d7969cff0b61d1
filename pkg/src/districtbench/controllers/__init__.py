from .baselines import Controller, NoControlController, RandomController, RuleBasedController, rbc_act
from .nets import MLP, Adam, HistoryStack, RunningNorm
from .policy import CheckpointError, NeuralPolicy
from .ppo import PPOConfig, PPOLearner, gae_advantages, ppo_actor_loss, value_loss
from .sac import ReplayBuffer, SACConfig, SACLearner, sac_actor_loss, sac_critic_loss, temperature_loss
from .training import (
    ALGORITHMS,
    AlgorithmSpec,
    BaselineCache,
    RunResult,
    Schedule,
    VecEnv,
    evaluate,
    make_controller,
    make_model,
    run_episode,
    train_run,
)

__all__ = [
    "ALGORITHMS", "Adam", "AlgorithmSpec", "BaselineCache", "CheckpointError", "Controller", "HistoryStack",
    "MLP", "NeuralPolicy", "NoControlController", "PPOConfig", "PPOLearner", "RandomController", "ReplayBuffer",
    "RuleBasedController", "RunResult", "RunningNorm", "SACConfig", "SACLearner", "Schedule", "VecEnv",
    "evaluate", "gae_advantages", "make_controller", "make_model", "ppo_actor_loss", "rbc_act", "run_episode",
    "sac_actor_loss", "sac_critic_loss", "temperature_loss", "train_run", "value_loss",
]
