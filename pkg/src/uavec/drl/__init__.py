from .agent import DdpgAgent, ReplayBuffer, Transition, compute_reward, td_targets
from .allocation import (
    V2I,
    V2U,
    ResourceAllocation,
    build_state,
    map_action_to_allocation,
)
from .nets import ActorNet, Adam, CriticNet, clone_params, numerical_gradient, soft_update

__all__ = [
    "ActorNet",
    "Adam",
    "CriticNet",
    "DdpgAgent",
    "ReplayBuffer",
    "ResourceAllocation",
    "Transition",
    "V2I",
    "V2U",
    "build_state",
    "clone_params",
    "compute_reward",
    "map_action_to_allocation",
    "numerical_gradient",
    "soft_update",
    "td_targets",
]
