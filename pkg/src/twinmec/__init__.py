"""Digital-twin reactor startup and edge-offloading toolkit.

Two halves share one package.  The twin half tracks a pressurized-water
reactor through startup with a discrete-state filter, plans control
moves by value iteration, and predicts forward without new readings.
The network half models short-packet uplinks, split computation
offloading with twin-reported capacities, a potential game that assigns
destinations, and a small double-Q agent that learns the split ratios.
"""

from .agent import DoubleQTrainer, QNetwork, ReplayBuffer
from .channel import ChannelRealization, generate_channel, q_function, q_inv, urllc_rate
from .config import RunConfig, config_hash, load_config
from .errors import TwinmecError
from .game import GameResult, run_game, verify_potential_identity
from .offload import ComputeFleet, OffloadProfile, Task, e2e_latency, utility
from .orra import OrraEnv, evaluate_modes, train_agent
from .plant import PlantStateTable, build_dataset
from .scenario import NetworkScenario, generate_scenario
from .twin_engine import StartupTwin, phase_means
from .twin_filter import StateBelief, step_update
from .twin_model import ObservationModel, TransitionModel
from .twin_planning import plan, value_iteration

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "ComputeFleet",
    "DoubleQTrainer",
    "GameResult",
    "NetworkScenario",
    "ObservationModel",
    "OffloadProfile",
    "OrraEnv",
    "PlantStateTable",
    "QNetwork",
    "ReplayBuffer",
    "RunConfig",
    "StartupTwin",
    "StateBelief",
    "Task",
    "TransitionModel",
    "TwinmecError",
    "build_dataset",
    "config_hash",
    "e2e_latency",
    "evaluate_modes",
    "generate_channel",
    "generate_scenario",
    "load_config",
    "phase_means",
    "plan",
    "q_function",
    "q_inv",
    "run_game",
    "step_update",
    "train_agent",
    "urllc_rate",
    "utility",
    "value_iteration",
    "verify_potential_identity",
]
