"""Dynamic penalty scheduling for soft constraints in deep Q-learning."""
from .agent import AgentConfig, DQNAgent, evaluate_policy
from .constraints import ConstraintSet, evaluate_residuals, ks_aggregate, vehicle_constraints
from .envs import ACTION_GRID, RegressionTarget, VehicleEnv, reward, target_value_1d
from .mlp import Adam, LayerSpec, Network, SGD, mlp_layers, mse_loss
from .penalty import Dynamic, Linear, PenaltySchedule, ScheduleEvent, Uniform, penalty_value
from .replay import ReplayBuffer, Transition

__version__ = "0.1.0"
