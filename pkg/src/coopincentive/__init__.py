"""Optimal institutional reward and punishment for cooperation on networks."""

from .game import FitnessError, GameParams, Incentive, IncentiveKind, Selection, Strategy
from .graphs import Graph, GraphError, GraphSpec, generate, lattice2d, load_edge_list, save_edge_list
from .mc import Outcome, PopulationState, SimulationConfig, Trajectory, elementary_step, ensemble, init_state, run
from .meanfield import (
    ModelParams,
    PairState,
    UpdateRule,
    beta,
    cooperation_threshold,
    drift_rate,
    integrate,
    logistic_solution,
    slow_manifold_q,
)
from .optimal import NoInteriorOptimum, Target, UnreachableTarget, cost_closed_form, optimal_mu, theory

__version__ = "0.1.0"
