"""Desk-scale experiments on embedded computation, predictability and autonomy in coupled systems."""

__version__ = "0.1.0"

from .automata import (
    Dfa,
    EcaRow,
    EcaRule,
    TapeConfiguration,
    TuringMachine,
    dfa_language_empty,
    dfa_reachable,
    eca_evolve,
    eca_step,
    tm_run_bounded,
    tm_step,
)
from .agent import (
    AgentSpec,
    CoupledState,
    CoupledTrace,
    EnvironmentSpec,
    check_autonomy_conditions,
    coupled_step,
    run_coupled,
)
from .embedding import build_embedded_machine, embedding_equivalence_check, ep_semi_decide
from .errors import CilabError, ConfigError, InvalidInput, MalformedMachine, PredictorInapplicable
from .info import autonomy_index, complexity_curve, environment_conditional_entropy
from .predictors import PredictorSpec, efficiency_sweep, predict, prediction_efficiency
