"""Adaptive linear menus: predictive search models and tree-search planning."""

from .menu import (
    SEPARATOR,
    AssociationMatrix,
    Click,
    ClickLog,
    Group,
    InteractionState,
    Location,
    MenuDesign,
    UserState,
    emit_design,
    groups,
    location_of,
    parse_design,
    validate_design,
)
from .user_model import (
    ModelParams,
    RewardVector,
    activation,
    avg_selection_time,
    interest,
    reward,
    selection_time,
    t_forage,
    t_pointing,
    t_read,
    t_recall,
    t_serial,
)
from .adaptation import (
    Adaptation,
    AddSeparator,
    InfeasibleAdaptationError,
    MoveGroup,
    MoveItem,
    NoChange,
    RemoveSeparator,
    SwapGroups,
    SwapItems,
    adaptation_from_json,
    adaptation_to_json,
    apply_adaptation,
    enumerate_adaptations,
    simulate_session,
    transition,
)
from .planner import (
    PlannerConfig,
    PlanResult,
    SearchNode,
    backpropagate,
    combine,
    expand,
    plan,
    rollout,
    select,
    uct_score,
)

__version__ = "0.1.0"
