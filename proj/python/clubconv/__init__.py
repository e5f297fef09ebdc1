"""Log-t convergence tests, convergence-club detection and club-membership probits."""

from ._clubconv import (
    ClubconvError,
    ClubPartition,
    LogTResult,
    Panel,
    ProbitFit,
    adjusted_rand_index,
    classification_table,
    convergence_test,
    default_transition_subset,
    fit_probit,
    generate_panel,
    hp_trend,
    identify_clubs,
    load_panel,
    merge_clubs,
    newey_west_lrv,
    predict_prob,
    relative_transitions,
    rescale_to_targets,
    smooth,
    transition_test,
    write_panel_wide,
)

__all__ = [
    "ClubconvError",
    "ClubPartition",
    "LogTResult",
    "Panel",
    "ProbitFit",
    "adjusted_rand_index",
    "classification_table",
    "convergence_test",
    "default_transition_subset",
    "fit_probit",
    "generate_panel",
    "hp_trend",
    "identify_clubs",
    "load_panel",
    "merge_clubs",
    "newey_west_lrv",
    "predict_prob",
    "relative_transitions",
    "rescale_to_targets",
    "smooth",
    "transition_test",
    "write_panel_wide",
]
