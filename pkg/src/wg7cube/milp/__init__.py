from .model import LinConstraint, MilpModel, MilpVar, emit_lp
from .builder import (add_invertibility_cuts, build_and, build_fbk, build_ksg,
                      build_linear_layer, build_wg7_eval, build_wgp, build_xor,
                      literal_model, model_size, round_count_fit, REFERENCE_SIZE)
from .backends import (BackendError, BackendUnavailable, CommandBackend, ScipyBackend,
                       SolveResult, Status, TrailBackend, backend_from_config,
                       bundled_cbc, solve, witness_trail)

__all__ = [
    "LinConstraint", "MilpModel", "MilpVar", "emit_lp",
    "add_invertibility_cuts", "build_and", "build_fbk", "build_ksg", "build_linear_layer",
    "build_wg7_eval", "build_wgp", "build_xor", "literal_model", "model_size",
    "round_count_fit", "REFERENCE_SIZE",
    "BackendError", "BackendUnavailable", "CommandBackend", "ScipyBackend", "SolveResult",
    "Status", "TrailBackend", "backend_from_config", "bundled_cbc", "solve", "witness_trail",
]
