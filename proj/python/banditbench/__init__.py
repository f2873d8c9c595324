"""Contextual bandit benchmarks: NeuralTS, NeuralUCB and baselines (C++ core)."""

from ._core import (
    DesignMatrix,
    NetShape,
    disjoint_encode,
    duplicate_half,
    effective_dimension,
    forward,
    grad,
    init_params,
    normalize_unit,
    ntk_matrix,
    run_episode,
    run_grid,
    theory_B,
    theory_nu,
)

__all__ = [
    "DesignMatrix",
    "NetShape",
    "disjoint_encode",
    "duplicate_half",
    "effective_dimension",
    "forward",
    "grad",
    "init_params",
    "normalize_unit",
    "ntk_matrix",
    "run_episode",
    "run_grid",
    "theory_B",
    "theory_nu",
]
