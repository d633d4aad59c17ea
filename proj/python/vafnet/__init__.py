"""Feed-forward networks with trainable variable activation functions."""

from ._vafnet import (
    ApproximationError,
    Dataset,
    DivergenceError,
    Error,
    InputError,
    Network,
    Optimizer,
    ShapeError,
    TapeError,
    VafParams,
    act,
    act_deriv,
    build,
    dataset,
    init_vaf_random,
    init_vaf_specific,
    load_csv,
    loss_sse,
    max_grid_error,
    metric_accuracy,
    metric_rmse,
    parameter_count,
    run_kfold,
    run_train,
    synth_classification,
    synth_regression,
    train,
    vaf_backward,
    vaf_curve,
    vaf_forward,
)

__all__ = [name for name in dir() if not name.startswith("_")]
