"""Traffic grid forecasting toolkit.

Arrays are numpy; uint8 stays uint8, anything else is handled as float32.
"""

from ._core import (
    TARGET_OFFSETS,
    AlignmentError,
    ConfigError,
    Error,
    FormatError,
    IoError,
    ProtocolError,
    ShapeError,
    apply_inverse_lambda,
    apply_lambda,
    apply_mask,
    build_mask,
    compute_lambda,
    crop,
    decode,
    digest,
    encode,
    ensemble,
    make_folds,
    mean_map,
    mse,
    pad,
    predict_persistence,
    read_tensor,
    reshape_for_model,
    run_external,
    run_pipeline,
    unshape,
    write_tensor,
)

__all__ = [name for name in dir() if not name.startswith("_")]
