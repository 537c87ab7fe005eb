"""Gray-coded permanent engines and boson-sampling simulation.

The hot kernels exist as a compiled extension with a pure-Python fallback
selected at import time; :func:`backend_name` reports which one is active.
"""

from ._backend import backend_name
from .graycode import (
    NaryGrayCounter,
    binary_gray,
    changed_bit_position,
    leading_digit_blocks,
    partition,
)
from .linalg import (
    ColumnScaling,
    build_effective_matrix,
    expand_multiplicities,
    haar_random_unitary,
    scale_columns,
    unitarity_defect,
)
from .permanent import (
    PermanentResult,
    PocketAccumulator,
    binomial_update,
    pad_matrix,
    perm_batch,
    perm_bbfg,
    perm_bbfg_repeated,
    perm_multiprecision,
    perm_naive,
    perm_parallel,
    perm_ryser,
    perm_ryser_nw,
    relative_error,
)
from .fixedpoint import (
    DEFAULT_CONFIG,
    FixedPointComplex,
    FixedPointConfig,
    FixedPointOverflowError,
    fixed_complex_mul,
    perm_fixed,
    product_tree,
    to_fixed,
    worst_case_partial_sum_bound,
)
from .sampling import (
    BenchRecord,
    SampleRecord,
    brute_force_distribution,
    dilate_lossy,
    fit_T0,
    output_probability,
    predicted_sampling_time,
    sample_ideal,
    sample_lossy,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "binary_gray",
    "changed_bit_position",
    "NaryGrayCounter",
    "partition",
    "leading_digit_blocks",
    "haar_random_unitary",
    "unitarity_defect",
    "build_effective_matrix",
    "expand_multiplicities",
    "scale_columns",
    "ColumnScaling",
    "PermanentResult",
    "PocketAccumulator",
    "perm_naive",
    "perm_ryser",
    "perm_ryser_nw",
    "perm_bbfg",
    "pad_matrix",
    "perm_bbfg_repeated",
    "perm_parallel",
    "perm_batch",
    "perm_multiprecision",
    "binomial_update",
    "relative_error",
    "FixedPointConfig",
    "FixedPointComplex",
    "FixedPointOverflowError",
    "DEFAULT_CONFIG",
    "to_fixed",
    "fixed_complex_mul",
    "product_tree",
    "perm_fixed",
    "worst_case_partial_sum_bound",
    "SampleRecord",
    "BenchRecord",
    "output_probability",
    "brute_force_distribution",
    "sample_ideal",
    "dilate_lossy",
    "sample_lossy",
    "predicted_sampling_time",
    "fit_T0",
    "__version__",
]
