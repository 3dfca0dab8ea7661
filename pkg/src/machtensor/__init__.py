"""Tucker decompositions (HOSVD, HOOI) with MACH randomized sparsification."""

from .dataio import (
    MeasurementRecord,
    TensorBuildSpec,
    ingest,
    load_model,
    read_tensor,
    save_model,
    synth_cauchy_tensor,
    synth_monitoring_stream,
    write_tensor,
)
from .decomp import (
    HooiConfig,
    TuckerModel,
    accuracy,
    core_tensor,
    hooi,
    hosvd,
    reconstruct,
)
from .errors import ArgumentError, ConvergenceError, ParseError, ShapeError
from .linalg import (
    TruncatedSvd,
    leading_left_singular_vectors,
    low_rank_approx,
    truncated_svd,
)
from .mach import (
    BoundReport,
    SparsifyConfig,
    achlioptas_bounds,
    mach_hooi,
    mach_hosvd,
    min_sampling_probability,
    sparsify,
    sparsify_stream,
    theorem1_bound,
)
from .metrics import ComparisonReport, compare, pc_correlation, pearson
from .tensor import (
    DenseTensor,
    SparseTensor,
    densify,
    inner_product,
    matricize,
    mode_product,
    multi_mode_product,
    refold,
    sparsify_exact,
    tensor_norm,
)

__version__ = "0.1.0"
