"""Utility-preserving privatization of multivariate stationary time series
via spectrum-preserving all-pass matrix filters."""

from .allpass import (
    CepstralParams,
    frf_to_coeffs,
    map_frf,
    pack,
    unitary_at,
    unitary_grid,
    unpack,
    verify_smap,
)
from .errors import (
    ConditioningError,
    ConsistencyError,
    DataError,
    FactorizationError,
    IngestError,
    InvalidLagError,
    LengthError,
    MapfiltError,
    NumericError,
    ShapeError,
)
from .factorize import RootGrid, VmaFactor, bauer_factorize, spectral_root_grid
from .pipeline import PipelineConfig, PrivatizeResult, build_context, run_privatize
from .privacy import (
    CriterionContext,
    OptimizerOptions,
    OptResult,
    grid_average,
    make_context,
    mlip,
    nfd,
    optimize,
    privacy_report,
    rum,
)
from .series import (
    AcvfSeq,
    DiffSpec,
    DiffState,
    MapFilter,
    MultiSeries,
    apply_filter,
    difference,
    forecast_extend,
    integrate,
    read_series_csv,
    sample_acvf,
    write_series_csv,
)
from .simulate import (
    ArchSpec,
    VarArchModel,
    Varma11Model,
    VarModel,
    check_stationary,
    example_var1,
    example_var_arch,
    example_varma11,
    load_model,
    model_spectrum,
    simulate_var,
    simulate_var_arch,
    simulate_varma11,
)
from .spectral import (
    FreqGrid,
    SpectralGrid,
    TaperSpec,
    acvf_from_spectrum,
    conditional_spectrum,
    default_taper,
    export_spectral_csv,
    flat_top_estimate,
    pd_truncate,
)

__version__ = "0.1.0"
