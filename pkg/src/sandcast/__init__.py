"""Well-tops guided, zone-modular neural-network prediction of sand fraction
from seismic attributes."""
from .ingest import (
    AttributeVolume,
    Checkshot,
    RawWellLog,
    WellLocation,
    WellLog,
    WellTops,
    depth_to_time,
    drop_missing,
    extract_trace,
    integrate,
    integrate_all,
    load_checkshots,
    load_locations,
    load_tops,
    load_volume,
    load_well_logs,
    resample_uniform,
)
from .mann import (
    BlindReport,
    MannModel,
    SingleAnn,
    compare,
    load_model,
    predict_well,
    save_model,
    train_mann,
    train_single_ann,
)
from .metrics import aem, cc, rmse, timed
from .nn import (
    MlpModel,
    TrainConfig,
    TrainTrace,
    check_capacity,
    forward,
    gradient,
    init_weights,
    select_hidden,
    train_scg,
)
from .preprocess import (
    apply_minmax,
    apply_zscore,
    fit_minmax,
    fit_zscore,
    invert_minmax,
    partition_lowo,
    segment_zones,
)
from .synth import SynthConfig, generate
from .volume import (
    extract_section,
    filter_volume,
    moving_average_filter,
    predict_volume,
    write_section,
)

__version__ = "0.1.0"
