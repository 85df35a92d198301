"""High-dimensional BB84 over rotation-invariant photon spatial modes.

The package is organized along the signal path:

* :mod:`oamqkd.modes` — physical HG/LG beam modes and quadrature checks.
* :mod:`oamqkd.states` — logical qudit states, MUB families, Born sampling.
* :mod:`oamqkd.devices` — sorter cascade, MODAN + Fourier chain, converter.
* :mod:`oamqkd.channel` — rotations, Gouy dephasing, loss, eavesdropping.
* :mod:`oamqkd.protocol` — the Monte-Carlo session engine.
* :mod:`oamqkd.cli` — JSON-config experiment runner.
"""

from .channel import (
    ChannelSpec,
    Eve,
    EveStrategy,
    FrequencyShift,
    Gouy,
    Loss,
    RandomRotation,
    Rotation,
    TimeVaryingRotation,
    apply_channel,
    apply_frequency_shift,
    apply_gouy,
    apply_loss,
    apply_rotation,
    apply_time_varying_rotation,
    eve_attack,
)
from .devices import (
    ConvertDirection,
    DeviceConfig,
    measure_b1,
    measure_b2,
    modal_convert,
    prepare_b1,
    prepare_b2,
)
from .exceptions import (
    ConfigInvalid,
    DimensionMismatch,
    GridTooCoarse,
    IndexOutOfRange,
    ParseError,
    UnsupportedDimension,
    ValidationError,
    WrongFrame,
)
from .modes import (
    BeamGeometry,
    ModeFamily,
    ModeLabel,
    SpatialGrid,
    beam_params,
    default_geometry,
    eval_mode,
    hermite_poly,
    laguerre_poly,
    mode_field,
    overlap,
    reference_grid,
)
from .protocol import (
    RoundRecord,
    SessionConfig,
    SessionStats,
    estimate_qber,
    run_session,
    sift,
)
from .states import (
    Basis,
    Frame,
    MubFamily,
    PureState,
    born_measure,
    born_probabilities,
    build_mub_family,
    fourier_unitary,
    make_b1_state,
    make_b2_state,
)

__version__ = "0.1.0"
