"""Random bits from simulated laser phase noise.

A phase-diffusing laser field is interfered with a delayed copy of itself;
the resulting beat voltage is band-passed, sampled by an 8-bit ADC, and
debiased by taking the parity of modulo-256 differences of consecutive
sample pairs.  Quantitative randomness checks (3-sigma bias and serial
correlation limits, ENT-style metrics, a five-test subset of the NIST
battery) close the loop.
"""

from .acquisition import (
    AcquisitionParams,
    SampleBlock,
    calibrate_full_scale,
    decimate,
    dequantize_midpoint,
    quantize,
    read_codes,
    write_codes,
)
from .bits import (
    BitSequence,
    final_bits,
    k_lsb_extract,
    lsb_extract,
    pack_bits,
    pairwise_subtract,
    read_bits,
    unpack_bits,
    write_bits,
)
from .errors import (
    DataError,
    DegenerateInputError,
    DelayMarginWarning,
    DiffusionResolutionWarning,
    ParameterError,
    PhaseRngError,
    SamplingMarginWarning,
)
from .laser import (
    FieldStream,
    FieldTrajectory,
    FilterParams,
    InterferometerParams,
    LaserParams,
    bandpass_filter,
    beat_voltage,
    coherence_time,
    field_autocorrelation,
    simulate_field,
)
from .pipeline import (
    RunConfig,
    RunReport,
    analyze_bits,
    analyze_file,
    emit_curves,
    generate_codes,
    load_config,
    run_pipeline,
    write_report,
)
from .randtests import (
    MultiLsbResult,
    TestEntry,
    TestReport,
    bias,
    ent_suite,
    multi_lsb_experiment,
    serial_correlation,
    sts_subset,
)
from .spectral import (
    AcfEstimate,
    SpectrumEstimate,
    acf_direct,
    acf_from_psd,
    psd_periodogram,
    psd_welch,
)

__version__ = "0.1.0"
