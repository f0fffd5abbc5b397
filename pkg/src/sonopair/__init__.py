"""Dual-frequency rotational ultrasound simulation toolkit.

Simulates co-registered scanline pairs from a two-element rotational probe
(a 5.1 MHz and an 18.3 MHz transducer sharing one spin axis), renders them
to B-mode images, and packages aligned patches for image-to-image training.
"""

from .acoustics import (
    HIGH_FREQUENCY_PRESET,
    LOW_FREQUENCY_PRESET,
    MEDIUM_PRESETS,
    TISSUE,
    TRANSDUCER_PRESETS,
    WATER,
    Medium,
    Mount,
    PulseWaveform,
    TransducerSpec,
    attenuation_factor,
    axial_fwhm_m,
    envelope_fwhm_s,
    lateral_beam_fwhm,
    make_pulse,
)
from .config import (
    RunConfig,
    auto_regions,
    build_phantom,
    config_from_doc,
    config_to_doc,
    load_config,
    parse_config,
)
from .dataset import (
    FoldAssignment,
    Patch,
    PatchGrid,
    PatchSet,
    export_for_training,
    load_manifest,
    manifest_grid,
    patchify,
    patchify_array,
    read_entry_patches,
    reconstruct,
    split_folds,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateRegionError,
    ToolkitError,
    UndersampledError,
)
from .evaluate import evaluate_frame, evaluate_run, measure_wire
from .imaging import (
    BModeImage,
    ImageMeta,
    ImagePair,
    envelope,
    envelope_frame,
    image_index_to_xy,
    load_bmode,
    log_compress,
    pre_log_envelope_image,
    quantize,
    read_pgm,
    resample_rows,
    save_bmode,
    scan_convert,
    to_dataset_image,
    write_pgm,
)
from .metrics import (
    DEFAULT_SSIM,
    GLOBAL_SSIM,
    RAYLEIGH_SSNR,
    MetricsReport,
    RegionStats,
    SSIMParams,
    cnr,
    esnr_db,
    fwhm,
    mse,
    psnr_db,
    region_stats,
    rmse,
    ssim,
    ssnr,
)
from .phantom import (
    Bounds,
    Disc,
    PhantomDef,
    PillarTarget,
    RegionSpec,
    WireTarget,
    load_phantom,
    load_regions,
    make_contrast_phantom,
    make_tissue_phantom,
    make_wire_phantom,
    point_scatterers,
    region_pixels,
    save_phantom,
    save_regions,
)
from .scanner import (
    AlignmentRecord,
    PairedRFFrame,
    ProbeGeometry,
    RFFrame,
    ScanlineRay,
    line_rng,
    make_ray,
    read_rf_frame,
    scanline_angles,
    simulate_frame,
    simulate_pair,
    synthesize_rf_line,
    write_rf_frame,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
