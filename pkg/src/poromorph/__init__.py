"""poromorph: synthesis and property-conditioning of 3D porous microstructures.

The toolkit generates binary pore/solid volumes from a Gaussian latent
space, conditions them to target rock properties (porosity, absolute
permeability, mean pore and throat size) by gradual Gaussian deformation
driven by a pore-network flow simulator, and evaluates microstructures with
Minkowski-functional morphometrics and population statistics.
"""

__version__ = "0.1.0"

from .volume import (
    BINARY,
    CONTINUOUS,
    DEFAULT_VOXEL_SIZE_UM,
    SCALAR,
    SubvolumeSpec,
    VoxelVolume,
    crop_subvolumes,
    load_volume,
    save_volume,
    subvolume_count,
)
from .imageops import (
    FACE6,
    FULL26,
    Histogram,
    compute_histogram,
    connected_components,
    distance_transform_edt,
    median_filter_3d,
    multi_otsu_threshold,
    otsu_thresholds_from_histogram,
)
from .morphometrics import (
    MorphometryReport,
    euler_characteristic,
    minkowski_report,
    porosity,
    specific_surface_area,
)
from .pnm import (
    MILLIDARCY_M2,
    ExtractionParams,
    NetworkStats,
    PermeabilityResult,
    Pore,
    PoreNetwork,
    Throat,
    extract_network,
    mass_balance_check,
    network_stats,
    simulate_permeability,
    throat_conductance,
)
from .generators import GrfConfig, GrfGenerator, draw_latent, postprocess
from .neural import (
    FULL_SIZE_SPEC,
    GENERATOR_PARAMETER_TOTAL,
    NeuralGenerator,
    NeuralGeneratorSpec,
    WeightBundle,
    conv_transpose3d,
    load_weight_bundle,
    neural_generate,
    random_weight_bundle,
    save_weight_bundle,
)
from .conditioner import (
    ConditionResult,
    ConditionerConfig,
    PropertyTarget,
    combine_gaussian,
    condition,
    evaluate_property,
)
from .evaluate import (
    EvaluationReport,
    evaluate_population,
    pearson_correlation,
)
