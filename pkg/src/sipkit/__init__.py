"""sipkit: statistical image properties, CNN-activation probing, and
rating-prediction analyses for image datasets.
"""

__version__ = "0.1.0"

from .activations import ActivationMatrix, PcaModel, fit_pca, project, read_activations
from .imgproc import (
    display_rescale,
    load_image,
    resize_bilinear,
    rgb_to_hsv,
    rgb_to_lab,
    to_grayscale,
)
from .manifest import RatingsManifest, load_manifest, rescale_ratings, subsample
from .sip_basic import (
    GEOMETRY_SIPS,
    SIP_NAMES,
    SipTable,
    SipVector,
    color_sips,
    contrast_rms,
    geometry_sips,
    luminance_entropy,
)
from .sip_cnnfilter import (
    FilterBank,
    PooledMaps,
    load_filter_bank,
    pooled_responses,
    sparseness,
    symmetry,
    variability,
)
from .sip_structure import (
    EdgeSet,
    OrientationPyramid,
    RadialSpectrum,
    build_phog,
    edge_orientation_entropy,
    extract_edges,
    fourier_sips,
    phog_sips,
    radial_spectrum,
)
from .stats import (
    CorrelationMap,
    CvScheme,
    RegressionModel,
    cv_adjusted_r2,
    forward_select,
    ols_fit,
    pattern_distance,
    spearman,
)
from .svm import SvmModel, svm_forward_select, svm_predict, svm_train

__all__ = [name for name in dir() if not name.startswith("_")]
