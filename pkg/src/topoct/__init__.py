"""Topological feature pipeline for grayscale CT-like image classification.

Images become four persistence diagrams (Vietoris-Rips H0/H1/H2 on an
intensity-band feature point cloud, plus the lower-star H0 of the pixel
graph), which are embedded as square-root densities on a Hilbert sphere,
reduced by principal geodesic analysis, and classified by an RBF SVM.
"""

__version__ = "0.1.0"

from .backend import BACKEND_NAME
from .classifier import (compute_metrics, concat_features, hyperparam_search,
                         kfold_evaluate, pca_fit, pca_transform, predict,
                         svm_train)
from .config import PipelineConfig, load_config
from .filtration import (FilteredComplex, Simplex, build_lower_star,
                         build_vr_filtration, sort_simplices)
from .imaging import (FeaturePointCloud, IntensityCover, build_fpc,
                      image_to_point_cloud, load_grayscale, make_cover,
                      mask_region)
from .persistence import (betti_at, compute_persistence, lsf_zero_diagram,
                          oracle_persistence)
from .riemannian import (GridSpec, PgaModel, karcher_mean, pd_to_density,
                         pga_fit, pga_project, sphere_distance, sphere_exp,
                         sphere_log, sqrt_embed)

__all__ = [
    "BACKEND_NAME", "FeaturePointCloud", "FilteredComplex", "GridSpec",
    "IntensityCover", "PgaModel", "PipelineConfig", "Simplex", "betti_at",
    "build_fpc", "build_lower_star", "build_vr_filtration",
    "compute_metrics", "compute_persistence", "concat_features",
    "hyperparam_search", "image_to_point_cloud", "karcher_mean",
    "kfold_evaluate", "load_config", "load_grayscale", "lsf_zero_diagram",
    "make_cover", "mask_region", "oracle_persistence", "pca_fit",
    "pca_transform", "pd_to_density", "pga_fit", "pga_project", "predict",
    "sort_simplices", "sphere_distance", "sphere_exp", "sphere_log",
    "sqrt_embed", "svm_train",
]
