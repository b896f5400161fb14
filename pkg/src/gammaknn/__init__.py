"""gamma-kNN: nearest-neighbor classification for imbalanced binary data."""

from .classifiers import (GammaKnnModel, Prediction, class_weighted_distance,
                          dup_knn_train, gamma_knn_classify, knn_classify,
                          make_classifier, weighted_knn_classify)
from .dataset import (DataError, Dataset, NormalizationParams, Provenance,
                      apply_normalizer, fit_normalizer, load_csv, load_keel,
                      stratified_kfold, stratified_split, subsample_minority)
from .evaluation import (EvalReport, TuningGrid, gamma_ir_sweep, run_experiment,
                         tune_gamma)
from .metrics import ConfusionCounts, confusion, f_measure, imbalance_ratio, precision_recall
from .neighbors import (GammaDistanceParams, NeighborList, class_knn_search,
                        euclidean_distance, gamma_distance)
from .sampling import SamplerConfig, Strategy, resample

__version__ = "0.1.0"
