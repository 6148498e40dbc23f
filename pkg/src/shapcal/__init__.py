"""KNN-Shapley and calibrated KNN-Shapley data valuation."""
from .dataset import (Dataset, DatasetError, FlipMask, Sample, flip_labels, load_csv, save_csv,
                      split, synth_blobs)
from .inflation import (BinSegmentation, InflationReport, RemovalCurve, bin_removal_curve,
                        inflation_metrics, segment_bins)
from .knn import (ClassScores, NeighborRanking, accuracy, knn_predict, rank_neighbors,
                  weighted_knn_predict)
from .valuation import (ValuationError, ValuationParams, ValuationVector,
                        aggregate_over_validation, cknn_shapley, exact_shapley, knn_shapley,
                        utility_knn, value_single)

__version__ = "0.1.0"
