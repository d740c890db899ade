"""Unsupervised pool-based active learning for linear regression.

Selection strategies (RS, GSx, RD, P-ALICE, IRD, ID), the linear models used
to evaluate them (ridge, LASSO, linear SVR, OLS), performance metrics with
rank-based significance testing, and a deterministic experiment harness.
"""

__version__ = "0.1.0"

from .dataset import (Dataset, NormStats, RawDataset, Split, load_csv,
                      load_dataset, load_registry, normalize, one_hot_encode,
                      split_pool_test)
from .harness import (ExperimentConfig, ResultRecord, Summary, emit,
                      read_results_csv, run_and_emit, run_experiment,
                      summarize)
from .metrics import (CurvePoint, PairwiseTestResult, auc, cc, dunn_fdr,
                      normalize_auc, percentage_improvement, rmse)
from .numerics import (Hyperplane, KMeansResult, PCAModel,
                       hyperplane_through_points, kmeans,
                       mean_sq_distance_root, pca_fit, pca_transform,
                       point_manifold_distance)
from .regressors import (LinearModel, RegConfig, fit, fit_lasso,
                         fit_linear_svr, fit_ols, fit_ridge, predict)
from .selectors import (IRDConfig, Selection, SelectionHistory, ird_case_equal,
                        ird_case_greater, ird_case_less, ird_objective,
                        palice_bias, rd_score, select, select_gsx, select_id,
                        select_ird, select_palice, select_random, select_rd)

__all__ = [name for name in dir() if not name.startswith("_")]
