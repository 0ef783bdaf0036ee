"""Find which product attributes drive customer ratings.

Genetic-algorithm wrapper feature selection over cross-validated regressors,
followed by Shapley attribution of the selected models.
"""

from .dataset import (ColumnSchema, DataError, EncodedDataset, PreprocessReport, RawTable,
                      SchemaError, build_dataset, build_schema, encode_and_scale,
                      filter_min_ratings, from_arrays, impute_missing, load_csv, mix_rating)
from .evaluation import FoldPlan, MetricTriple, cross_validate, make_folds, metrics
from .genetic_search import GAConfig, GAResult, HyperGenome, Individual, run_ga, tune_svr
from .regressors import RegressorSpec, TrainedModel, fit, predict
from .shapley import (ShapMatrix, SpecImportanceTable, exact_shapley, rank_features,
                      sampled_shapley, shap_matrix, spec_importance, value_function)

__version__ = "0.1.0"
