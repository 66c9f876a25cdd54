"""Level-1 learners that combine the topological predictors."""
from .binning import Binner
from .linear import LogisticRegression, Standardizer
from .smote import smote_balance
from .svm import SVC, platt, smo
from .trees import GradientBoosting, RandomForest
from .tuning import (ALGORITHMS, FIXED, HyperGrid, TrainedStacker, cross_validate, load_model,
                     make_model, model_scores, predict_scores, save_model, save_stacker,
                     stratified_folds, train_stacker)

__all__ = [
    "Binner", "LogisticRegression", "Standardizer", "smote_balance", "SVC", "platt", "smo",
    "GradientBoosting", "RandomForest", "ALGORITHMS", "FIXED", "HyperGrid", "TrainedStacker",
    "cross_validate", "load_model", "make_model", "model_scores", "predict_scores",
    "save_model", "save_stacker", "stratified_folds", "train_stacker",
]
