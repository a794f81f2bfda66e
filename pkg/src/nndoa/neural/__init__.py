"""From-scratch numpy networks: MLP (optionally with RBF input units) and Bayes-by-Backprop."""
from .activations import activation_apply
from .bnn import BnnModel, kl_term, predict_bnn, train_bnn
from .io import load_model, save_model
from .mlp import (DenseLayer, MlpModel, TrainConfig, forward, gradient_check, kfold_train, train,
                  train_arrays)
from .rbf import RbfParams, fit_rbf_centers

__all__ = ["BnnModel", "DenseLayer", "MlpModel", "RbfParams", "TrainConfig", "activation_apply",
           "fit_rbf_centers", "forward", "gradient_check", "kfold_train", "kl_term", "load_model",
           "predict_bnn", "save_model", "train", "train_arrays", "train_bnn"]
