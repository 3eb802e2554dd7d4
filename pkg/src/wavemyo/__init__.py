"""Wavelet-feature EMG gesture classification with window-posterior fusion."""

from .classifier import ClassPosterior, MlpModel, TrainConfig, forward, gradient_check, init_model, train
from .features import FeatureKind, FeatureParams, FeatureVector, extract_vector
from .fusion import FusionDecision, FusionMethod, fuse, fuse_bayesian, fuse_majority, fuse_sum
from .pipeline import ExperimentConfig, ExperimentReport, feature_condition_sweep, run_experiment
from .signal_io import EmgRecording, SyntheticSpec, Window, WindowSpec, generate_synthetic, segment
from .wavelet import WaveletDecomposition, decompose, haar_step, reconstruct

__version__ = "0.1.0"

__all__ = [
    "ClassPosterior",
    "EmgRecording",
    "ExperimentConfig",
    "ExperimentReport",
    "FeatureKind",
    "FeatureParams",
    "FeatureVector",
    "FusionDecision",
    "FusionMethod",
    "MlpModel",
    "SyntheticSpec",
    "TrainConfig",
    "WaveletDecomposition",
    "Window",
    "WindowSpec",
    "decompose",
    "extract_vector",
    "feature_condition_sweep",
    "forward",
    "fuse",
    "fuse_bayesian",
    "fuse_majority",
    "fuse_sum",
    "generate_synthetic",
    "gradient_check",
    "haar_step",
    "init_model",
    "reconstruct",
    "run_experiment",
    "segment",
    "train",
]
