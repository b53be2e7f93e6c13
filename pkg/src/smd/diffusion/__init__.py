from .bootstrap import BootstrapConfig, bootstrap_dataset, smooth_perturbation
from .model import Adam, ScoreModel, ZeroScore, time_embedding
from .sampler import SampleDiagnostics, SamplerConfig, sample, sgld_step
from .schedule import NoiseSchedule, forward_sample
from .training import TrainConfig, TrainingError, score_matching_loss, train

__all__ = [
    "Adam", "BootstrapConfig", "NoiseSchedule", "SampleDiagnostics", "SamplerConfig",
    "ScoreModel", "TrainConfig", "TrainingError", "ZeroScore", "bootstrap_dataset",
    "forward_sample", "sample", "score_matching_loss", "sgld_step", "smooth_perturbation",
    "time_embedding", "train",
]
