"""poromorph-trainer: WGAN-GP training of the volumetric generator."""

__version__ = "0.1.0"

from .formats import DatasetEmptyError, load_dataset, read_vvol, write_wb1
from .losses import (
    NonFiniteGradientError,
    NonFiniteLossError,
    gradient_penalty,
    interpolate_gradient_norms,
    reference_bce_losses,
    wgan_gp_losses,
)
from .models import Discriminator, Generator, parameter_count
from .train import (
    DivergedTrainingError,
    TrainerConfig,
    TrainingResult,
    export_generator,
    train,
)
