from .jamming import gaussian_jam, jammer
from .pgm import (DESK_HIDDEN, TABLE_I, AttackConfig, GeneratorModel,
                  attack_config, build_generator, clip_to_budget, clip_vjp,
                  remap, sample_trigger, train_pgm)
from .targets import (AutoencoderTarget, LinearToyTarget, ModulationTarget,
                      OfdmTarget)
from .uap import SingleUap, UapTrainConfig, train_single_uap

__all__ = [
    "gaussian_jam", "jammer",
    "DESK_HIDDEN", "TABLE_I", "AttackConfig", "GeneratorModel", "attack_config",
    "build_generator", "clip_to_budget", "clip_vjp", "remap", "sample_trigger",
    "train_pgm",
    "AutoencoderTarget", "LinearToyTarget", "ModulationTarget", "OfdmTarget",
    "SingleUap", "UapTrainConfig", "train_single_uap",
]
