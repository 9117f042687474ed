"""Generator-based universal adversarial perturbations against DNN wireless
receivers, with undetectability and removal defenses, at desk scale."""

from . import attack, defenses, gan, harness, nn, signal_core, systems
from .signal_core import (ChannelConfig, IqSignal, avg_power, awgn,
                          ebn0_to_noise_variance, psr_to_power_budget,
                          rotate_phase, snr_to_noise_variance)

__version__ = "0.1.0"
