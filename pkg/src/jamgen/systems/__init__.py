from .autoencoder import (AeTrainConfig, AutoencoderSystem, Message,
                          build_decoder, build_encoder, evaluate_bler,
                          train_autoencoder)
from .hamming import hamming74_bler, simulate_bler
from .metrics import (Estimate, binomial_estimate, bootstrap_estimate,
                      f1_score, wilson_interval)
from .modulation import (DESK, DIGITAL_MODS, TABLE_II_FULL,
                         ClassifierTrainConfig, ModulationDataset,
                         build_classifier, classify, evaluate_accuracy,
                         gen_modulation_dataset, modulate, train_classifier)
from .ofdm import (CP, FRAME_DIM, N_BITS, N_OUT, N_SC, DetectorTrainConfig,
                   OfdmFrame, build_detector, detect_bits, evaluate_ber,
                   make_ofdm_dataset, make_ofdm_frame, sample_channel,
                   train_ofdm_detector, transmit_frames)
