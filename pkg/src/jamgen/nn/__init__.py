from .layers import (Conv2d, Dense, Elu, Flatten, LeakyRelu, Model, PowerNorm,
                     Relu, Reshape, Sigmoid, Softmax, layer_from_spec, sigmoid)
from .losses import (bce_logits, bce_logits_and_grad, cross_entropy,
                     cross_entropy_and_grad, log_softmax, mse, mse_and_grad)
from .optim import Adam, AdamState, adam_step
from .io import (FORMAT_VERSION, MAGIC, load_header, load_into, load_model,
                 load_tensors, save_model, save_tensors)
from .gradcheck import check_input_gradient, check_param_gradients, numeric_grad, rel_error

__all__ = [
    "Conv2d", "Dense", "Elu", "Flatten", "LeakyRelu", "Model", "PowerNorm",
    "Relu", "Reshape", "Sigmoid", "Softmax", "layer_from_spec", "sigmoid",
    "bce_logits", "bce_logits_and_grad", "cross_entropy", "cross_entropy_and_grad",
    "log_softmax", "mse", "mse_and_grad",
    "Adam", "AdamState", "adam_step",
    "FORMAT_VERSION", "MAGIC", "load_header", "load_into", "load_model",
    "load_tensors", "save_model", "save_tensors",
    "check_input_gradient", "check_param_gradients", "numeric_grad", "rel_error",
]
