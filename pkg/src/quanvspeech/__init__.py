"""Quanvolutional feature extraction for keyword spotting.

A small statevector simulator drives a quantum "convolution" over
Mel-spectrogram tiles.  The pieces compose as scikit-learn transformers::

    from sklearn.pipeline import make_pipeline
    from quanvspeech import (MelSpectrogramExtractor, QuanvTransformer,
                             FeaturePooler, SoftmaxRegression)

    clf = make_pipeline(MelSpectrogramExtractor(), QuanvTransformer(kernel=2),
                        FeaturePooler(), SoftmaxRegression())
"""

from .circuits import (
    QuantumCircuit,
    build_circuit,
    build_fixed_circuit,
    build_random_circuit,
    decode,
    encode_patch,
)
from .dsp import AudioClip, MelSpectrogramExtractor, load_wav, mel_filterbank, mel_spectrogram
from .exceptions import (
    FormatError,
    InvalidArgumentError,
    QuanvError,
    RemoteError,
    ResourceLimitError,
    StartupError,
    TransportError,
)
from .model import (
    ClassifierParams,
    FeaturePooler,
    SoftmaxRegression,
    TrainConfig,
    loss_and_grad,
    pool_features,
    train,
)
from .noise import NoiseModel, apply_noisy_circuit
from .qsim import (
    Gate,
    StateVector,
    apply_gate,
    circuit_unitary,
    expval_z,
    init_state,
    sample_measurement,
)
from .quanv import QuanvConfig, QuanvTransformer, normalize, patchify, quanv_encode

__version__ = "0.1.0"
