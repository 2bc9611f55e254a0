"""Hidden quantum Markov models: joint-functional evaluation and Viterbi-type decoding."""
from .channels import (
    DensityState,
    Effect,
    HeisenbergCPMap,
    PureEffect,
    apply,
    choi_check,
    dephasing_channel,
    interpolated_channel,
    l1_coherence,
    unitary_channel,
    weak_instrument,
    x_rotation,
)
from .decoder import (
    DecodeResult,
    DecoderConfig,
    GapReport,
    classical_viterbi,
    diagonal_restricted_decode,
    eigen_ascent_decode,
    gap_and_coherence,
    grid_oracle_decode,
    pure_state_net,
    slot_operator,
)
from .io import load_model, load_observations, save_model
from .linalg import fubini_study_distance, hermitian_eig, tensor_product, top_eigenprojector
from .model import (
    ClassicalHmm,
    Convention,
    EmissionInstrument,
    GenericTransition,
    Hqmm,
    ObservationSequence,
    ProductContraction,
    block_map,
    build_qubit_memory,
    canonical_qubit_model,
    embed_classical,
    factorized_score,
    score,
)

__version__ = "0.1.0"

__all__ = [
    "DensityState",
    "Effect",
    "HeisenbergCPMap",
    "PureEffect",
    "apply",
    "choi_check",
    "dephasing_channel",
    "interpolated_channel",
    "l1_coherence",
    "unitary_channel",
    "weak_instrument",
    "x_rotation",
    "DecodeResult",
    "DecoderConfig",
    "GapReport",
    "classical_viterbi",
    "diagonal_restricted_decode",
    "eigen_ascent_decode",
    "gap_and_coherence",
    "grid_oracle_decode",
    "pure_state_net",
    "slot_operator",
    "load_model",
    "load_observations",
    "save_model",
    "fubini_study_distance",
    "hermitian_eig",
    "tensor_product",
    "top_eigenprojector",
    "ClassicalHmm",
    "Convention",
    "EmissionInstrument",
    "GenericTransition",
    "Hqmm",
    "ObservationSequence",
    "ProductContraction",
    "block_map",
    "build_qubit_memory",
    "canonical_qubit_model",
    "embed_classical",
    "factorized_score",
    "score",
]
