"""Qubit-count estimation for tabular classification datasets.

The pipeline turns a real-valued feature matrix into fixed-width bitstrings
(dimensionality reduction, mutual-information bit allocation, empirical-CDF
copula, floor discretization), measures how many bits are needed before
train/test label collisions vanish, and verifies the resulting accuracy
ceiling with a small statevector classifier.
"""

__version__ = "0.1.0"

from bitbit.data import Dataset, SplitSpec, load_csv, make_synthetic, split_train_test, validate
from bitbit.dimred import (
    FittedReducer,
    IncrementalPcaState,
    ReducerSpec,
    finalize_incremental,
    fit_reducer,
    incremental_update,
    transform,
)
from bitbit.encoder import (
    BitAllocation,
    Bitstring,
    CopulaModel,
    EncoderModel,
    ImportanceScores,
    allocate_bits,
    apply_copula,
    discretize_value,
    encode_samples,
    estimate_mutual_information,
    fit_copula,
    fit_encoder,
    load_model,
    persist_model,
)
from bitbit.coverage import (
    BitstringTable,
    CoverageMetrics,
    QubitEstimate,
    build_table,
    compute_q_y,
    majority_label,
    sweep_qubits,
    test_overlap_incidence,
    train_collision_incidence,
)
from bitbit.qsim import (
    Ansatz,
    ExactClassifier,
    QuantumModel,
    Statevector,
    TrainingBatch,
    build_exact_classifier,
    class_probabilities,
    evaluate_loss,
    predict,
    prepare_basis_state,
    rotosolve_step,
    train_sweeps,
)
from bitbit.stream import StreamConfig, stream_coverage, stream_encode, stream_fit_encoder
