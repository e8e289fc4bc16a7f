"""Quasi-realizations of stochastic processes: classical, quantum and
general cone-stable models, with constructions that separate them and
numerical witnesses for the separations."""
from .core import (
    Alphabet,
    QuasiRealization,
    ValidationReport,
    evaluate_word,
    spectrum,
    stationary_pair,
    validate,
    word_table,
    words,
    words_upto,
)
from .errors import (
    ConstructionError,
    DegenerateStationarityError,
    InvalidWordError,
    JordanStructureError,
    NumericalError,
    ParameterError,
    QuasiRealError,
    TruncationError,
    ValidityError,
)
from .realizations import (
    HiddenQuantumModel,
    PositiveRealization,
    cp_certificate,
    hmm_to_quasi,
    hqmm_to_quasi,
    sample_sequence,
)

__version__ = "0.1.0"
