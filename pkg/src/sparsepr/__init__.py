"""Uniqueness checks and exact recovery for sparse phase retrieval.

Modules
-------
signal       signals, autocorrelation, collisions, sign/mirror/shift group
ensembles    Gaussian and partial Fourier ensembles, intensity measurements
complement   (k-)complement property checks and ambiguous pairs
lifted       exact l0 recovery by support enumeration and lifting
fmm          recovery from Fourier magnitude measurements
experiments  seeded Monte-Carlo experiments and trial CSV logs
io           CSV and structured-text serialization
"""
from .complement import (
    EnumerationCapError,
    ViolationCertificate,
    ambiguity_from_violation,
    has_complement_property,
    has_k_complement_property,
)
from .ensembles import (
    MeasurementEnsemble,
    explicit_ensemble,
    fourier_rows,
    gaussian_ensemble,
    intensity_measure,
    random_collision_free_signal,
    random_sparse_signal,
)
from .experiments import ExperimentConfig, TrialRecord, run_config_file, run_experiment
from .fmm import (
    FmmConditionReport,
    Verdict,
    check_fmm_conditions,
    fmm_recover,
    next_valid_N,
    recover_autocorrelation,
    signal_from_autocorrelation,
)
from .lifted import (
    NoSolutionError,
    RecoveryReport,
    Uniqueness,
    UniquenessVerdict,
    l0_recover,
    verify_uniqueness,
)
from .signal import (
    IDENTITY,
    InvarianceAction,
    RealSignal,
    autocorrelation,
    canonicalize,
    equivalent_under_invariances,
    is_collision_free,
    padded_arrangement,
    sparsity,
    support,
)

__version__ = "0.1.0"
