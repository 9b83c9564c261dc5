from .correlations import (
    Ensemble,
    VanHoveGrid,
    cross_correlate,
    displacement_average,
    noise_cross_correlate,
    sem,
    van_hove,
    van_hove_from_correlations,
)
from .error_scan import ErrorScanResult, FitResult, error_scan, fit_form, statistical_form, total_form
from .leggett_garg import ThreeMeasurementEnsemble, leggett_garg, pair_correlator
from .oracle import Oracle, lindblad_term, oracle_two_time, predicted_variance
from .spectrum import (
    DsfGrid,
    dsf,
    filter_correlations,
    fourier_cutoff,
    lowpass_matrix,
    lowpass_sites,
    q_grid,
)

__all__ = [
    "DsfGrid",
    "Ensemble",
    "ErrorScanResult",
    "FitResult",
    "Oracle",
    "ThreeMeasurementEnsemble",
    "VanHoveGrid",
    "cross_correlate",
    "displacement_average",
    "dsf",
    "error_scan",
    "filter_correlations",
    "fit_form",
    "fourier_cutoff",
    "leggett_garg",
    "lindblad_term",
    "lowpass_matrix",
    "lowpass_sites",
    "noise_cross_correlate",
    "oracle_two_time",
    "pair_correlator",
    "predicted_variance",
    "q_grid",
    "sem",
    "statistical_form",
    "total_form",
    "van_hove",
    "van_hove_from_correlations",
]
