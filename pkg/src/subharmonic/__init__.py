"""Bloch-transform toolkit for periodic-window versus localized linear dynamics.

The package builds function spaces on nT-periodic windows and truncated
lines (``grids``), the Bloch decompositions tying them together (``bloch``),
semigroup evolution of operators with periodic coefficients (``semigroup``),
a stationary-wave and spectral-stability workbench for the Lugiato-Lefever
equation (``lle``), and window-against-line convergence experiments
(``experiments``).
"""

from . import bloch, errors, experiments, grids, lle, semigroup

from .grids import (LineFunction, LineGrid, NormTriple, PeriodicFunction,
                    PeriodicGrid, check_norm_convergence, norms_line,
                    norms_periodic, periodize, zero_extend)
from .bloch import (BlochBound, BlochFamily, bloch_frequencies, bloch_line,
                    bloch_sup_bound, bloch_torus, check_bloch_l2_continuity,
                    check_blochs_equal, inverse_bloch_line, inverse_bloch_torus)
from .semigroup import (BlochBlock, OperatorSpec, PeriodicCoefficient,
                        assemble_bloch_block, check_commutation, evolve_block,
                        evolve_line, evolve_periodic)
from .lle import (LLEParams, PeriodicWave, StabilityVerdict, bloch_spectrum,
                  evaluate_nonlinearity, linearized_operator,
                  solve_constant_state, solve_profile, stability_check)
from .experiments import (AveragingReport, ConvergenceReport, cesaro_average,
                          check_domination, run_averaged_convergence,
                          run_convergence, run_uniformity)

__version__ = "0.1.0"

__all__ = [
    "bloch", "errors", "experiments", "grids", "lle", "semigroup",
    "LineFunction", "LineGrid", "NormTriple", "PeriodicFunction", "PeriodicGrid",
    "check_norm_convergence", "norms_line", "norms_periodic", "periodize",
    "zero_extend",
    "BlochBound", "BlochFamily", "bloch_frequencies", "bloch_line",
    "bloch_sup_bound", "bloch_torus", "check_bloch_l2_continuity",
    "check_blochs_equal", "inverse_bloch_line", "inverse_bloch_torus",
    "BlochBlock", "OperatorSpec", "PeriodicCoefficient", "assemble_bloch_block",
    "check_commutation", "evolve_block", "evolve_line", "evolve_periodic",
    "LLEParams", "PeriodicWave", "StabilityVerdict", "bloch_spectrum",
    "evaluate_nonlinearity", "linearized_operator", "solve_constant_state",
    "solve_profile", "stability_check",
    "AveragingReport", "ConvergenceReport", "cesaro_average", "check_domination",
    "run_averaged_convergence", "run_convergence", "run_uniformity",
]
