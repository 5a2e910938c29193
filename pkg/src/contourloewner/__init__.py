"""Contour-integral eigensolvers for nonlinear eigenvalue problems.

Block Hankel, single-point Loewner and multi-point Loewner realizations share
one set of probed resolvent samples on a quadrature contour.
"""

from .core import (ContourQuadrature, DenseProblem, EigenSolution, NlevpProblem,
                   NodeSingularError, ProbingConfig, QuadratureDataTensors,
                   SingularEvaluationError, build_contour, circle, compute_quadrature_data,
                   custom, ellipse, filter_eigenvalues_to_domain, residual_report)
from .hankel import build_hankel, hankel_eigensolver, solve_hankel
from .loewner_multi import (InterpolationScheme, build_interpolant_rom, build_multipoint,
                            default_scheme, direct_resolvent_pencil, multipoint_eigensolver,
                            solve_multipoint)
from .loewner_single import (build_single_point_pencil, single_point_eigensolver,
                             solve_single_point)
from .modal import LtiTransferSource, ModalRom, modal_truncate
from .moments import markov_moments, sigma_moments
from .realize import RankPolicy

__all__ = [name for name in dir() if not name.startswith("_")]
