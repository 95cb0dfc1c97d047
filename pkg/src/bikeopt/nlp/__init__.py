"""Sparse nonlinear transcription of the joint design problem and its
solver backends."""

from bikeopt.nlp.layout import DecisionLayout
from bikeopt.nlp.problem import NlpProblem, build, check_derivatives
from bikeopt.nlp.start import initial_point, heuristic_design
from bikeopt.nlp.solver import SolverOptions, SolveResult, solve
