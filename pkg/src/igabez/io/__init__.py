"""File formats: domain files, problem files, VTK output."""
from .domain import DomainFileError, read_domain_file, write_domain_file
from .expressions import ExpressionSyntaxError, compile_expression
from .linearize import LinearizedField, linearize_field
from .problem import ProblemFileError, ProblemSpec, read_problem_file
from .vtk import read_vtk, write_vtk

__all__ = [
    "DomainFileError", "read_domain_file", "write_domain_file",
    "ExpressionSyntaxError", "compile_expression",
    "LinearizedField", "linearize_field",
    "ProblemFileError", "ProblemSpec", "read_problem_file",
    "read_vtk", "write_vtk",
]
