"""Defence-style investment portfolio design as a binary program.

Capability options deliver value and group into families; options fund
shared projects that carry multi-year costs. The package expands
scheduling freedom into pseudo-projects and pseudo-options, assembles
the binary program, and solves it with an embedded branch-and-bound
over a bounded-variable simplex.
"""

from .expansion import (CombinatorialLimitError, Expansion, ExpansionError,
                        HorizonOverflowError, PseudoOption, PseudoProject,
                        expand, expand_options, expand_projects, find_epoch,
                        shift_profile)
from .ilp import (BuildError, ConflictError, ConstraintRow, IlpModel,
                  build_model, export_lp, lp_text, models_equivalent,
                  parse_lp, parse_lp_text, source_key, variable_name)
from .io import (ParseError, ValidationError, from_document, load_instance,
                 to_document, write_instance)
from .model import (BudgetLine, CapabilityOption, Family, PortfolioInstance,
                    Project, Violation, validate)
from .solver import (SolveOptions, SolveResult, branch_and_bound,
                     portfolio_value, relative_gap, round_continuous, solve,
                     solve_lp_relaxation)

__version__ = "0.1.0"

__all__ = [
    "BudgetLine", "BuildError", "CapabilityOption", "CombinatorialLimitError",
    "ConflictError", "ConstraintRow", "Expansion", "ExpansionError", "Family",
    "HorizonOverflowError", "IlpModel", "ParseError", "PortfolioInstance",
    "Project", "PseudoOption", "PseudoProject", "SolveOptions", "SolveResult",
    "ValidationError", "Violation", "branch_and_bound", "build_model",
    "expand", "expand_options", "expand_projects", "export_lp",
    "find_epoch", "from_document", "load_instance", "lp_text",
    "models_equivalent", "parse_lp", "parse_lp_text", "portfolio_value",
    "relative_gap", "round_continuous", "shift_profile", "solve",
    "solve_lp_relaxation", "source_key", "to_document", "validate",
    "variable_name", "write_instance",
]
