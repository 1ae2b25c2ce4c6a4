"""lincnf: compile linear integer constraints to CNF and check what unit
propagation can prove about the result."""

from .cnf import CnfBuilder, PartialAssignment, unit_propagate

__all__ = ["CnfBuilder", "PartialAssignment", "unit_propagate"]
__version__ = "0.1.0"
