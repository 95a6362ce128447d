"""Exception hierarchy for meshes, polynomial algebra, spaces and solvers"""


class AlfeldError(Exception):
    """Base class for all library errors"""


# Mesh construction and refinement


class NonConforming(AlfeldError, ValueError):
    """Cells do not meet in full shared sub-simplices"""


class DegenerateCell(AlfeldError, ValueError):
    """Cell with zero volume"""


class DimensionMismatch(AlfeldError, ValueError):
    """Inconsistent ambient or simplex dimension"""


class SplitPointOutside(AlfeldError, ValueError):
    """Split point lies outside its macro cell"""


class SplitPointOnBoundary(AlfeldError, ValueError):
    """Split point lies on the boundary of its macro cell"""


class MeshFormatError(AlfeldError, ValueError):
    """Malformed ASCII mesh file"""


# Polynomial algebra


class DegenerateChild(AlfeldError, ArithmeticError):
    """Child simplex of a split with zero volume"""


class SimplexMismatch(AlfeldError, ValueError):
    """Operands live on different simplices"""


class CellMismatch(AlfeldError, ValueError):
    """Operands live on different macro cells"""


class UnsupportedDegree(AlfeldError, ValueError):
    """Requested degree above the implemented cap"""


class DegreeMismatch(AlfeldError, ValueError):
    """Polynomial degree does not match the expected degree"""


# Local divergence solver and bubbles


class SingularNormalSystem(AlfeldError, ArithmeticError):
    """Normal system of the layer step is singular"""


class MeanNotZero(AlfeldError, ValueError):
    """Input pressure does not have zero mean"""


class DegreeTooHigh(AlfeldError, ValueError):
    """Polynomial degree above the configured cap"""


class EmptyVelocitySpace(AlfeldError, ValueError):
    """Velocity space has no degrees of freedom"""


class SingularGradientSystem(AlfeldError, ArithmeticError):
    """Gradient system defining psi/theta fields is singular"""


# Spaces and assembly


class UnsupportedKind(AlfeldError, ValueError):
    """Unknown finite element space kind"""


class DimensionRule(AlfeldError, ValueError):
    """Space kind not defined in this dimension"""


class SingularDofMatrix(AlfeldError, ArithmeticError):
    """Local DOF matrix is singular (unisolvence failure)"""


class MeshMismatch(AlfeldError, ValueError):
    """Spaces are built on different meshes"""


class NonFiniteResidual(AlfeldError, ArithmeticError):
    """A quadrature residual came out NaN or infinite"""


# Linear algebra


class NotSPD(AlfeldError, ArithmeticError):
    """Matrix is not symmetric positive definite"""


class SingularToTolerance(AlfeldError, ArithmeticError):
    """Matrix is singular to the rank-revealing tolerance"""


class MassNotSPD(AlfeldError, ArithmeticError):
    """Mass matrix of a generalized eigenproblem is not SPD"""


class SolverFailure(AlfeldError, ArithmeticError):
    """Saddle point solve failed"""


# Stokes studies


class TooFewLevels(AlfeldError, ValueError):
    """A convergence study needs at least three refinement levels"""


# Stability witnesses


class HypothesisViolated(AlfeldError, ValueError):
    """Inclusion hypothesis of the bootstrap argument does not hold"""


class FluxSystemSingular(AlfeldError, ArithmeticError):
    """Facet flux balance system cannot be solved"""
