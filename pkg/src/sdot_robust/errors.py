"""Exception types raised across the package."""


class SdotError(Exception):
    """Base class for domain errors (the CLI maps these to exit code 1)."""

    code = "sdot_error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class NonUnitDirection(SdotError, ValueError):
    code = "non_unit_direction"


class DimensionMismatch(SdotError, ValueError):
    code = "dimension_mismatch"


class OutsideSupport(SdotError, ValueError):
    code = "outside_support"


class NotInterior(SdotError, ValueError):
    code = "not_interior"


class NotOneDimensional(SdotError, ValueError):
    code = "not_one_dimensional"


class UnsortedAtoms(SdotError, ValueError):
    code = "unsorted_atoms"


class InvalidMeasure(SdotError, ValueError):
    code = "invalid_measure"


class NotConverged(SdotError, RuntimeError):
    code = "not_converged"

    def __init__(self, residual, iterations=None, message=None):
        self.residual = float(residual)
        self.iterations = iterations
        super().__init__(message or f"solver did not converge: residual {self.residual:.3e}")

    def to_dict(self):
        d = super().to_dict()
        d["residual"] = self.residual
        return d


class EmptyCellRank(SdotError, RuntimeError):
    code = "empty_cell_rank"

    def __init__(self, index):
        self.index = int(index)
        super().__init__(f"no sample point landed in cell {self.index}")

    def to_dict(self):
        d = super().to_dict()
        d["index"] = self.index
        return d


class InfeasibleThreshold(SdotError, ValueError):
    code = "infeasible_threshold"


class AtomCollision(SdotError, ValueError):
    code = "atom_collision"


class InsufficientContaminationMass(SdotError, ValueError):
    code = "insufficient_contamination_mass"


class WrongReferenceKind(SdotError, ValueError):
    code = "wrong_reference_kind"


class UnsupportedDimension(SdotError, ValueError):
    code = "unsupported_dimension"


class QuadratureFailure(SdotError, RuntimeError):
    code = "quadrature_failure"

    def __init__(self, error_bound, message=None):
        self.error_bound = float(error_bound)
        super().__init__(message or f"quadrature error bound {self.error_bound:.2e} above target")


class EmptyCellWarning(UserWarning):
    """An iterate of the dual ascent left a positive-weight cell without sample points."""
