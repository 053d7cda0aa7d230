"""Exception hierarchy.

Input problems (bad files, invalid populations, bad arguments) derive from
:class:`InputError`; identification failures in data or population derive
from :class:`DegeneracyError`. The CLI maps the two families to distinct
exit codes.
"""
from __future__ import annotations


class IVMediationError(Exception):
    """Base class for all package errors."""


class InputError(IVMediationError, ValueError):
    """Malformed input: scenario files, CSVs, argument domains."""


class DomainError(InputError):
    """An argument is outside the domain of an operation."""


class InvalidPopulation(InputError):
    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{v.code}: {v.message}" for v in self.violations)
        super().__init__(f"invalid population ({msg})")


class ScenarioError(InputError):
    """A scenario or dataset file could not be parsed."""


class DegeneracyError(IVMediationError):
    """The data or population do not identify the requested quantity."""


class WeakInstrument(DegeneracyError):
    def __init__(self, d: int, first_stage: float):
        self.d = d
        self.first_stage = first_stage
        super().__init__(
            f"weak instrument in arm D={d}: first-stage shift {first_stage!r}"
        )


class EmptyCell(DegeneracyError):
    def __init__(self, d: int, z: int):
        self.d = d
        self.z = z
        super().__init__(f"no observations in cell D={d}, Z={z}")


class SingularDesign(DegeneracyError):
    """Collinear regressors in a least-squares fit."""


class AllReplicatesFailed(DegeneracyError):
    def __init__(self, reps: int, last_error: Exception | None = None):
        self.reps = reps
        self.last_error = last_error
        super().__init__(f"all {reps} bootstrap replicates failed (last: {last_error})")
