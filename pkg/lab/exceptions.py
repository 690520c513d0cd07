"""Errors raised by the lab outside of plain input validation.

Input validation (malformed MDPs, out-of-range specs, partial policies) raises
django.core.exceptions.ValidationError like any Django model clean() would.
"""


class LabError(ValueError):
    """Base class for misuse of a lab operation."""


class ShapeMismatchError(LabError):
    """Two objects that must describe the same MDP shape do not."""


class ConfigurationError(LabError):
    """A learner or experiment was configured inconsistently."""
