"""Exception hierarchy shared by the library and the command-line driver."""

from __future__ import annotations

import numpy as np


class LamfemError(Exception):
    """Base class for all errors raised by lamfem."""


class SingularTensor(LamfemError):
    pass


class NotSymmetric(LamfemError):
    pass


class ConstitutiveError(LamfemError):
    """A material point could not be evaluated.

    ``index`` holds the flat indices of the offending points within the batch
    that was passed in, so callers can map them back to Gauss points.
    """

    def __init__(self, message: str, index=None):
        super().__init__(message)
        self.index = None if index is None else np.atleast_1d(np.asarray(index))


class NonPositiveJacobian(ConstitutiveError):
    pass


class LocalDivergence(ConstitutiveError):
    pass


class InterfaceDivergence(ConstitutiveError):
    pass


class SingularAcousticTensor(ConstitutiveError):
    pass


class DegenerateLevelSet(LamfemError):
    pass


class GlobalDivergence(LamfemError):
    pass


class MeshMismatch(LamfemError):
    pass


class ConfigError(LamfemError):
    pass
