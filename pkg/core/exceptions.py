"""
Error hierarchy shared by every app.

All domain errors are Django ValidationErrors so that services signal bad
input the same way model validation does; each class pins its own code.
"""
from django.core.exceptions import ValidationError


class FrameError(ValidationError):
    default_code = 'frame_error'

    def __init__(self, message, code=None, params=None, **context):
        super().__init__(message, code=code or self.default_code, params=params)
        self.context = context

    def __str__(self):
        return self.message if isinstance(self.message, str) else super().__str__()


class ParameterError(FrameError):
    default_code = 'parameter'


class AlignmentError(FrameError):
    default_code = 'alignment'


class GridDomainError(FrameError):
    default_code = 'domain'


class SpecMismatchError(FrameError):
    default_code = 'spec_mismatch'


class ResolutionError(FrameError):
    default_code = 'resolution'


class InversionError(FrameError):
    default_code = 'inversion'

    def __init__(self, message, condition=None, **context):
        super().__init__(message, condition=condition, **context)
        self.condition = condition


class ScaleError(FrameError):
    default_code = 'scale'


class UnboundednessError(FrameError):
    default_code = 'unbounded'

    def __init__(self, message, filled=0, **context):
        super().__init__(message, filled=filled, **context)
        self.filled = filled


class CertificateError(FrameError):
    default_code = 'certificate'


class AuxiliaryError(FrameError):
    default_code = 'auxiliary'
