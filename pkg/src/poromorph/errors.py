"""Exception hierarchy for the poromorph toolkit.

Every error raised by the library derives from :class:`PoromorphError`, so
callers can catch the whole family with one clause. Names mirror the failure
they report; docstrings state the triggering condition.
"""


class PoromorphError(Exception):
    """Base class for all poromorph errors."""


# --- volume I/O ---------------------------------------------------------

class MalformedHeaderError(PoromorphError):
    """VVOL magic/JSON header is invalid, or the payload violates the format."""


class SizeMismatchError(PoromorphError):
    """Payload length does not equal nx*ny*nz times the dtype width."""


class UnsupportedDtypeError(PoromorphError):
    """Header declares a dtype outside {u8, f32}."""


class IoFailureError(PoromorphError):
    """Filesystem write failed (unwritable path, disk error)."""


class SpecTooLargeError(PoromorphError):
    """Requested subvolume edge exceeds a dimension of the parent volume."""


# --- image operations ----------------------------------------------------

class WindowTooLargeError(PoromorphError):
    """Filter window edge 2*radius+1 exceeds the smallest volume dimension."""


class DegenerateHistogramError(PoromorphError):
    """All voxels fall in a single bin; no threshold exists."""


class AllPoreError(PoromorphError):
    """Distance transform requested with no solid voxel and exterior ignored."""


# --- pore network --------------------------------------------------------

class EmptyPorePhaseError(PoromorphError):
    """Network extraction on a volume with no pore voxels."""


class NoPoresFoundError(PoromorphError):
    """No distance-map maxima above one voxel; nothing to seed pores with."""


class EmptyNetworkError(PoromorphError):
    """Statistics requested on a network with zero pores."""


class NoPercolatingPathError(PoromorphError):
    """No connected component contains both an inlet and an outlet pore."""


class SingularSystemError(PoromorphError):
    """Pruning isolated clusters emptied the flow system."""


class SolverDivergedError(PoromorphError):
    """Conjugate gradient produced a non-finite iterate."""


# --- generators ----------------------------------------------------------

class DimMismatchError(PoromorphError):
    """Latent vector dimension does not match what the operation expects."""


class ShapeMismatchError(PoromorphError):
    """Weight tensor shapes are incompatible with the generator architecture."""


class NonFiniteActivationError(PoromorphError):
    """A forward pass produced NaN or infinity."""


class MalformedManifestError(PoromorphError):
    """WB1 magic or JSON manifest is invalid."""


class ChecksumMismatchError(PoromorphError):
    """A WB1 tensor failed its CRC32 check."""


# --- conditioning / evaluation -------------------------------------------

class EvaluationFailedError(PoromorphError):
    """Property evaluation failed (e.g. no percolating path); carries the cause."""


class GeneratorFailureError(PoromorphError):
    """The generator backend failed to produce a volume."""


class LengthMismatchError(PoromorphError):
    """Paired sequences have different lengths."""
