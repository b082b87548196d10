"""Exception hierarchy shared by all modules."""


class FermiCloseError(Exception):
    """Base class for library errors."""


class ShapeError(FermiCloseError, ValueError):
    pass


class IndexRangeError(FermiCloseError, ValueError):
    pass


class ConstraintError(FermiCloseError, ValueError):
    """A numeric precondition (isometry, PSD, unitarity, ...) is violated."""


class EvennessError(ConstraintError):
    """A formula valid only for parity-even states/effects got an odd one."""


class ResourceGuardError(FermiCloseError, RuntimeError):
    """Requested size exceeds what the brute-force oracle is allowed to build."""


class ConfigError(FermiCloseError, ValueError):
    pass
