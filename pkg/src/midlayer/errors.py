"""Exception hierarchy. Every error carries the CLI exit code it maps to."""


class MidlayerError(Exception):
    code = "error"
    exit_code = 1

    def payload(self) -> dict:
        return {"error": self.code, "message": str(self)}


class ParameterError(MidlayerError, ValueError):
    """Bad or out-of-range input (also used for CLI parse failures)."""

    code = "parameter"
    exit_code = 2


class ScaleError(MidlayerError):
    """Requested computation is beyond the configured enumeration caps."""

    code = "scale"
    exit_code = 3


class ShapeError(MidlayerError):
    """Operation needs the middle-layer graph B(2d-1, d)."""

    code = "shape"
    exit_code = 4


class InvariantError(MidlayerError):
    code = "invariant"
    exit_code = 5


class CacheError(MidlayerError):
    """A persisted cache file exists but cannot be trusted."""

    code = "cache"
    exit_code = 6
