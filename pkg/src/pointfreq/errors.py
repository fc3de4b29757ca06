"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class PointFreqError(Exception):
    """Base class for all library errors."""


class ValidationError(PointFreqError, ValueError):
    """Bad argument: wrong shape, non-finite values, out-of-range parameter."""


class ParseError(PointFreqError, ValueError):
    """A cloud or mesh file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where = f" ({where})"
        super().__init__(f"{message}{where}")


class DegenerateGeometryError(PointFreqError, ValueError):
    """Input geometry admits no meaningful answer (zero scale, zero area, ...)."""


class SpectralError(PointFreqError, RuntimeError):
    """Eigendecomposition too inaccurate to serve as a reference."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual norm {residual:.3e})"
        super().__init__(message)


class PluginError(PointFreqError, RuntimeError):
    """An external upsampler invocation failed."""

    def __init__(self, message, patch_index=None, stderr=None):
        self.patch_index = patch_index
        self.stderr = stderr
        if patch_index is not None:
            message = f"patch {patch_index}: {message}"
        if stderr:
            message = f"{message}\n--- plugin stderr ---\n{stderr.strip()}"
        super().__init__(message)
