""" Exception hierarchy shared by all cryoflux modules. Every exception carries a short
machine-readable category that the command line reports on stderr. """


class CryofluxError(Exception):
    category = "error"


class ConfigurationError(CryofluxError, ValueError):
    category = "config"


class MaterialRangeError(CryofluxError, ValueError):
    category = "material-range"


class InvalidMaterialError(CryofluxError, ValueError):
    category = "invalid-material"


class ModeSearchError(CryofluxError, ArithmeticError):
    category = "mode-search"

    def __init__(self, message, n=None, bracket=None):
        super(ModeSearchError, self).__init__(message)
        self.n = n
        self.bracket = bracket


class BelowCutoffError(CryofluxError, ValueError):
    category = "below-cutoff"


class IntegrationError(CryofluxError, ArithmeticError):
    category = "integration"

    def __init__(self, message, diagnostics=None):
        super(IntegrationError, self).__init__(message)
        self.diagnostics = diagnostics or {}


class FluxInputError(CryofluxError, ValueError):
    category = "flux-input"


class NrwDegenerateError(CryofluxError, ArithmeticError):
    category = "nrw-degenerate"


class NrwDomainError(CryofluxError, ValueError):
    category = "nrw-domain"


class BranchAmbiguityError(CryofluxError, ValueError):
    category = "branch-ambiguity"

    def __init__(self, message, candidates=None):
        super(BranchAmbiguityError, self).__init__(message)
        self.candidates = candidates or []


class SearchRangeError(CryofluxError, ValueError):
    category = "search-range"


class ImpedanceSingularityError(CryofluxError, ArithmeticError):
    category = "impedance-singularity"


class MeasurementInputError(CryofluxError, ValueError):
    category = "measurement-input"


class TouchstoneParseError(CryofluxError, ValueError):
    category = "touchstone-parse"

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = "line {}: {}".format(line_number, message)
        super(TouchstoneParseError, self).__init__(message)
        self.line_number = line_number


class PipelineError(CryofluxError):
    """ Wraps a module error with the name of the pipeline that raised it. The category of the
    wrapped error is kept so that the command line still reports the root cause. """
    category = "pipeline"

    def __init__(self, pipeline, cause):
        super(PipelineError, self).__init__("[{}] {}".format(pipeline, cause))
        self.pipeline = pipeline
        self.cause = cause
        if isinstance(cause, CryofluxError):
            self.category = cause.category
