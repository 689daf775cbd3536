"""Exception hierarchy shared across the package.

Every domain failure derives from DlamaError so the CLI can map it to
exit code 1; anything else escaping is a genuine bug.
"""


class DlamaError(Exception):
    """Base class for all domain errors."""


class ConfigError(DlamaError):
    """Invalid or unknown pair/region/predicate configuration."""


class QueryBuildError(DlamaError):
    """Query construction was asked for something unrepresentable."""


class TransportError(DlamaError):
    """HTTP request failed after retries."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class SparqlParseError(DlamaError):
    """Endpoint answered with something that is not a SPARQL JSON result."""


class OfflineCacheMiss(DlamaError):
    """Offline mode is on and the request is not in the cache."""


class StoreError(DlamaError):
    """A benchmark/prediction/report file is malformed.

    Carries the 1-based line number (0 = file level) so tooling can point
    at the offending record.
    """

    def __init__(self, message: str, line: int = 0, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path or '<stream>'}:{line}" if line else (path or "<stream>")
        super().__init__(f"{where}: {message}")


class EvalError(DlamaError):
    """Evaluation inputs are inconsistent (orphan records, empty sets...)."""


class PipelineError(DlamaError):
    """One or more per-predicate pipeline runs failed.

    `failures` maps (region, predicate_id) to the underlying error message.
    """

    def __init__(self, failures: dict):
        self.failures = dict(failures)
        parts = ", ".join(f"{r}/{p}: {m}" for (r, p), m in sorted(self.failures.items()))
        super().__init__(f"pipeline failures: {parts}")
