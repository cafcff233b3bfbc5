from typing import List, Optional


class BergmanError(Exception):
    """Base class for every error raised by wbk."""


class EmptyDomain(BergmanError):
    """No quadrature node or sample point falls inside the domain."""


class DomainMismatch(BergmanError):
    """A point lies outside the domain an object was declared on."""


class OutOfDomain(BergmanError):
    """A closed-form oracle was evaluated outside its disc."""


class SingularGram(BergmanError):
    """Cholesky factorization failed even at the largest ridge."""


class DegenerateAnchor(BergmanError):
    """K(t,t) is at or below the solver floor."""


class InsufficientData(BergmanError):
    """Too few usable values to fit a convergence rate."""


class InvariantViolation(BergmanError):
    """A numerical invariant was broken beyond its allowed slack."""


class HypothesisViolation(BergmanError):
    """
    Spot-checks of a convergence run's hypotheses failed, so its results
    would not say anything about the limit kernel.
    """

    def __init__(self, message: str, failures: List[str] = None):
        self.failures = list(failures or [])
        summary = "; ".join(self.failures[:5])
        if len(self.failures) > 5:
            summary += f"; ... ({len(self.failures) - 5} more)"
        super().__init__(f"{message}: {summary}" if summary else message)


class ParseError(BergmanError):
    """Invalid experiment config, naming the offending field and line."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = []
        if field:
            location.append(f"field `{field}`")
        if line:
            location.append(f"line {line}")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")
