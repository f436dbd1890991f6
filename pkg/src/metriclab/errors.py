"""Exception types shared across the package.

Domain errors (bad inputs, violated preconditions) map to CLI exit code 1,
verification failures (a constructed object failing its own audit) to exit 2.
"""

from __future__ import annotations


class MetricLabError(Exception):
    """Base class for all package errors."""


class MetricViolation(MetricLabError):
    """A matrix failed a metric axiom; carries the kind and a witness."""

    def __init__(self, kind: str, witness, detail: str = ""):
        self.kind = kind
        self.witness = witness
        msg = f"{kind} violated at {witness}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DiameterExceedsOne(MetricLabError):
    def __init__(self, diameter):
        self.diameter = diameter
        super().__init__(
            f"diameter {diameter} > 1; pass rescale=True to normalize"
        )


class CapExceeded(MetricLabError):
    """A configured size cap (points, subsets, product cardinality) was hit."""


class NotUltrametric(MetricLabError):
    def __init__(self, witness, violation):
        self.witness = witness
        self.violation = violation
        super().__init__(
            f"strong triangle inequality fails at triple {witness} by {violation}"
        )


class NotNested(MetricLabError):
    def __init__(self, level: int):
        self.level = level
        super().__init__(f"chain level {level} does not refine its predecessor")


class NotSeparating(MetricLabError):
    def __init__(self, pair):
        self.pair = pair
        super().__init__(
            f"deepest chain level does not separate points {pair}"
        )


class DepthOverflow(MetricLabError):
    """Requested sampling depth produces values outside float64 range."""


class ExactModeSizeExceeded(MetricLabError):
    """Full partition enumeration requested on a space above the size limit."""


class EmptyWindow(MetricLabError):
    """No (r1, r2) sample fits the requested dimension-estimation window."""


class CertificateRefused(MetricLabError):
    """No level index supports the certificate constants; carries a diagnostic."""

    def __init__(self, diagnostic: str):
        self.diagnostic = diagnostic
        super().__init__(diagnostic)


# Verification failures: exit code 2 territory.

class VerificationFailure(MetricLabError):
    """Base class for audits that fail on a constructed object."""


class CertificateViolated(VerificationFailure):
    def __init__(self, pair, inequality: str, slack):
        self.pair = pair
        self.inequality = inequality
        self.slack = slack
        super().__init__(
            f"certificate inequality '{inequality}' fails at pair {pair} (slack {slack})"
        )


class DistortionBoundsViolated(VerificationFailure):
    def __init__(self, pair, detail: str = ""):
        self.pair = pair
        super().__init__(f"distortion bounds fail at pair {pair} {detail}")


class PackingInfeasible(VerificationFailure):
    def __init__(self, level: int, required: int, capacity: int):
        self.level = level
        self.required = required
        self.capacity = capacity
        super().__init__(
            f"level {level} needs {required} child boxes but capacity is {capacity}"
        )


class BoundViolated(VerificationFailure):
    def __init__(self, pair, level: int, slack):
        self.pair = pair
        self.level = level
        self.slack = slack
        super().__init__(
            f"embedding bound fails at pair {pair} (split level {level}, slack {slack})"
        )
