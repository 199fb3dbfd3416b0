"""Exception types shared across tracelab modules.

Outcomes that are legitimate experimental results (a failed hypothesis, a
non-Cauchy trace, a divergent series) are reported through result objects,
not through these exceptions.
"""


class TracelabError(Exception):
    """Base class for all tracelab errors."""


class DomainError(TracelabError, ValueError):
    """A parameter is out of range or a point lies outside the domain."""

    def __init__(self, what: str, detail: str | None = None):
        self.what = what
        self.detail = detail
        message = what if detail is None else f"{what}: {detail}"
        super().__init__(message)


class ConstructionError(TracelabError):
    """The realized U0 geometry gives a similarity ratio outside (1/2, (1+sqrt 3)/2)."""

    def __init__(self, L: float, theta0: float, H: float):
        self.L = L
        self.theta0 = theta0
        self.H = H
        super().__init__(
            f"Realized ratio L={L:.12g} for theta0={theta0:g}, H={H:g} "
            "is outside the open interval (1/2, (1+sqrt(3))/2)"
        )


class CutoffError(TracelabError, ValueError):
    """An evaluation point is inside the boundary cutoff layer."""

    def __init__(self, distance: float, cutoff: float):
        self.distance = distance
        self.cutoff = cutoff
        super().__init__(
            f"Point at boundary distance {distance:.3e} is within the cutoff {cutoff:.3e}"
        )


class ResolutionError(TracelabError):
    """The requested quantity is below what the current resolution can resolve."""


class ResourceError(TracelabError):
    """A configured budget (vertices, grid nodes) would be exceeded."""

    def __init__(self, resource: str, needed: int, budget: int):
        self.resource = resource
        self.needed = needed
        self.budget = budget
        super().__init__(f"{resource} needs {needed} but the budget is {budget}")


class EstimationError(TracelabError, ValueError):
    """Input to an estimator is degenerate (too few points, scales or decades)."""


class DegeneratePairError(TracelabError, ValueError):
    """Two samples of a double sum coincide."""

    def __init__(self, first: int, second: int):
        self.first = first
        self.second = second
        super().__init__(f"Samples {first} and {second} coincide")
