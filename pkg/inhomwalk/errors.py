from __future__ import annotations


class QuadratureNonConvergenceError(RuntimeError):
    """Raised when numerical integration misses its accuracy target."""

    def __init__(self, *, operation: str, detail: str):
        self.operation = operation
        self.detail = detail
        super().__init__(f"Quadrature did not converge: operation={operation} detail={detail}")


class ZeroProbabilityError(ValueError):
    """Raised when a point probability needed as a denominator is exactly zero."""

    def __init__(self, *, n: int, y: int):
        self.n = n
        self.y = y
        super().__init__(f"Point probability is zero: n={n} y={y}")


class OutOfRegimeError(ValueError):
    def __init__(self, *, y: float, center: float, radius: float):
        self.y = y
        self.center = center
        self.radius = radius
        super().__init__(f"Point outside regime: |y - m_n| > radius (y={y} m_n={center} radius={radius})")


class DegenerateAcceptanceError(RuntimeError):
    """Raised when rejection sampling accepts too few paths to be useful."""

    def __init__(self, *, accepted_fraction: float, threshold: float):
        self.accepted_fraction = accepted_fraction
        self.threshold = threshold
        super().__init__(
            f"Rejection acceptance too low: accepted={accepted_fraction} threshold={threshold}; "
            "use importance_tilted_estimate"
        )


class NonPositiveArgumentError(ValueError):
    def __init__(self, *, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(f"Argument must be positive: {name}={value}")


class ConfigInvalidError(ValueError):
    """Raised when a scenario config file is missing or invalid."""

    def __init__(self, *, path: str, field: str, reason: str, line: int | None = None):
        self.path = path
        self.field = field
        self.reason = reason
        self.line = line
        where = f" line={line}" if line is not None else ""
        super().__init__(f"Scenario config invalid: path={path}{where} field={field} reason={reason}")


class UnknownTheoremError(KeyError):
    def __init__(self, *, theorem_id: str, known: list[str]):
        self.theorem_id = theorem_id
        self.known = known
        super().__init__(f"Unknown theorem id={theorem_id!r} known={known}")

    def __str__(self) -> str:
        return str(self.args[0])
