from __future__ import annotations


class InvalidLawError(ValueError):
    """Raised when atoms/weights do not describe a finite-support law."""

    def __init__(self, *, reason: str):
        self.reason = reason
        super().__init__(f"Invalid increment law: reason={reason}")


class EmptySupportError(InvalidLawError):
    """Raised when no atom carries positive weight."""

    def __init__(self, *, atoms: list[float]):
        self.atoms = atoms
        super().__init__(reason=f"no positive weight on atoms={atoms}")


class NegativeWeightError(InvalidLawError):
    def __init__(self, *, atom: float, weight: float):
        self.atom = atom
        self.weight = weight
        super().__init__(reason=f"negative weight {weight} on atom {atom}")


class NonIntegerAtomOnLatticeError(InvalidLawError):
    def __init__(self, *, atom: float):
        self.atom = atom
        super().__init__(reason=f"lattice law has non-integer atom {atom}")


class NotLatticeError(InvalidLawError):
    """Raised when an operation defined on integer walks receives a real law."""

    def __init__(self, *, operation: str):
        self.operation = operation
        super().__init__(reason=f"{operation} requires lattice laws")


class NotCenteredError(ValueError):
    def __init__(self, *, mean: float, tolerance: float):
        self.mean = mean
        self.tolerance = tolerance
        super().__init__(f"Law is not centered: mean={mean} tolerance={tolerance}")


class MomentHypothesisViolatedError(ValueError):
    def __init__(self, *, moment: float, bound: float, alpha: float):
        self.moment = moment
        self.bound = bound
        self.alpha = alpha
        super().__init__(
            f"Moment hypothesis violated: E|X|^{alpha}={moment} exceeds A={bound}"
        )


class TargetOutOfRangeError(ValueError):
    """Raised when a tilt target is not strictly inside the reachable mean range."""

    def __init__(self, *, target: float, lower: float, upper: float):
        self.target = target
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"Tilt target out of range: target={target} admissible=({lower}, {upper})"
        )


class DegenerateScheduleError(ValueError):
    def __init__(self, *, steps: int):
        self.steps = steps
        super().__init__(f"Schedule is degenerate: all {steps} laws are single-atom")


class InfeasibleConstraintError(ValueError):
    """Raised when a band or checkpoint admits no lattice point at all."""

    def __init__(self, *, step: int, reason: str):
        self.step = step
        self.reason = reason
        super().__init__(f"Constraint infeasible: step={step} reason={reason}")


class EmptyDistributionError(RuntimeError):
    def __init__(self, *, step: int):
        self.step = step
        super().__init__(f"All probability mass annihilated at step={step}")


class ZeroProbabilityEventError(RuntimeError):
    def __init__(self, *, detail: str):
        self.detail = detail
        super().__init__(f"Conditioning event has probability zero: {detail}")


class TooLargeError(ValueError):
    def __init__(self, *, paths: int, limit: int):
        self.paths = paths
        self.limit = limit
        super().__init__(f"Enumeration too large: paths={paths} limit={limit}")


class ParityViolationError(ValueError):
    def __init__(self, *, u: int, v: int, n: int):
        self.u = u
        self.v = v
        self.n = n
        super().__init__(f"Parity violation: n + v - u must be even (u={u} v={v} n={n})")


class TiltNonConvergenceError(RuntimeError):
    """Raised when the tilt bracket collapses before the mean reaches the target."""

    def __init__(self, *, target: float, lam: float, residual: float, tol: float):
        self.target = target
        self.lam = lam
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"Tilt solve did not converge: target={target} lam={lam} residual={residual} tol={tol}"
        )
