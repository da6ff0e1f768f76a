"""Exception hierarchy shared by all modules."""


class HMCFError(Exception):
    """Base class for every error raised by the package."""


class NonFiniteField(HMCFError):
    pass


class MetricDegenerate(HMCFError):
    """Metric determinant fell to or below the floor; signals collapse."""

    def __init__(self, point, det):
        self.point = tuple(int(i) for i in point)
        self.det = float(det)
        super().__init__(f"metric degenerate at {self.point}: det={self.det:.3e}")


class DegenerateFrame(HMCFError):
    pass


class DomainError(HMCFError, ValueError):
    pass


class StepSizeUnderflow(HMCFError):
    def __init__(self, t, h):
        self.t = float(t)
        self.h = float(h)
        super().__init__(f"step size underflow at t={self.t!r} (h={self.h:.3e})")


class CollapseDetected(HMCFError):
    """Raised by the stepper when the new level has a degenerate metric.

    ``t_bracket`` holds the last healthy time and the failing time.
    """

    def __init__(self, t_bracket, det=None):
        self.t_bracket = (float(t_bracket[0]), float(t_bracket[1]))
        self.det = det
        super().__init__(f"collapse in [{self.t_bracket[0]:.8g}, {self.t_bracket[1]:.8g}]")


class BlowUpDetected(HMCFError):
    def __init__(self, t, h_max):
        self.t = float(t)
        self.h_max = float(h_max)
        super().__init__(f"curvature blow-up at t={self.t:.8g}: max|H|={self.h_max:.3e}")


class DiffeoDegenerate(HMCFError):
    pass


class LightConeViolation(HMCFError):
    def __init__(self, speed_sq):
        self.speed_sq = float(speed_sq)
        super().__init__(f"velocity not subluminal: max|X_t|^2={self.speed_sq:.6g}")


class ConfigError(HMCFError):
    """Collects every problem found in a configuration, not only the first."""

    exit_code = 64

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(str(p) for p in self.problems))


class ParseError(HMCFError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(loc + message)


class ValidationError(HMCFError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
