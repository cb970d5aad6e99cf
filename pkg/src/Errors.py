class VandermondeError(Exception):
    pass


class InvalidArgumentError(VandermondeError, ValueError):
    pass


class DegenerateClusterError(InvalidArgumentError):
    pass


class InfeasibleLayoutError(VandermondeError, ValueError):
    pass


class RankDeficientError(VandermondeError, ArithmeticError):
    pass


class IllConditionedError(VandermondeError, ArithmeticError):
    pass


class PreconditionError(VandermondeError, ValueError):
    pass


class OutOfRegimeError(VandermondeError, ValueError):
    pass


class ConfigError(VandermondeError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        location = ""
        if field is not None:
            location += f" [field '{field}'"
            if line is not None:
                location += f", line {line}"
            location += "]"
        elif line is not None:
            location += f" [line {line}]"
        super().__init__(f"{message}{location}")


class SuiteFailure(VandermondeError):
    def __init__(self, suites):
        self.suites = list(suites)
        super().__init__(f"Verification failed: {', '.join(self.suites)}")
