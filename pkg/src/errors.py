"""
Exception hierarchy shared by the solvers, the network engine and the CLI.
"""

EXIT_OK = 0
EXIT_NUMERICAL_FAILURE = 1
EXIT_CONFIG_ERROR = 2


class MirlError(Exception):
    """Base class for every error raised by this package"""
    exit_code = EXIT_NUMERICAL_FAILURE


class ShapeError(MirlError):
    """Array dimensions do not agree"""


class InvariantError(MirlError):
    """A probability or MDP invariant does not hold"""


class InvalidSpecError(InvariantError):
    """A grid-world layout cannot be built"""
    exit_code = EXIT_CONFIG_ERROR


class AbsoluteContinuityError(MirlError):
    """A policy puts mass on an action the prior excludes"""


class DegeneratePriorError(MirlError):
    """Every action of a policy row is masked out by the prior"""


class NumericalFailureError(MirlError):
    """Non-finite values appeared during an iteration"""

    def __init__(self, message, iteration=None):
        super().__init__(message if iteration is None else f"{message} (iteration {iteration})")
        self.iteration = iteration


class NonFiniteGradientError(MirlError):
    """The optimizer refused a step because a gradient is not finite"""

    def __init__(self, parameter_index, message=None):
        super().__init__(message or f"non-finite gradient for parameter #{parameter_index}")
        self.parameter_index = parameter_index


class TrainingAbortedError(NumericalFailureError):
    """A training loss became non-finite"""

    def __init__(self, step, loss_name, value):
        super().__init__(f"loss '{loss_name}' is {value}", iteration=step)
        self.step = step
        self.loss_name = loss_name
        self.value = value


class ContractError(MirlError):
    """A function was called outside of its contract"""


class ConfigError(MirlError):
    """A configuration file or flag is invalid"""
    exit_code = EXIT_CONFIG_ERROR


class AuditFailedError(MirlError):
    """At least one audit check failed"""

    def __init__(self, failed_checks):
        super().__init__(f"{len(failed_checks)} audit check(s) failed: {', '.join(failed_checks)}")
        self.failed_checks = failed_checks
