"""Exception hierarchy shared by all modules."""


class AnsatzError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(AnsatzError, ValueError):
    pass


class InvalidIndex(AnsatzError, IndexError):
    pass


class Underdetermined(AnsatzError, ValueError):
    pass


class SingularField(AnsatzError, ArithmeticError):
    """The reduced vector field is undefined (F vanishes)."""

    def __init__(self, message, s=None):
        super().__init__(message)
        self.s = s


class InvalidStart(AnsatzError, ValueError):
    pass


class DomainBoundary(AnsatzError, ValueError):
    """A closed-form sampler was evaluated on (or past) a pole."""

    def __init__(self, message, s=None):
        super().__init__(message)
        self.s = s


class NotApplicable(AnsatzError, ValueError):
    pass


class AngleMismatch(AnsatzError, ValueError):
    def __init__(self, message, theta_required):
        super().__init__(message)
        self.theta_required = theta_required


class BranchLoss(AnsatzError, ArithmeticError):
    pass


class InternalInconsistency(AnsatzError, AssertionError):
    pass
