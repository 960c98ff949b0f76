"""Exception hierarchy shared by every kausal module."""


class KausalError(Exception):
    """Base class for all errors raised by kausal."""


class LengthMismatch(KausalError, ValueError):
    pass


class MalformedFile(KausalError, ValueError):
    pass


class MaskOutOfRange(KausalError, IndexError):
    pass


class TooShort(KausalError, ValueError):
    """A thresholded judgment was requested below ``Thresholds.n_min``."""


class BadBlockAlignment(KausalError, ValueError):
    pass


class TooLarge(KausalError, ValueError):
    pass


class OrderInconsistent(KausalError):
    """Transitivity violations make an order-theoretic query ill-defined."""


class GateIndexOutOfRange(KausalError, IndexError):
    pass


class GeneratorMismatch(KausalError):
    pass


class NoCoveringModel(KausalError):
    pass


class TooManyParties(KausalError, ValueError):
    pass


class InconsistentRelation(KausalError):
    def __init__(self, message, round_index=None, combo=None):
        super().__init__(message)
        self.round_index = round_index
        self.combo = combo


class UnknownExperiment(KausalError):
    pass


class InvalidConfig(KausalError, ValueError):
    pass


class GoldenMismatch(KausalError):
    def __init__(self, message, diff=""):
        super().__init__(message)
        self.diff = diff
