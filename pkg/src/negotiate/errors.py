"""Exception hierarchy shared by every module."""


class NegotiationError(Exception):
    pass


class DomainError(NegotiationError, ValueError):
    """Invalid issue, bid, profile or file contents."""


class ProtocolError(NegotiationError):
    """An agent broke the alternating-offers rules."""

    def __init__(self, message, actor=None):
        super().__init__(message)
        self.actor = actor


class StateError(NegotiationError):
    pass


class NumericError(NegotiationError, ArithmeticError):
    pass


class SearchExhausted(NegotiationError):
    """No legal bid survives the pruning threshold."""


class ConfigError(NegotiationError, ValueError):
    pass
