class TransportError(RuntimeError):
    """The backend could not produce any output (network, missing fixture)."""


class UnparseableOutput(ValueError):
    """Backend output that does not follow the stage's line grammar."""

    def __init__(self, raw: str, reason: str):
        super().__init__(reason)
        self.raw = raw
        self.reason = reason
