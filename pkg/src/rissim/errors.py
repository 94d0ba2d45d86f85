"""Exception types shared across the simulator.

Every error carries a short ``code`` (the class name) so the CLI can print a
stable ``ERROR <code>: <reason>`` line.
"""


class RissimError(Exception):
    @property
    def code(self) -> str:
        return type(self).__name__


class GeometryError(RissimError, ValueError):
    pass


class ParseError(RissimError):
    pass


class ValidationError(RissimError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class AngleNotAllowed(RissimError, ValueError):
    pass


class DegeneratePath(RissimError, ValueError):
    pass


class GridTooLarge(RissimError, ValueError):
    pass


class UnknownReceiver(RissimError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class ReceiverSetMismatch(RissimError, ValueError):
    pass
