"""
Exceptions raised by beaconlab.

They all derive from built-in exceptions, so code that already catches
`ValueError` keeps working.
"""


class DomainMismatchError(ValueError):
    pass


class ParityError(ValueError):
    pass


class EnumerationSizeError(ValueError):
    pass


class BoundViolationError(ValueError):
    #symbol is the first alphabet element found outside the perturbation box
    def __init__(self, message, symbol=None):
        super().__init__(message)
        self.symbol = symbol


class BoundNotApplicableError(ValueError):
    pass


class SimulationTimeout(RuntimeError):
    pass


class ConfigError(ValueError):
    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__('Invalid configuration:\n' + '\n'.join('  - ' + m for m in self.messages))
