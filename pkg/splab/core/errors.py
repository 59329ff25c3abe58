from __future__ import annotations


class SplabError(Exception):
    pass


class InvalidInput(SplabError, ValueError):
    pass


class NoComplement(InvalidInput):
    pass


class UnsupportedLaw(InvalidInput):
    pass


class ConfigError(SplabError, ValueError):
    pass


class InvariantViolation(SplabError, RuntimeError):
    pass
