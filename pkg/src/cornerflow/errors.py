"""Exception hierarchy.

Every error carries a CLI exit code so the batch front end can map
failures without inspecting messages.
"""

from __future__ import annotations


class CornerFlowError(Exception):
    exit_code = 1


class BadBracket(CornerFlowError):
    exit_code = 2

    def __init__(self, message: str, *, level: str | None = None, u0: float | None = None):
        super().__init__(message)
        self.level = level
        self.u0 = u0


class NoConvergence(CornerFlowError):
    exit_code = 3


class NonFinite(CornerFlowError):
    exit_code = 3


class NotAdmissible(CornerFlowError):
    exit_code = 4


class NoExtrema(CornerFlowError):
    exit_code = 4


class NoJoint(CornerFlowError):
    exit_code = 4


class BadCount(CornerFlowError):
    exit_code = 4


class BadProfile(CornerFlowError):
    exit_code = 4


class NodeMissing(CornerFlowError):
    exit_code = 4


class Instability(CornerFlowError):
    exit_code = 5

    def __init__(self, message: str, *, t: float | None = None):
        super().__init__(message)
        self.t = t


class ConfigError(CornerFlowError):
    exit_code = 2
