"""Exception hierarchy shared by all coopetition modules.

Every domain error derives from :class:`CoopetitionError` so callers (and the
HTTP layer) can catch one base class. The class name doubles as the stable
error code in API responses.
"""

from __future__ import annotations


class CoopetitionError(Exception):
    """Base class for all domain errors raised by this package."""


# --- rulebook ---------------------------------------------------------------

class ParseError(CoopetitionError):
    """Document is structurally malformed (wrong types, missing keys)."""


class ValidationError(CoopetitionError):
    """Document parsed but violates a rulebook invariant; names the path."""


class NotFound(CoopetitionError):
    """A referenced id does not exist; message names the first missing level."""


# --- marketplace ------------------------------------------------------------

class FrozenMarketplace(CoopetitionError):
    """Upload attempted at or after the marketplace freeze instant."""


class OutsideWindow(CoopetitionError):
    """Upload timestamp falls outside every configured upload window."""


class DuplicateId(CoopetitionError):
    """An id that must be unique is already taken."""


class AlreadyFrozen(CoopetitionError):
    """The marketplace freeze was already applied."""


class SelfIntegration(CoopetitionError):
    """A team declared integration of a module it (co-)developed."""


class ModuleRemoved(CoopetitionError):
    """Operation targets a module the technical committee removed."""


class UnknownScope(CoopetitionError):
    """Declaration scope ids do not resolve against the rulebook."""


class Unauthorized(CoopetitionError):
    """Actor lacks the role required for this operation."""


# --- scoring ----------------------------------------------------------------

class CatalogMismatch(CoopetitionError):
    """Result references a level or penalty absent from the milestone spec."""


class EmptyAttempts(CoopetitionError):
    """Best-attempt selection called with no attempts."""


class SelfRoyalty(CoopetitionError):
    """Royalty computation requested for the user team itself."""


# --- competition runtime ----------------------------------------------------

class AttemptLimitExceeded(CoopetitionError):
    """Team has no attempts left for this task."""


class EventNotStarted(CoopetitionError):
    """On-site operations require the marketplace to be frozen first."""


class SessionClosed(CoopetitionError):
    """The attempt session was already closed; results are immutable."""


class DeadlineExpired(CoopetitionError):
    """Outcome entry arrived after the attempt deadline."""


class MutualExclusionViolation(CoopetitionError):
    """Two mutually exclusive milestones were both marked successful."""


# --- command generator ------------------------------------------------------

class InvalidPin(CoopetitionError):
    """Pinned variable is unknown, outside its domain, or inconsistent."""


class InvalidTask(CoopetitionError):
    """Task number outside the league's task range."""


class DegenerateDomain(CoopetitionError):
    """Variable domain too small to satisfy the generation constraints."""


# --- analytics / service ----------------------------------------------------

class UnsupportedFormat(CoopetitionError):
    """Requested export format is not implemented."""


class ConfigError(CoopetitionError):
    """Service configuration is invalid or unusable."""
