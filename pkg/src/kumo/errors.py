"""Exception hierarchy shared across the package.

Every failure surfaced to callers derives from :class:`KumoError` so that
CLI and service layers can map them to exit codes / HTTP statuses in one
place. Exceptions carry plain-text messages; machine-readable context goes
in dedicated attributes where a caller needs it.
"""

from __future__ import annotations


class KumoError(Exception):
    """Base class for all package errors."""


# --- seed config parsing / validation -------------------------------------

class SchemaError(KumoError):
    """Serialized config document does not match the external schema."""


class DuplicateName(SchemaError):
    """A truth or action name appears more than once in a document."""


class DanglingTruthReference(SchemaError):
    """A ruled-out entry names a truth missing from the truth list."""


class InvalidConfig(KumoError):
    """A SeedConfig failed validation where a valid one is required."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class DuplicateEnvironment(KumoError):
    """Registry already holds an environment with this domain name."""


class UnknownEnvironment(KumoError):
    """Registry lookup for a name that was never registered."""


# --- task generation -------------------------------------------------------

class InsufficientUniverse(KumoError):
    """Requested sample sizes exceed what the config universe offers."""


class InsufficientActions(KumoError):
    """Not enough legal actions exist to pad a selection to size."""


class GenerationExhausted(KumoError):
    """Resample budget spent without producing a fresh valid instance."""


# --- oracle ----------------------------------------------------------------

class StateSpaceTooLarge(KumoError):
    """Combined truth+action count exceeds the bitmask width."""


class TooLargeForBruteForce(KumoError):
    """Instance exceeds the brute-force policy enumeration guard."""


# --- simulator -------------------------------------------------------------

class InvalidTask(KumoError):
    """Task handed to the simulator violates its invariants."""


class SessionTerminated(KumoError):
    """A move was submitted to a session that already ended."""


class AgentTransportError(KumoError):
    """Agent binding failed mid-episode; partial trajectory attached."""

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


# --- metrics ---------------------------------------------------------------

class EmptyInput(KumoError):
    """Metric requested over an empty trajectory collection."""


class DegenerateOptimal(KumoError):
    """Relative action count is undefined for optimal <= 0."""


class MissingOptimal(KumoError):
    """No optimal action count resolvable for a trajectory's task."""


class ZeroVariance(KumoError):
    """Pearson correlation over a constant sequence."""


# --- analysis --------------------------------------------------------------

class EmptyGraph(KumoError):
    """Operation requires a graph with at least one edge."""


class SingleComponent(KumoError):
    """Environment split requires >= 2 connected components."""


class DegenerateMargins(KumoError):
    """Contingency table has a zero row or column sum."""


class DegenerateTable(KumoError):
    """Contingency table too small for the requested statistic."""


# --- LLM pipeline ----------------------------------------------------------

class TransportError(KumoError):
    """Chat endpoint unreachable after retries."""


class AuthError(KumoError):
    """Chat endpoint rejected the credential."""


class RateLimited(KumoError):
    """Chat endpoint kept rate-limiting after retries."""


class GenerationFailed(KumoError):
    """LLM stage failed to produce parseable output within its budget."""


class PersistentlyInvalid(KumoError):
    """Every regenerated config failed validation within the budget."""


class VerdictUnparseable(KumoError):
    """Book-revision reply carried no recognizable verdict tag."""


# --- service ---------------------------------------------------------------

class AuthFailure(KumoError):
    """Participant credential check failed."""


class InsufficientTaskPool(KumoError):
    """Not enough registered environments to build a task set."""


class UnknownAction(KumoError):
    """Action name does not belong to the current task."""


class UnknownTruth(KumoError):
    """Predicted truth does not belong to the current task."""


class IoError(KumoError):
    """Persistence layer read/write failure."""
