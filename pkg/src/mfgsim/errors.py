"""Exception types shared across the toolkit."""


class MfgsimError(Exception):
    """Base class for all toolkit errors."""


class InvalidIdentifier(MfgsimError):
    pass


# sort kernel

class DuplicateSortSet(MfgsimError):
    pass


class UnknownSortSet(MfgsimError):
    pass


class UnknownSort(MfgsimError):
    pass


class CycleIntroduced(MfgsimError):
    pass


# entity kernel

class DuplicateEntity(MfgsimError):
    pass


class UnknownEntity(MfgsimError):
    pass


class ModelNotWellFormed(MfgsimError):
    pass


# ontology

class SortSystemMismatch(MfgsimError):
    pass


class UnknownConcept(MfgsimError):
    pass


# abstraction

class NotAbstracting(MfgsimError):
    pass


class NotRefining(MfgsimError):
    pass


class UnmappedSort(MfgsimError):
    pass


class OrphanAttribute(MfgsimError):
    pass


# model library

class NotFound(MfgsimError):
    pass


class HashMismatch(MfgsimError):
    pass


class CorruptManifest(MfgsimError):
    pass


# simulation engine

class ScheduleInPast(MfgsimError):
    pass


class EngineFinished(MfgsimError):
    pass


class ActionPanic(MfgsimError):
    """A scheduled action raised; carries the clock and event tag at failure."""

    def __init__(self, message, clock_us=None, tag=None):
        super().__init__(message)
        self.clock_us = clock_us
        self.tag = tag


# manufacturing layer

class VerificationFailed(MfgsimError):
    """Instantiation refused; carries the underlying violation report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MissingComponent(MfgsimError):
    pass


class ModeMismatch(MfgsimError):
    pass


class ModelMismatch(MfgsimError):
    pass


class DeadlockDetected(MfgsimError):
    """Run stalled with unfinished resource waits; carries the wait graph."""

    def __init__(self, message, wait_graph=()):
        super().__init__(message)
        self.wait_graph = tuple(wait_graph)
