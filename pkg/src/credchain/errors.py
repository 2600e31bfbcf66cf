"""Exception hierarchy.

Every error raised on purpose by the library derives from ``CredchainError``
so callers (and the CLI) can catch one type.  Verification failures are
*not* errors: ``verify_*`` functions return a result object and only raise
when the input is structurally unusable.
"""
from __future__ import annotations


class CredchainError(Exception):
    """Base class for library errors."""


# cryptography
class InvalidEntropy(CredchainError, ValueError):
    pass


class InvalidPrivateKey(CredchainError, ValueError):
    pass


class MalformedKey(CredchainError, ValueError):
    pass


class MalformedSignature(CredchainError, ValueError):
    pass


class UnsupportedValue(CredchainError, TypeError):
    """A value tree cannot be canonically encoded (floats, bytes, ...)."""


# identity
class UnsupportedProvider(CredchainError, ValueError):
    pass


class MissingName(CredchainError, ValueError):
    pass


class MalformedDid(CredchainError, ValueError):
    pass


class DuplicateIdentifier(CredchainError):
    pass


class NotFound(CredchainError, LookupError):
    pass


class NoSigningKey(CredchainError):
    pass


# credentials / presentations
class UnknownSubject(CredchainError):
    pass


class EmptyClaims(CredchainError, ValueError):
    pass


class MalformedCredential(CredchainError, ValueError):
    pass


class NotRevocable(CredchainError):
    pass


class NotIssuer(CredchainError):
    pass


class AlreadyRevoked(CredchainError):
    pass


class EmptyPortfolio(CredchainError, ValueError):
    pass


class MalformedPresentation(CredchainError, ValueError):
    pass


# ledger
class CorruptLedger(CredchainError):
    def __init__(self, message: str, block_index: int | None = None):
        super().__init__(message)
        self.block_index = block_index


class EmptyBlock(CredchainError, ValueError):
    pass


class InvalidRecord(CredchainError, ValueError):
    pass


# agent
class UnknownRecipient(CredchainError):
    pass


class MalformedBundle(CredchainError, ValueError):
    pass
