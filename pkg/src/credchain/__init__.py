"""Decentralized identifiers, verifiable credentials and a hash-chained ledger."""
__version__ = "0.1.0"
