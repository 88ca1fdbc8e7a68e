"""Core vocabulary shared by every simulator component.

Users, storage keys, versioned content objects and interaction records.
All types here are immutable values; time is an integer tick count in
simulated milliseconds.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

# A user is identified by an opaque, non-empty name; equality is exact
# string equality.  Simulated time is an integer number of milliseconds.
UserId = str
SimTime = int


class InvalidKeyError(ValueError):
    """Raised for malformed or unparseable storage keys."""


class StorageKey(NamedTuple):
    """Address of a stored content object, encoding its owner.

    The wire form is ``"owner/path"``; the first ``'/'`` separates the
    owning user from the path, so the owner must not contain ``'/'``.
    """

    owner: UserId
    path: str

    def __str__(self) -> str:
        return f"{self.owner}/{self.path}"

    @classmethod
    def parse(cls, text: str) -> "StorageKey":
        owner, sep, path = text.partition("/")
        if not sep or not owner or not path:
            raise InvalidKeyError(f"malformed storage key: {text!r}")
        return cls(owner, path)


def format_storage_key(owner: UserId, path: str) -> str:
    """Build the wire form of a key. Inverts :func:`parse_storage_key`."""
    if not owner or not path:
        raise InvalidKeyError("owner and path must be non-empty")
    if "/" in owner:
        raise InvalidKeyError(f"owner must not contain '/': {owner!r}")
    if "\n" in path:
        raise InvalidKeyError("path must not contain newlines")
    return f"{owner}/{path}"


def parse_storage_key(text: str) -> StorageKey:
    return StorageKey.parse(text)


def get_username(key: "str | StorageKey") -> UserId:
    """Owner of a key: the segment before the first '/'."""
    if isinstance(key, StorageKey):
        return key.owner
    return StorageKey.parse(key).owner


@dataclass(frozen=True, slots=True)
class ContentObject:
    """A versioned stored item; versions per key strictly increase and the
    author is always the key owner."""

    key: StorageKey
    version: int
    payload: bytes
    author: UserId
    created_at: SimTime


class InteractionKind(enum.Enum):
    LOOKUP = "lookup"
    WALL_POST = "wall_post"
    FRIEND_REQUEST = "friend_request"
    LIKE = "like"
    COMMENT = "comment"


@dataclass(frozen=True, slots=True)
class InteractionRecord:
    """One tracked interaction with another user: who, what kind, when."""

    peer: UserId
    kind: InteractionKind
    at: SimTime
