import pytest
from hypothesis import given
from hypothesis import strategies as st

from socicache.model import (
    ContentObject,
    InvalidKeyError,
    StorageKey,
    format_storage_key,
    get_username,
    parse_storage_key,
)


@pytest.mark.parametrize(
    "owner,path,expected",
    [
        ("alice", "wall/1", "alice/wall/1"),
        ("bob", "profile", "bob/profile"),
    ],
)
def test_format_storage_key(owner, path, expected):
    assert format_storage_key(owner, path) == expected


@pytest.mark.parametrize("owner,path", [("", "wall/1"), ("alice", ""), ("a/b", "x")])
def test_format_storage_key_rejects_bad_input(owner, path):
    with pytest.raises(InvalidKeyError):
        format_storage_key(owner, path)


def test_format_rejects_newline_in_path():
    with pytest.raises(InvalidKeyError):
        format_storage_key("alice", "wall\n1")


@pytest.mark.parametrize(
    "text,owner",
    [("alice/wall/1", "alice"), ("bob/profile", "bob")],
)
def test_get_username(text, owner):
    assert get_username(text) == owner
    assert get_username(StorageKey.parse(text)) == owner


def test_get_username_rejects_missing_separator():
    with pytest.raises(InvalidKeyError):
        get_username("noslash")


def test_get_username_is_pure():
    assert get_username("carol/x/y") == get_username("carol/x/y") == "carol"


owners = st.text(
    st.characters(blacklist_characters="/\n", min_codepoint=33, max_codepoint=0x2FF),
    min_size=1,
    max_size=12,
)
paths = st.text(
    st.characters(blacklist_characters="\n", min_codepoint=33, max_codepoint=0x2FF),
    min_size=1,
    max_size=24,
)


@given(owner=owners, path=paths)
def test_key_round_trip(owner, path):
    key = parse_storage_key(format_storage_key(owner, path))
    assert (key.owner, key.path) == (owner, path)
    assert str(key) == format_storage_key(owner, path)


def test_content_object_fields():
    key = StorageKey("alice", "wall/1")
    obj = ContentObject(key, 3, b"hi", "alice", 1000)
    assert obj.key.owner == obj.author
    assert obj.version == 3
