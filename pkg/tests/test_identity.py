from __future__ import annotations

import json

import coincurve
import pytest

from credchain.dids import (
    ETHR,
    ETHR_GOERLI,
    WEB,
    abbreviate_did,
    derive_did,
    did_public_key,
    normalize_did,
    parse_did,
)
from credchain.errors import (
    DuplicateIdentifier,
    MalformedDid,
    MalformedKey,
    MissingName,
    NoSigningKey,
    NotFound,
    UnsupportedProvider,
)
from credchain.identity import ALGORITHMS, DidDocument, Registry
from credchain.ledger import DID_REGISTRATION, Ledger

LUKE = "did:ethr:0x02c81c2097947f5e072c6121325f1cb02221df2a14eb7e1ec1c4b28722ae2951bf"
SARAH = "did:ethr:0x02072c398d8e1320f3e0cab7b5d2ecf1bf38805dede917a50926ff238ae1ea1737"
SARAH_TRANSPOSED = "did:ethr:0x02072c398d8e1320f3e0cab7b5d2ec1fbf38805dede917a50926ff238ae1ea1737"
GOERLI_SARAH = "did:ethr:goerli:0x03eeefa3334acb0af67400094b4ed6a4242c982d8aa3c35edf83091833e8c2b174"


@pytest.fixture
def registry(tmp_path):
    return Registry(tmp_path / "identifiers.json", Ledger.open(tmp_path / "ledger.jsonl"))


# ------------------------------------------------------------ DID syntax


def test_derive_matches_printed_dids():
    assert derive_did(ETHR, bytes.fromhex(LUKE.split(":")[-1][2:])) == LUKE
    key = bytes.fromhex(GOERLI_SARAH.split(":")[-1][2:])
    assert derive_did(ETHR_GOERLI, key) == GOERLI_SARAH


def test_printed_dids_are_curve_points():
    for did in (LUKE, SARAH, GOERLI_SARAH):
        assert len(did_public_key(did)) == 65


def test_transposed_did_is_not_a_curve_point():
    with pytest.raises(MalformedKey):
        did_public_key(SARAH_TRANSPOSED)


@pytest.mark.parametrize(
    "text",
    [
        "did:ethr:0x02c81c",  # too short
        "did:ethr:0x04" + "00" * 32,  # wrong prefix
        "did:ethr:" + "02" * 33,  # no 0x
        "did:key:z6Mk",
        "did:web:",
        "ethr:0x" + "02" * 33,
        42,
    ],
)
def test_parse_rejects_malformed(text):
    with pytest.raises(MalformedDid):
        parse_did(text)


def test_normalize_lowercases_ethr_only():
    assert normalize_did(LUKE.upper().replace("DID:ETHR:0X", "did:ethr:0x")) == LUKE
    assert normalize_did("did:web:notSarah") == "did:web:notSarah"


def test_derive_rejects_web_and_bad_keys():
    with pytest.raises(UnsupportedProvider):
        derive_did(WEB, b"\x02" + bytes(32))
    with pytest.raises(UnsupportedProvider):
        derive_did("did:key", b"\x02" + bytes(32))
    with pytest.raises(MalformedKey):
        derive_did(ETHR, b"\x04" + bytes(64))


@pytest.mark.parametrize(
    "did, short",
    [
        (SARAH, "did:ethr:.1737"),
        (LUKE, "did:ethr:.51bf"),
        (GOERLI_SARAH, "did:ethr:goerli:.b174"),
        ("did:web:notSarah", "did:web:notSarah"),
    ],
)
def test_abbreviation(did, short):
    assert abbreviate_did(did) == short


def test_derivation_against_oracle():
    for _ in range(25):
        ref = coincurve.PrivateKey().public_key
        did = derive_did(ETHR, ref.format())
        assert did_public_key(did) == ref.format(compressed=False)


# -------------------------------------------------------------- registry


def test_create_identifier_document_shape(registry):
    doc, kp = registry.create_identifier("Luke Skywalker")
    raw = doc.to_dict()
    assert list(raw) == ["did", "provider", "alias", "controllerKeyId", "keys"]
    assert raw["provider"] == ETHR and raw["alias"] == "Luke Skywalker"
    assert raw["controllerKeyId"] == kp.public_uncompressed.hex()
    assert raw["did"] == derive_did(ETHR, kp.public_compressed)
    (key,) = raw["keys"]
    assert key == {
        "kid": raw["controllerKeyId"],
        "kms": "local",
        "type": "Secp256k1",
        "publicKeyHex": raw["controllerKeyId"],
        "meta": {"algorithms": list(ALGORITHMS)},
    }
    assert {"ES256K", "ES256K-R", "eth_signTransaction"} <= set(key["meta"]["algorithms"])


def test_create_appends_one_registration_block(registry):
    before = len(registry.ledger)
    doc, _ = registry.create_identifier("sarah", ETHR_GOERLI)
    assert doc.did.startswith("did:ethr:goerli:0x")
    assert len(registry.ledger) == before + 1
    (rec,) = registry.ledger.tip.records
    assert rec.kind == DID_REGISTRATION and rec.author == doc.did
    assert rec.payload_digest == doc.content_digest()
    assert registry.registration_record(doc.did) == rec


def test_web_identifier_needs_name_and_is_unverifiable(registry):
    with pytest.raises(MissingName):
        registry.create_identifier("web", WEB)
    doc, kp = registry.create_identifier("web", WEB, name="notSarah")
    assert kp is None
    assert doc.did == "did:web:notSarah"
    resolved = registry.resolve_did("did:web:notSarah")
    assert not resolved.verifiable and resolved.public_key() is None
    with pytest.raises(NoSigningKey):
        registry.signing_key(doc.did)


def test_unknown_provider(registry):
    with pytest.raises(UnsupportedProvider):
        registry.create_identifier("x", "did:key")


def test_duplicate_web_name(registry):
    registry.create_identifier("a", WEB, name="dup")
    with pytest.raises(DuplicateIdentifier):
        registry.create_identifier("b", WEB, name="dup")


def test_duplicate_entropy(registry):
    seed = bytes(range(1, 33))
    registry.create_identifier("a", entropy=seed)
    with pytest.raises(DuplicateIdentifier):
        registry.create_identifier("b", entropy=seed)


def test_resolve_unknown(registry):
    with pytest.raises(NotFound):
        registry.resolve_did(LUKE)
    with pytest.raises(NotFound):
        registry.resolve_did("not a did")


def test_list_preserves_order_and_mixed_providers(registry):
    registry.create_identifier("Sarah Flanery")
    registry.create_identifier("sarah", ETHR_GOERLI)
    registry.create_identifier("notSarah", WEB, name="notSarah")
    rows = registry.list_identifiers()
    assert [r.alias for r in rows] == ["Sarah Flanery", "sarah", "notSarah"]
    assert [r.provider for r in rows] == [ETHR, ETHR_GOERLI, WEB]


def test_store_persists_across_reopen(registry, tmp_path):
    doc, kp = registry.create_identifier("Luke Skywalker")
    again = Registry(tmp_path / "identifiers.json", Ledger.open(tmp_path / "ledger.jsonl"))
    assert again.resolve_did(doc.did) == doc
    assert again.signing_key(doc.did) == kp.private_scalar
    stored = json.loads((tmp_path / "identifiers.json").read_text())
    assert stored[0]["privateKeyHex"] == kp.private_bytes.hex()


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(provider="did:ethr:goerli"),
        lambda d: d.update(controllerKeyId=d["controllerKeyId"][:-2] + "00"),
        lambda d: d["keys"][0].update(publicKeyHex="04" + "11" * 64),
        lambda d: d["keys"][0]["meta"].update(algorithms=["ES256K"]),
        lambda d: d.update(alias=""),
        lambda d: d.pop("keys"),
    ],
)
def test_document_invariants(registry, mutate):
    doc, _ = registry.create_identifier("x")
    raw = doc.to_dict()
    mutate(raw)
    with pytest.raises(MalformedDid):
        DidDocument.from_dict(raw)
