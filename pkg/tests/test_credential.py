from __future__ import annotations

import copy
import json

import pytest
from Crypto.Hash import keccak as oracle_keccak

from credchain.credential import (
    DOMAIN,
    REVOKED,
    SIGNATURE_MISMATCH,
    Claim,
    VerifiableCredential,
    credential_digest,
    display_type,
    parse_type_list,
    typed_data_digest,
    verify_credential,
)
from credchain.errors import (
    AlreadyRevoked,
    EmptyClaims,
    MalformedCredential,
    NoSigningKey,
    NotFound,
    NotIssuer,
    NotRevocable,
    UnknownSubject,
)
from credchain.ledger import CREDENTIAL_ISSUED, CREDENTIAL_REVOKED

CLAIM = ("Mastery of Python Programming Language", "A+")


def _k(data: bytes) -> bytes:
    return oracle_keccak.new(digest_bits=256, data=data).digest()


@pytest.fixture
def people(agent):
    sarah, _ = agent.identities.create_identifier("Sarah Flanery")
    luke, _ = agent.identities.create_identifier("Luke Skywalker")
    return sarah.did, luke.did


def test_typed_digest_matches_hand_composition():
    payload = {
        "issuer": "did:ethr:0x02aa",
        "subject": "did:ethr:0x02bb",
        "type": ["VerifiableCredential", "Profile"],
        "claims": [{"claimType": "name", "claimValue": "Luke"}],
        "revocable": False,
        "issuanceDate": "2023-12-15T23:55:57.461Z",
    }
    domain_json = b'{"chainId":1,"name":"VerifiableCredential","version":"1"}'
    payload_json = (
        b'{"claims":[{"claimType":"name","claimValue":"Luke"}],"issuanceDate":"2023-12-15T23:55:57.461Z",'
        b'"issuer":"did:ethr:0x02aa","revocable":false,"subject":"did:ethr:0x02bb",'
        b'"type":["VerifiableCredential","Profile"]}'
    )
    expected = _k(b"\x19\x01" + _k(domain_json) + _k(payload_json))
    assert typed_data_digest(DOMAIN, payload) == expected
    assert credential_digest({**payload, "proof": {"ignored": True}}) == expected


def test_issue_shape_and_ledger(agent, people):
    sarah, luke = people
    before = len(agent.ledger)
    vc = agent.credentials.issue_credential(sarah, luke, ["Python Course", "Profile"], [CLAIM], False)
    assert vc.types == ["VerifiableCredential", "Python Course", "Profile"]
    raw = vc.to_dict()
    assert set(raw) == {"issuer", "subject", "type", "claims", "revocable", "issuanceDate", "proof"}
    proof = raw["proof"]
    assert proof["type"] == "EthereumEip712Signature2021"
    assert proof["proofPurpose"] == "assertionMethod"
    assert proof["verificationMethod"] == f"{sarah}#controller"
    assert proof["eip712"]["domain"] == {"chainId": 1, "name": "VerifiableCredential", "version": "1"}
    assert len(proof["proofValue"]) == 132 and proof["proofValue"].startswith("0x")
    assert len(agent.ledger) == before + 1
    (rec,) = agent.ledger.tip.records
    assert rec.kind == CREDENTIAL_ISSUED and rec.payload_digest == vc.id and rec.author == sarah
    assert agent.credentials.verify_credential(vc).valid


def test_round_trip_through_wire(agent, people):
    vc = agent.credentials.issue_credential(*people, ["Profile"], [CLAIM], True)
    again = VerifiableCredential.from_dict(json.loads(json.dumps(vc.to_dict())))
    assert again == vc and again.id == vc.id


@pytest.mark.parametrize(
    "field, value",
    [
        ("subject", None),
        ("claims", [{"claimType": "x", "claimValue": "y", "extra": 1}]),
        ("revocable", "no"),
        ("type", []),
        ("claims", []),
    ],
)
def test_from_dict_rejects(agent, people, field, value):
    raw = agent.credentials.issue_credential(*people, ["Profile"], [CLAIM], True).to_dict()
    raw[field] = value
    with pytest.raises(MalformedCredential):
        VerifiableCredential.from_dict(raw)


def test_issue_error_order(agent, people):
    sarah, luke = people
    stranger = "did:ethr:0x02c81c2097947f5e072c6121325f1cb02221df2a14eb7e1ec1c4b28722ae2951bf"
    with pytest.raises(NoSigningKey):
        agent.credentials.issue_credential(stranger, luke, ["P"], [CLAIM], False)
    with pytest.raises(UnknownSubject):
        agent.credentials.issue_credential(sarah, stranger, ["P"], [CLAIM], False)
    with pytest.raises(EmptyClaims):
        agent.credentials.issue_credential(sarah, luke, ["P"], [], False)
    with pytest.raises(EmptyClaims):
        agent.credentials.issue_credential(sarah, luke, ["P"], [("", "v")], False)
    with pytest.raises(MalformedCredential):
        agent.credentials.issue_credential(sarah, luke, [], [CLAIM], False)


def test_web_issuer_cannot_sign(agent, people):
    web, _ = agent.identities.create_identifier("notSarah", "did:web", name="notSarah")
    with pytest.raises(NoSigningKey):
        agent.credentials.issue_credential(web.did, people[1], ["P"], [CLAIM], False)


def test_subject_may_be_web(agent, people):
    web, _ = agent.identities.create_identifier("notSarah", "did:web", name="notSarah")
    vc = agent.credentials.issue_credential(people[0], web.did, ["P"], [CLAIM], False)
    assert agent.credentials.verify_credential(vc).valid


def test_tampered_claim_fails(agent, people):
    raw = agent.credentials.issue_credential(*people, ["P"], [CLAIM], False).to_dict()
    raw["claims"][0]["claimValue"] = "A"
    result = agent.credentials.verify_credential(raw)
    assert not result.valid and SIGNATURE_MISMATCH in result.reasons


def test_swapped_issuer_fails(agent, people):
    sarah, luke = people
    raw = agent.credentials.issue_credential(sarah, luke, ["P"], [CLAIM], False).to_dict()
    forged = copy.deepcopy(raw)
    forged["issuer"] = luke
    forged["proof"]["verificationMethod"] = f"{luke}#controller"
    assert not agent.credentials.verify_credential(forged).valid


def test_unresolvable_issuer(agent, people):
    raw = agent.credentials.issue_credential(*people, ["P"], [CLAIM], False).to_dict()
    result = verify_credential(raw, lambda did: (_ for _ in ()).throw(NotFound(did)))
    assert result.reasons == ["issuer-unresolved"]


def test_proof_metadata_checked(agent, people):
    raw = agent.credentials.issue_credential(*people, ["P"], [CLAIM], False).to_dict()
    for key, value, reason in [
        ("type", "JwtProof2020", "unsupported-proof-type"),
        ("proofPurpose", "authentication", "proof-purpose-mismatch"),
        ("verificationMethod", "did:ethr:0x02#controller", "verification-method-mismatch"),
    ]:
        bad = copy.deepcopy(raw)
        bad["proof"][key] = value
        assert reason in agent.credentials.verify_credential(bad).reasons
    bad = copy.deepcopy(raw)
    bad["proof"]["eip712"]["domain"]["chainId"] = 5
    assert "domain-mismatch" in agent.credentials.verify_credential(bad).reasons


def test_proof_value_has_one_spelling(agent, people):
    raw = agent.credentials.issue_credential(*people, ["P"], [CLAIM], False).to_dict()
    raw["proof"]["proofValue"] = "0x" + raw["proof"]["proofValue"][2:].upper()
    with pytest.raises(MalformedCredential):
        agent.credentials.verify_credential(raw)


def test_unsigned_proof_metadata_is_bound(agent, people):
    raw = agent.credentials.issue_credential(*people, ["P"], [CLAIM], False).to_dict()
    assert raw["proof"]["created"] == raw["issuanceDate"]
    bad = copy.deepcopy(raw)
    bad["proof"]["created"] = "2020-01-01T00:00:00.000Z"
    assert agent.credentials.verify_credential(bad).reasons == ["proof-created-mismatch"]
    bad = copy.deepcopy(raw)
    bad["proof"]["eip712"]["primaryType"] = "Other"
    assert agent.credentials.verify_credential(bad).reasons == ["eip712-mismatch"]
    bad = copy.deepcopy(raw)
    bad["proof"]["extra"] = 1
    with pytest.raises(MalformedCredential):
        agent.credentials.verify_credential(bad)


def test_missing_proof_is_malformed(agent, people):
    raw = agent.credentials.issue_credential(*people, ["P"], [CLAIM], False).to_dict()
    del raw["proof"]
    with pytest.raises(MalformedCredential):
        agent.credentials.verify_credential(raw)


# ------------------------------------------------------------ revocation


def test_revocation_flow(agent, people):
    sarah, luke = people
    vc = agent.credentials.issue_credential(sarah, luke, ["P"], [CLAIM], True)
    assert agent.credentials.verify_credential(vc).valid
    with pytest.raises(NotIssuer):
        agent.credentials.revoke_credential(luke, vc.id)
    rec = agent.credentials.revoke_credential(sarah, vc.id_hex)
    assert rec.kind == CREDENTIAL_REVOKED and list(agent.ledger.tip.records) == [rec]
    result = agent.credentials.verify_credential(vc)
    assert not result.valid and result.reasons == [REVOKED]
    with pytest.raises(AlreadyRevoked):
        agent.credentials.revoke_credential(sarah, vc.id)


def test_non_revocable_cannot_be_revoked(agent, people):
    vc = agent.credentials.issue_credential(*people, ["P"], [CLAIM], False)
    before = len(agent.ledger)
    with pytest.raises(NotRevocable):
        agent.credentials.revoke_credential(people[0], vc.id)
    assert len(agent.ledger) == before


def test_revoke_unknown(agent, people):
    with pytest.raises(NotFound):
        agent.credentials.revoke_credential(people[0], "0x" + "00" * 32)


# --------------------------------------------------------------- listing


def test_display_type():
    assert display_type(["VerifiableCredential", "Profile"]) == "VerifiableCredential,Profile"
    assert (
        display_type(["VerifiableCredential", "Python Course", "Profile"])
        == "VerifiableCredential,(Python Course, Profile)"
    )


def test_parse_type_list():
    assert parse_type_list(["(Python Course, Profile)"]) == ["Python Course", "Profile"]
    assert parse_type_list(["Profile", "Leadership"]) == ["Profile", "Leadership"]
    assert parse_type_list(["VerifiableCredential,Profile"]) == ["Profile"]
    assert parse_type_list(["VerifiableCredential,(A, B)"]) == ["A", "B"]


def test_list_filters(agent, people):
    sarah, luke = people
    agent.credentials.issue_credential(sarah, luke, ["Python Course", "Profile"], [CLAIM], False)
    agent.credentials.issue_credential(luke, sarah, ["Leadership", "Profile"], [("Lead", "yes")], False)
    assert len(agent.credentials.list_credentials()) == 2
    (row,) = agent.credentials.list_credentials(from_=sarah)
    assert row.type == "VerifiableCredential,(Python Course, Profile)"
    assert row.from_ == "did:ethr:." + sarah[-4:] and row.to == "did:ethr:." + luke[-4:]
    assert [r.to for r in agent.credentials.list_credentials(to=sarah)] == ["did:ethr:." + sarah[-4:]]
    assert len(agent.credentials.list_credentials(type_contains="Leader")) == 1


def test_claim_values_are_opaque(agent, people):
    vc = agent.credentials.issue_credential(*people, ["P"], [Claim("grade", "  A+  ")], False)
    assert agent.credentials.get(vc.id).claims[0].claim_value == "  A+  "
