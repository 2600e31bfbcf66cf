"""``credchain`` command line.

Interactive prompts follow the identifier and credential creation flows;
every prompt has a flag so scripts never block.  Exit codes: 0 success,
1 operation failure, 2 usage error.
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import click

from . import display
from .agent import ENV_HOME, Agent, default_data_dir
from .credential import PROOF_TYPE, parse_type_list
from .dids import ETHR, PROVIDERS, WEB
from .errors import CorruptLedger, CredchainError

EXPLORE_MENU = {
    "Managed identifiers": "identifiers",
    "Messages": "messages",
    "Credentials": "credentials",
    "Presentations": "presentations",
}


@dataclass
class _State:
    data_dir: Path
    as_json: bool
    _agent: Agent | None = None

    @property
    def agent(self) -> Agent:
        if self._agent is None:
            self._agent = Agent(self.data_dir)
        return self._agent


class _Group(click.Group):
    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except CorruptLedger as exc:
            click.echo(f"TAMPER DETECTED at block {exc.block_index}: {exc}", err=True)
            ctx.exit(1)
        except (CredchainError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(1)


def _emit_json(data: Any) -> None:
    click.echo(json.dumps(data, indent=2, ensure_ascii=False))


def _load_json_arg(target: str) -> Any | None:
    path = Path(target)
    if path.suffix == ".json" or path.is_file():
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise click.BadParameter(f"cannot read {target}: {exc}") from None
    return None


@click.group(cls=_Group)
@click.option(
    "--data-dir",
    type=click.Path(file_okay=False, path_type=Path),
    envvar=ENV_HOME,
    help=f"Agent data directory (default: ${ENV_HOME} or ~/.credchain).",
)
@click.option("--json", "as_json", is_flag=True, help="Machine-readable JSON output.")
@click.pass_context
def main(ctx: click.Context, data_dir: Path | None, as_json: bool) -> None:
    """Decentralized identifiers, credentials and presentations on a local ledger."""
    ctx.obj = _State(data_dir or default_data_dir(), as_json)


# ------------------------------------------------------------------- did


@main.group()
def did() -> None:
    """Create and list identifiers."""


@did.command("create")
@click.option("--provider", type=click.Choice(PROVIDERS), prompt="Select identifier provider", default=ETHR)
@click.option("--kms", type=click.Choice(["local"]), prompt="Select key management system", default="local")
@click.option("--alias", prompt="Enter alias")
@click.option("--name", help="Name for did:web identifiers (did:web:<name>).")
@click.pass_obj
def did_create(state: _State, provider: str, kms: str, alias: str, name: str | None) -> None:
    """Generate a key (ethr providers) and register a new DID."""
    if provider == WEB and not name:
        name = click.prompt("Enter did:web name")
    doc, _ = state.agent.identities.create_identifier(alias, provider, kms, name=name)
    if state.as_json:
        _emit_json(doc.to_dict())
        return
    click.echo(display.render_table(display.CREATED_IDENTIFIER_HEADERS, [(doc.provider, doc.alias, doc.did)]))


@did.command("list")
@click.pass_obj
def did_list(state: _State) -> None:
    """Managed identifiers (DID, Alias)."""
    _show_identifiers(state, None)


@did.command("resolve")
@click.argument("did_")
@click.pass_obj
def did_resolve(state: _State, did_: str) -> None:
    doc = state.agent.identities.resolve_did(did_)
    _emit_json({**doc.to_dict(), "verifiable": doc.verifiable})


# ------------------------------------------------------------ credential


@main.group()
def credential() -> None:
    """Issue, verify and revoke credentials."""


@credential.command("create")
@click.option("--proof-format", type=click.Choice([PROOF_TYPE]), default=PROOF_TYPE, show_default=True)
@click.option("--issuer", prompt="Issuer DID")
@click.option("--subject", prompt="Subject DID")
@click.option("--type", "types", multiple=True, help="Credential type; repeat or give '(A, B)'.")
@click.option("--claim-type", "claim_types", multiple=True)
@click.option("--claim-value", "claim_values", multiple=True)
@click.option("--revocable/--no-revocable", default=None)
@click.pass_obj
def credential_create(
    state: _State,
    proof_format: str,
    issuer: str,
    subject: str,
    types: tuple[str, ...],
    claim_types: tuple[str, ...],
    claim_values: tuple[str, ...],
    revocable: bool | None,
) -> None:
    """Sign a credential from ISSUER about SUBJECT."""
    type_list = parse_type_list(types or [click.prompt("Credential Type")])
    if not claim_types:
        claim_types = (click.prompt("Claim Type"),)
    if not claim_values:
        claim_values = (click.prompt("Claim Value"),)
    if len(claim_types) != len(claim_values):
        raise click.UsageError("--claim-type and --claim-value must be given the same number of times")
    if revocable is None:
        revocable = click.confirm("Is the credential revocable?", default=False)
    vc = state.agent.credentials.issue_credential(
        issuer, subject, type_list, list(zip(claim_types, claim_values)), revocable
    )
    if state.as_json:
        _emit_json({"id": vc.id_hex, "credential": vc.to_dict()})
        return
    row = [r for r in state.agent.credentials.list_credentials() if r.id == vc.id_hex][0]
    click.echo(display.render_table(display.CREDENTIAL_HEADERS, [(display.age(row.created), row.type, row.from_, row.to)]))
    click.echo(f"id: {vc.id_hex}")


def _print_verification(state: _State, label: str, result) -> None:
    if state.as_json:
        _emit_json({"id": label, "valid": result.valid, "reasons": result.reasons})
    elif result.valid:
        click.echo("VALID")
    else:
        click.echo("INVALID: " + ", ".join(result.reasons))
    if not result.valid:
        sys.exit(1)


@credential.command("verify")
@click.argument("target")
@click.pass_obj
def credential_verify(state: _State, target: str) -> None:
    """Verify a stored credential (by id) or a credential JSON file."""
    raw = _load_json_arg(target)
    creds = state.agent.credentials
    if raw is None:
        vc = creds.get(target)
        _print_verification(state, vc.id_hex, creds.verify_credential(vc))
    else:
        if isinstance(raw, dict) and "credential" in raw:
            raw = raw["credential"]
        _print_verification(state, target, creds.verify_credential(raw))


@credential.command("revoke")
@click.argument("credential_id")
@click.option("--issuer", prompt="Issuer DID")
@click.pass_obj
def credential_revoke(state: _State, credential_id: str, issuer: str) -> None:
    record = state.agent.credentials.revoke_credential(issuer, credential_id)
    if state.as_json:
        _emit_json({"revoked": credential_id, "record": record.to_dict()})
    else:
        click.echo(f"revoked {credential_id}")


# ---------------------------------------------------------- presentation


@main.group()
def presentation() -> None:
    """Bundle credentials into holder-signed presentations."""


@presentation.command("create")
@click.option("--holder", prompt="Holder DID")
@click.option("--tag", prompt="Tag")
@click.option("--credential", "credential_ids", multiple=True, help="Credential id; repeat.")
@click.option("--verifier", "verifiers", multiple=True, help="Verifier DID; repeat.")
@click.pass_obj
def presentation_create(
    state: _State, holder: str, tag: str, credential_ids: tuple[str, ...], verifiers: tuple[str, ...]
) -> None:
    if not credential_ids:
        entered = click.prompt("Credential ids (comma separated)")
        credential_ids = tuple(c.strip() for c in entered.split(",") if c.strip())
    vp = state.agent.presentations.create_presentation(holder, tag, list(credential_ids), list(verifiers))
    if state.as_json:
        _emit_json(vp.to_dict())
        return
    click.echo(f"hash: {vp.hash}")


@presentation.command("verify")
@click.argument("target")
@click.pass_obj
def presentation_verify(state: _State, target: str) -> None:
    """Verify a stored presentation (by hash) or a presentation JSON file."""
    raw = _load_json_arg(target)
    pres = state.agent.presentations
    if raw is None:
        vp = pres.get(target)
        _print_verification(state, vp.hash, pres.verify_presentation(vp))
    else:
        _print_verification(state, target, pres.verify_presentation(raw))


# --------------------------------------------------------------- explore


def _show_identifiers(state: _State, show: str | None) -> None:
    reg = state.agent.identities
    if show:
        doc = reg.resolve_did(show)
        _emit_json({**doc.to_dict(), "verifiable": doc.verifiable})
        return
    rows = reg.list_identifiers()
    if state.as_json:
        _emit_json([{"provider": r.provider, "alias": r.alias, "did": r.did} for r in rows])
        return
    click.echo(display.render_table(display.IDENTIFIER_HEADERS, [(r.did, r.alias) for r in rows]))


@main.command()
@click.argument("section", required=False, type=click.Choice(list(EXPLORE_MENU.values())))
@click.option("--show", help="Display one item in full (DID, credential id or presentation hash).")
@click.option("--did", "did_filter", help="Messages: only those to or from this DID.")
@click.option("--from", "from_", help="Credentials: issuer filter.")
@click.option("--to", help="Credentials: subject filter.")
@click.option("--type", "type_contains", help="Credentials: type substring filter.")
@click.pass_obj
def explore(
    state: _State,
    section: str | None,
    show: str | None,
    did_filter: str | None,
    from_: str | None,
    to: str | None,
    type_contains: str | None,
) -> None:
    """Browse identifiers, messages, credentials and presentations."""
    if section is None:
        labels = list(EXPLORE_MENU)
        for i, label in enumerate(labels, 1):
            click.echo(f"  {i}. {label}")
        choice = click.prompt("Explore", type=click.IntRange(1, len(labels)))
        section = EXPLORE_MENU[labels[choice - 1]]
    agent = state.agent
    if section == "identifiers":
        _show_identifiers(state, show)
    elif section == "credentials":
        if show:
            vc = agent.credentials.get(show)
            _emit_json({"id": vc.id_hex, **vc.to_dict()})
            return
        rows = agent.credentials.list_credentials(from_=from_, to=to, type_contains=type_contains)
        if state.as_json:
            _emit_json([{"created": r.created, "type": r.type, "from": r.from_, "to": r.to, "id": r.id} for r in rows])
            return
        click.echo(
            display.render_table(
                display.CREDENTIAL_HEADERS, [(display.age(r.created), r.type, r.from_, r.to) for r in rows]
            )
        )
    elif section == "presentations":
        if show:
            _emit_json(agent.presentations.get(show).to_dict())
            return
        rows = agent.presentations.list_presentations()
        if state.as_json:
            _emit_json(
                [{"created": r.created, "type": r.type, "holder": r.holder, "verifier": r.verifier, "hash": r.hash} for r in rows]
            )
            return
        click.echo(
            display.render_table(
                display.PRESENTATION_HEADERS, [(display.age(r.created), r.type, r.holder, r.verifier) for r in rows]
            )
        )
    else:
        msgs = agent.list_messages(did_filter)
        if state.as_json:
            _emit_json([{**m.to_dict(), "verified": m.verified} for m in msgs])
            return
        click.echo(
            display.render_table(
                display.MESSAGE_HEADERS,
                [
                    (display.age(m.timestamp), m.sender, m.recipient, m.body, "yes" if m.verified else "INVALID")
                    for m in msgs
                ],
            )
        )


# ---------------------------------------------------------------- ledger


@main.group()
def ledger() -> None:
    """Inspect the hash-chained ledger."""


@ledger.command("verify")
@click.pass_obj
def ledger_verify(state: _State) -> None:
    """Check every block and every store file against the ledger."""
    try:
        agent = state.agent
    except CorruptLedger as exc:
        click.echo(f"TAMPER DETECTED at block {exc.block_index}")
        sys.exit(1)
    except (CredchainError, ValueError, KeyError) as exc:
        click.echo(f"TAMPER DETECTED: unreadable store ({exc})")
        sys.exit(1)
    report = agent.audit()
    if state.as_json:
        _emit_json({"ok": report.ok, "badBlock": report.bad_block, "problems": report.problems})
    elif report.bad_block is not None:
        click.echo(f"TAMPER DETECTED at block {report.bad_block}")
    elif report.problems:
        click.echo("TAMPER DETECTED")
        for problem in report.problems:
            click.echo(f"  {problem}")
    else:
        click.echo(f"OK ({len(agent.ledger)} blocks)")
    if not report.ok:
        sys.exit(1)


@ledger.command("show")
@click.pass_obj
def ledger_show(state: _State) -> None:
    blocks = state.agent.ledger.wire_blocks()
    if state.as_json:
        _emit_json(blocks)
        return
    rows = [
        (str(b["index"]), b["blockHash"][:18] + "…", ", ".join(r["kind"] for r in b["records"]) or "(genesis)")
        for b in blocks
    ]
    click.echo(display.render_table(("Index", "Hash", "Records"), rows))


# --------------------------------------------------------------- message


@main.group()
def message() -> None:
    """Signed messages between DIDs."""


@message.command("send")
@click.option("--from", "sender", prompt="From DID")
@click.option("--to", "recipient", prompt="To DID")
@click.option("--body", prompt="Message")
@click.pass_obj
def message_send(state: _State, sender: str, recipient: str, body: str) -> None:
    msg = state.agent.send_message(sender, recipient, body)
    if state.as_json:
        _emit_json(msg.to_dict())
    else:
        click.echo(f"sent {msg.timestamp}")


# --------------------------------------------------------- export/import


@main.command("export")
@click.argument("owner")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path))
@click.pass_obj
def export_cmd(state: _State, owner: str, output: Path | None) -> None:
    """Write OWNER's credentials and presentations as a portable bundle."""
    bundle = state.agent.export_bundle(owner).to_dict()
    text = json.dumps(bundle, indent=2, ensure_ascii=False)
    if output:
        output.write_text(text + "\n", encoding="utf-8")
        click.echo(f"exported {len(bundle['credentials'])} credentials, {len(bundle['presentations'])} presentations")
    else:
        click.echo(text)


@main.command("import")
@click.argument("bundle_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_obj
def import_cmd(state: _State, bundle_file: Path) -> None:
    """Import a bundle; items whose proofs fail are skipped and reported."""
    try:
        raw = json.loads(bundle_file.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise click.BadParameter(f"{bundle_file}: {exc}") from None
    report = state.agent.import_bundle(raw)
    if state.as_json:
        _emit_json(
            {
                "imported": report.imported,
                "identifiers": report.identifiers,
                "skipped": report.skipped,
                "rejected": [{"item": i, "reason": r} for i, r in report.rejected],
            }
        )
        return
    click.echo(f"imported {report.imported} items ({report.identifiers} identifiers registered, {report.skipped} already present)")
    for item, reason in report.rejected:
        click.echo(f"rejected {item}: {reason}")


def cli_dispatch(argv: list[str]) -> int:
    """Run the CLI in-process and return its exit code."""
    try:
        main.main(args=list(argv), prog_name="credchain", standalone_mode=True)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else (0 if code is None else 1)
    return 0
