"""Compare the compiled and pure-Python crypto kernels.

    python benchmarks/bench_backends.py [--repeat N]

Times keccak-256 over short and long inputs, a signature, a verification,
and a full 100-block ledger check, once per available backend.
"""
from __future__ import annotations

import argparse
import tempfile
import timeit
from pathlib import Path

from credchain.crypto import digest, generate_keypair, kernel, sign_digest, verify_signature
from credchain.dids import ETHR, derive_did
from credchain.ledger import MESSAGE, Ledger, LedgerRecord, verify_chain


def _chain(tmp: Path) -> list[dict]:
    kp = generate_keypair()
    did = derive_did(ETHR, kp.public_compressed)
    ledger = Ledger.open(tmp / "ledger.jsonl")
    for i in range(99):
        ledger.append_block([LedgerRecord.create(MESSAGE, digest(b"%d" % i), did, kp.private_scalar)])
    return ledger.wire_blocks()


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    kp = generate_keypair()
    d = digest(b"benchmark")
    sig = sign_digest(kp.private_scalar, d)
    with tempfile.TemporaryDirectory() as tmp:
        blocks = _chain(Path(tmp))

    cases = {
        "keccak 32 B": (lambda: digest(b"x" * 32), 200),
        "keccak 4 KiB": (lambda: digest(b"x" * 4096), 20),
        "sign": (lambda: sign_digest(kp.private_scalar, d), 10),
        "verify": (lambda: verify_signature(kp.public_compressed, d, sig), 10),
        "verify_chain 100 blocks": (lambda: verify_chain(blocks), 1),
    }
    results: dict[str, dict[str, float]] = {}
    for name in sorted(kernel.BACKENDS):
        kernel.set_backend(name)
        for case, (fn, number) in cases.items():
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            results.setdefault(case, {})[name] = best

    backends = sorted(kernel.BACKENDS)
    header = f"{'case':<26}" + "".join(f"{b:>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for case, row in results.items():
        line = f"{case:<26}" + "".join(f"{row[b] * 1e6:>11.1f} us" for b in backends)
        if len(backends) == 2:
            line += f"{row['python'] / row['cython']:>9.0f}x"
        print(line)
    if "cython" not in kernel.BACKENDS:
        print("compiled kernel not built; only the pure-Python backend was timed")


if __name__ == "__main__":
    main()
