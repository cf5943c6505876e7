#!/usr/bin/env python3
"""Why a contributor must refuse repeated distance sessions.

alg1 reveals a single Hamming distance per session, which is the contract.
But nothing in the arithmetic stops a curious keyholder from opening fresh
sessions against the same contributor: n + 1 chosen probes reconstruct the
contributor's interpretation exactly. The all-false probe reveals its
weight, and flipping one atom per probe reveals that atom's bit, since
d(probe_i) = weight + 1 - 2 * bit_i.

This script runs the attack against the real binary. The defense is
procedural, not cryptographic: answer at most one session per peer, or
require a fresh own interpretation per session.
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile

ATOMS = ["a", "b", "c", "d"]


def probe_kb(dirpath, name, true_atoms):
    path = os.path.join(dirpath, name + ".kb")
    with open(path, "w") as f:
        for atom in ATOMS:
            f.write(("" if atom in true_atoms else "!") + atom + "\n")
    return path


def run_session(bin_path, kb_a, kb_b, seed):
    out = subprocess.run(
        [bin_path, "measure", "--protocol", "alg1", "--kb-a", kb_a, "--kb-b", kb_b,
         "--signature", ",".join(ATOMS), "--seed", str(seed), "--json"],
        check=True, capture_output=True, text=True)
    doc = json.loads(out.stdout)
    return doc["result"], doc["session_id"]


def main():
    parser = argparse.ArgumentParser(
        description="reconstruct a contributor interpretation from repeated alg1 sessions")
    parser.add_argument("--bin", default=os.environ.get("PSIMC_BIN", "build/tools/psimc"),
                        help="path to the psimc executable")
    args = parser.parse_args()
    if not os.path.exists(args.bin):
        sys.exit(f"psimc binary not found at {args.bin}; build first or pass --bin")

    secret = {"a", "c"}  # the contributor's private interpretation: 1010

    with tempfile.TemporaryDirectory() as tmp:
        kb_b = probe_kb(tmp, "secret", secret)
        zero = probe_kb(tmp, "probe_zero", set())
        weight, sid = run_session(args.bin, zero, kb_b, seed=1)
        print(f"session {sid}: all-false probe, distance {weight} (the weight)")

        bits = {}
        for i, atom in enumerate(ATOMS):
            probe = probe_kb(tmp, f"probe_{atom}", {atom})
            d, sid = run_session(args.bin, probe, kb_b, seed=2 + i)
            bits[atom] = (weight + 1 - d) // 2
            print(f"session {sid}: probe {atom}, distance {d}, so {atom} = {bits[atom]}")

    guessed = {a for a, bit in bits.items() if bit}
    pattern = "".join(str(bits[a]) for a in ATOMS)
    print(f"reconstructed interpretation: {pattern}")
    if guessed != secret:
        sys.exit("reconstruction failed, the protocol changed?")
    print(f"matches the contributor's secret after {len(ATOMS) + 1} sessions; "
          "refuse or rate-limit repeated sessions.")


if __name__ == "__main__":
    main()
