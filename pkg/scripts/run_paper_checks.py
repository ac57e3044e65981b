#!/usr/bin/env python3
"""Run the stored verification bundle scope by scope and print a summary.

Usage: python scripts/run_paper_checks.py [scope ...]
Scopes default to theorem1 theorem2 theorem3-lie lemmas.
"""

import sys
import time

from pdesym import catalog


def main(argv=None) -> int:
    scopes = (argv if argv is not None else sys.argv[1:]) or [
        "theorem1",
        "theorem2",
        "theorem3-lie",
        "lemmas",
    ]
    failures = 0
    for scope in scopes:
        started = time.monotonic()
        bundle = catalog.verify_paper(scope)
        elapsed = time.monotonic() - started
        print(f"== {scope} ({elapsed:.1f}s)")
        for check in bundle["checks"]:
            print(f"  {check['verdict']:12s} {check['check']}")
            if check["verdict"] != "pass":
                failures += 1
                for residual in check["residuals"]:
                    print(f"      residual: {residual}")
    print("== not machine-checked")
    for note in catalog.CITED_NOT_VERIFIED:
        print(f"  {note}")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
