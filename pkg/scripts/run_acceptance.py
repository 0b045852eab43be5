"""Run the acceptance suite and print one line per criterion.

    python3 scripts/run_acceptance.py            # all fourteen
    python3 scripts/run_acceptance.py 4 11       # a selection
"""

import sys

from orbitcount.acceptance import run_acceptance

if __name__ == "__main__":
    selected = [int(a) for a in sys.argv[1:]] or None
    results = run_acceptance(selected, echo=print)
    sys.exit(0 if all(r.passed and r.within_time for r in results) else 2)
