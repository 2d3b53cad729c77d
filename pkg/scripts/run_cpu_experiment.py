#!/usr/bin/env python3
"""CPU experiment: onboard vs offloaded mapping at 20 Hz, 360 beams, 60 s each.

Prints the two CPU summaries and their ratio as JSON. Equivalent to:

    smartcloud-bench cpu --duration 60s
"""

from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from smartcloud.bench import main  # noqa: E402

if __name__ == "__main__":
    raise SystemExit(main(["cpu", "--duration", "60s"]))
