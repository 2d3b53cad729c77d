#!/usr/bin/env python3
"""Heterogeneous mission: lidar robot maps, camera robot uploads frames, the
mission stops when the target object is reported. Writes the event log to
results/mission.ndjson. Equivalent to:

    smartcloud-sim --log results/mission.ndjson
"""

from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from smartcloud.simnet.cli import main  # noqa: E402

if __name__ == "__main__":
    out = Path(__file__).resolve().parent.parent / "results"
    out.mkdir(exist_ok=True)
    raise SystemExit(main(["--log", str(out / "mission.ndjson")]))
