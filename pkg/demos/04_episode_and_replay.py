"""A full operational episode and its deterministic replay.

Runs the plan/verify/resolve/issue cycle on the head-on scenario to
completion, prints the clearance history and metrics, writes the event log,
and re-runs the episode from the embedded scenario to show the content hash
reproduces bit for bit.
"""

import tempfile
from pathlib import Path

from skylanes.events import EventLog
from skylanes.runner import replay_episode, run_episode
from skylanes.scenario import load_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def main():
    scenario = load_scenario(SCENARIOS / "head_on.json")
    result = run_episode(scenario)

    print("clearance history:")
    for rec in result.log.of_type("clearance"):
        if rec["status"] != "Issued":
            continue
        tag = "" if rec["provenance"] == "nominal" else \
            f"   << deconfliction ({rec['provenance']})"
        print(f"  t={rec['t_sim']:6.0f}s  {rec['callsign']}: "
              f"{rec['action']['phrase']}{tag}")

    print()
    print(result.report)
    print(f"\nexit code: {result.exit_code}")
    print(f"event log: {len(result.log.records)} records, "
          f"hash {result.log.content_hash()[:32]}…")

    log_path = Path(tempfile.mkdtemp()) / "episode.log"
    result.log.write(log_path)
    header, records = EventLog.read(log_path)
    replayed, _ = replay_episode(records)
    match = replayed.log.content_hash() == header["content_hash"]
    print(f"replay from {log_path.name}: hash "
          f"{'matches exactly' if match else 'MISMATCH'}")


if __name__ == "__main__":
    main()
