"""Append-only episode event log with a deterministic content hash.

Records carry both simulated and wall-clock timestamps; the running SHA-256
covers every record but skips wall-clock fields, so re-running an episode
from the same scenario and seed reproduces the hash bit for bit. Logs
serialise to line-delimited JSON with a version header.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

LOG_SCHEMA_VERSION = 1
#: fields carrying wall-clock measurements, excluded from the content hash so
#: deterministic re-runs reproduce it exactly
_WALL_FIELDS = ("t_wall", "wall_s", "wall_total_s")


class EventLogError(ValueError):
    pass


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


class EventLog:
    def __init__(self):
        self.records: list[dict] = []
        self._hash = hashlib.sha256()
        self._last_t_sim = float("-inf")

    def append(self, record_type: str, t_sim: float, payload: dict) -> dict:
        if t_sim < self._last_t_sim - 1e-9:
            raise EventLogError(
                f"non-monotone timestamp: {t_sim} after {self._last_t_sim}"
            )
        self._last_t_sim = max(self._last_t_sim, t_sim)
        record = {
            "seq": len(self.records),
            "type": record_type,
            "t_sim": t_sim,
            "t_wall": time.time(),
            **payload,
        }
        self.records.append(record)
        hashable = {k: v for k, v in record.items() if k not in _WALL_FIELDS}
        self._hash.update(canonical_json(hashable).encode())
        self._hash.update(b"\n")
        return record

    def content_hash(self) -> str:
        return self._hash.hexdigest()

    def of_type(self, record_type: str) -> list[dict]:
        return [r for r in self.records if r["type"] == record_type]

    def write(self, path: str | Path) -> None:
        p = Path(path)
        with p.open("w") as fh:
            header = {
                "log_schema_version": LOG_SCHEMA_VERSION,
                "content_hash": self.content_hash(),
                "records": len(self.records),
            }
            fh.write(json.dumps(header) + "\n")
            for record in self.records:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    @staticmethod
    def read(path: str | Path) -> tuple[dict, list[dict]]:
        """Returns (header, records) from a line-delimited log file."""
        p = Path(path)
        lines = [ln for ln in p.read_text().splitlines() if ln.strip()]
        if not lines:
            raise EventLogError(f"{p}: empty log file")
        header = json.loads(lines[0])
        if header.get("log_schema_version") != LOG_SCHEMA_VERSION:
            raise EventLogError(f"{p}: unsupported log schema version")
        return header, [json.loads(ln) for ln in lines[1:]]


@dataclass
class EpisodeMetrics:
    """Aggregates of one episode, derived entirely from its event log."""

    cycles: int = 0
    executed_violations: int = 0
    interventions: int = 0          # issued clearances from spliced manoeuvres
    clearances_issued: int = 0
    fallbacks: int = 0
    escalations: int = 0
    replans: int = 0
    missed_coordinations: int = 0
    node_expansions: int = 0
    simulations: int = 0            # ensemble verifications
    rollouts: int = 0
    wall_clock_total_s: float = 0.0
    wall_clock_per_cycle_s: float = 0.0
    strategy_histogram: dict[str, int] = field(default_factory=dict)
    exits: dict[str, dict] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.fallbacks > 0 or self.escalations > 0

    def to_json(self) -> dict:
        return {
            "cycles": self.cycles,
            "executed_violations": self.executed_violations,
            "interventions": self.interventions,
            "clearances_issued": self.clearances_issued,
            "fallbacks": self.fallbacks,
            "escalations": self.escalations,
            "replans": self.replans,
            "missed_coordinations": self.missed_coordinations,
            "node_expansions": self.node_expansions,
            "simulations": self.simulations,
            "rollouts": self.rollouts,
            "wall_clock_total_s": round(self.wall_clock_total_s, 3),
            "wall_clock_per_cycle_s": round(self.wall_clock_per_cycle_s, 4),
            "strategy_histogram": dict(sorted(self.strategy_histogram.items())),
            "exits": self.exits,
            "failed": self.failed,
        }


def emit_metrics(log: EventLog | Iterable[dict]) -> tuple[EpisodeMetrics, str]:
    """Pure aggregation of a log into metrics plus a readable report."""
    records = log.records if isinstance(log, EventLog) else list(log)
    m = EpisodeMetrics()
    for r in records:
        t = r["type"]
        if t == "cycle":
            m.cycles += 1
            m.wall_clock_per_cycle_s += r.get("wall_s", 0.0)
        elif t == "clearance" and r.get("status") == "Issued":
            m.clearances_issued += 1
            if r.get("provenance") not in ("nominal", None):
                m.interventions += 1
        elif t == "resolution":
            m.node_expansions += r.get("expansions", 0)
            m.simulations += r.get("simulations", 0)
            m.rollouts += r.get("rollouts", 0)
            for sid in r.get("applied_strategies", []):
                m.strategy_histogram[sid] = m.strategy_histogram.get(sid, 0) + 1
            if r.get("outcome") == "fallback":
                m.fallbacks += 1
            elif r.get("outcome") == "escalated":
                m.escalations += 1
        elif t == "verification":
            m.simulations += 1
            m.rollouts += r.get("rollouts", 0)
        elif t == "replan":
            m.replans += 1
        elif t == "aircraft_exited":
            m.exits[r["callsign"]] = {
                "time_s": r.get("exit_time_s", r["t_sim"]),
                "level_ft": r["altitude_ft"],
                "level_dev_ft": r["level_dev_ft"],
                "time_dev_s": r["time_dev_s"],
                "missed": r["missed"],
            }
            if r["missed"]:
                m.missed_coordinations += 1
        elif t == "execution_summary":
            m.executed_violations = r["violations"]
        elif t == "episode_end":
            m.wall_clock_total_s = r.get("wall_total_s", 0.0)
    if m.cycles:
        m.wall_clock_per_cycle_s /= m.cycles

    lines = [
        "episode metrics",
        f"  cycles: {m.cycles}   wall: {m.wall_clock_total_s:.2f}s "
        f"({m.wall_clock_per_cycle_s * 1000:.1f} ms/cycle)",
        f"  executed separation violations: {m.executed_violations}",
        f"  clearances issued: {m.clearances_issued} "
        f"(deconfliction interventions: {m.interventions})",
        f"  resolutions: expansions={m.node_expansions} "
        f"ensembles={m.simulations} rollouts={m.rollouts}",
        f"  fallbacks: {m.fallbacks}   escalations: {m.escalations}   "
        f"replans: {m.replans}   missed coordinations: {m.missed_coordinations}",
    ]
    if m.strategy_histogram:
        lines.append("  strategy selection:")
        for sid, n in sorted(m.strategy_histogram.items()):
            lines.append(f"    {sid}: {n}")
    if m.exits:
        lines.append("  exits:")
        for cs, e in sorted(m.exits.items()):
            flag = " MISSED" if e["missed"] else ""
            lines.append(
                f"    {cs}: t={e['time_s']:.0f}s level_dev={e['level_dev_ft']:+.0f}ft "
                f"time_dev={e['time_dev_s']:+.0f}s{flag}"
            )
    return m, "\n".join(lines)
