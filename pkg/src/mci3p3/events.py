"""Event-log serialization and replay.

One JSON object per line.  The first event is always ``trial_created`` with
the full config; ``outcomes_observed`` events are the only inputs — every
other event is derivable, which is what replay verifies: feed the recorded
outcomes to a fresh engine and demand the identical derived-event stream.

Event names and payloads:

    trial_created      {config}
    stage_started      {stage}
    cohort_assigned    {seq, stage, assignments: [{dc, size}]}
    outcomes_observed  {seq, outcomes: [{dc, n, y}]}
    decision_computed  {seq, dc, n, y, decision}
    omega_built        {seq, candidates}
    omega_pruned       {seq, dc, rule, cause}
    rule_5a_removed    {seq, dc}
    admissible_used    {seq, admissible}
    dcs_selected       {seq, stage, selected}
    sr1_eliminated     {seq, cause, dcs}
    monitor_evaluated  {seq, triggered}
    stage_transition   {seq, frm, to, ...}
    trial_stopped      {seq, reason, detail}
    trial_completed    {seq, enrolled}
    mtdc_selected      {mtdc, estimates}

DCs are two-element ``[i, j]`` lists; DC collections are sorted.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

#: Events that replay must reproduce exactly (everything derived from outcomes).
COMPARABLE = frozenset(
    {
        "cohort_assigned",
        "decision_computed",
        "omega_built",
        "omega_pruned",
        "rule_5a_removed",
        "admissible_used",
        "dcs_selected",
        "sr1_eliminated",
        "monitor_evaluated",
        "stage_transition",
        "trial_stopped",
        "trial_completed",
        "mtdc_selected",
    }
)


def dumps_event(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


def write_log(path: str | Path, events: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(dumps_event(ev) + "\n")


def append_event(path: str | Path, event: dict) -> None:
    with open(path, "a") as fh:
        fh.write(dumps_event(event) + "\n")


def read_log(path: str | Path) -> list[dict]:
    events = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed event: {exc}") from exc
    if not events:
        raise ValueError(f"{path}: empty event log")
    return events


def comparable_stream(events: Iterable[dict]) -> list[dict]:
    out = []
    for ev in events:
        if ev.get("event") not in COMPARABLE:
            continue
        if ev["event"] == "mtdc_selected":
            # The fitted surface is informational; the selection contract
            # is the chosen DC(s).
            ev = {k: v for k, v in ev.items() if k != "estimates"}
        out.append(ev)
    return out


def outcome_events(events: Iterable[dict]) -> list[dict]:
    return [ev for ev in events if ev.get("event") == "outcomes_observed"]


def replay(events: list[dict]):
    """Re-execute the recorded outcomes through a fresh engine.

    Returns the replayed engine; raises on structural problems (missing
    config, outcomes that no longer match the engine's assignments).
    """
    from .scenarios import parse_config
    from .trial import TrialEngine

    if not events or events[0].get("event") != "trial_created":
        raise ValueError("event log must start with trial_created")
    config = parse_config(events[0]["config"])
    engine = TrialEngine(config)
    for ev in outcome_events(events):
        outcomes = [(tuple(o["dc"]), o["n"], o["y"]) for o in ev["outcomes"]]
        engine.observe(outcomes)
    return engine


def first_divergence(
    recorded: list[dict], replayed: list[dict]
) -> tuple[int, dict | None, dict | None] | None:
    """Index and pair of the first differing comparable events, or None."""
    a = comparable_stream(recorded)
    b = comparable_stream(replayed)
    for k in range(max(len(a), len(b))):
        ra = a[k] if k < len(a) else None
        rb = b[k] if k < len(b) else None
        if ra != rb:
            return k, ra, rb
    return None
