"""HTTP conduct service: create trials, submit outcomes, fetch state, finalize.

State is exactly the per-trial append-only event log on disk.  A restarted
service replays each log through a fresh engine and lands on the identical
snapshot; recommendations come from the same engine code the CLI uses, so
the two can never disagree.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from . import events as ev
from .scenarios import ParseError, parse_config
from .trial import OutcomeMismatch, StateError, TrialEngine


class TrialRecord:
    def __init__(self, engine: TrialEngine, log_path: Path):
        self.engine = engine
        self.log_path = log_path
        self.lock = threading.Lock()
        self.persisted = 0

    def persist_new_events(self) -> list[dict]:
        new = self.engine.events[self.persisted :]
        for event in new:
            ev.append_event(self.log_path, event)
        self.persisted = len(self.engine.events)
        return new


class TrialStore:
    """Registry of live trials, lazily rehydrated from their event logs."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._records: dict[str, TrialRecord] = {}
        self._registry_lock = threading.Lock()

    def _log_path(self, trial_id: str) -> Path:
        return self.data_dir / f"{trial_id}.jsonl"

    def create(self, config) -> tuple[str, TrialRecord]:
        trial_id = uuid.uuid4().hex
        record = TrialRecord(TrialEngine(config), self._log_path(trial_id))
        record.persist_new_events()
        with self._registry_lock:
            self._records[trial_id] = record
        return trial_id, record

    def get(self, trial_id: str) -> TrialRecord:
        with self._registry_lock:
            record = self._records.get(trial_id)
            if record is not None:
                return record
            path = self._log_path(trial_id)
            if not path.exists():
                raise KeyError(trial_id)
            engine = ev.replay(ev.read_log(path))
            record = TrialRecord(engine, path)
            record.persisted = len(engine.events)
            self._records[trial_id] = record
            return record


def state_view(engine: TrialEngine) -> dict:
    view = {
        "snapshot": engine.snapshot(),
        "terminal": engine.terminal,
        "recommendation": engine.describe_pending(),
        "result": None,
    }
    if engine.terminal:
        res = engine.result()
        view["result"] = {
            "mtdc": _mtdc_json(res.mtdc),
            "stopped_early": res.stopped_early,
            "stop_reason": res.stop_reason,
            "estimates": None
            if res.estimates is None
            else [[round(float(v), 10) for v in row] for row in res.estimates],
        }
    return view


def _mtdc_json(mtdc):
    if mtdc is None:
        return None
    if isinstance(mtdc, list):
        return [[int(d[0]), int(d[1])] for d in mtdc]
    return [int(mtdc[0]), int(mtdc[1])]


def build_app(data_dir: Path) -> FastAPI:
    app = FastAPI(title="dose-combination trial conduct")
    store = TrialStore(data_dir)

    def fetch(trial_id: str) -> TrialRecord:
        try:
            return store.get(trial_id)
        except KeyError:
            raise HTTPException(404, f"unknown trial {trial_id}")

    @app.post("/trials", status_code=201)
    def create_trial(payload: dict = Body(...)):
        try:
            config = parse_config(payload)
        except (ParseError, ValueError) as exc:
            raise HTTPException(400, str(exc))
        trial_id, record = store.create(config)
        return {"trial_id": trial_id, **state_view(record.engine)}

    @app.get("/trials/{trial_id}")
    def get_state(trial_id: str):
        record = fetch(trial_id)
        with record.lock:
            return {"trial_id": trial_id, **state_view(record.engine)}

    @app.post("/trials/{trial_id}/outcomes")
    def submit_outcomes(trial_id: str, payload: dict = Body(...)):
        record = fetch(trial_id)
        unknown = set(payload) - {"seq", "outcomes"}
        if unknown:
            raise HTTPException(400, f"unknown keys {sorted(unknown)}")
        try:
            seq = int(payload["seq"])
            outcomes = [
                ((int(o["dc"][0]), int(o["dc"][1])), int(o["n"]), int(o["y"]))
                for o in payload["outcomes"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(400, f"malformed outcomes payload: {exc}")
        for _, n, y in outcomes:
            if not 0 <= y <= n:
                raise HTTPException(400, f"DLT count {y} out of range for cohort of {n}")
        with record.lock:
            engine = record.engine
            if seq < engine.seq or engine.terminal:
                stored = _find_outcome_event(engine.events, seq)
                if stored is not None and _same_outcomes(stored, outcomes):
                    return {
                        "trial_id": trial_id,
                        "duplicate": True,
                        "events": [],
                        **state_view(engine),
                    }
                raise HTTPException(
                    409,
                    "trial is stopped" if engine.terminal else f"cohort {seq} already recorded with different outcomes",
                )
            if seq != engine.seq:
                raise HTTPException(409, f"expected outcomes for cohort {engine.seq}, got {seq}")
            try:
                engine.observe(outcomes)
            except OutcomeMismatch as exc:
                raise HTTPException(409, str(exc))
            except StateError as exc:
                raise HTTPException(409, str(exc))
            new_events = record.persist_new_events()
            return {
                "trial_id": trial_id,
                "duplicate": False,
                "events": new_events,
                **state_view(engine),
            }

    @app.post("/trials/{trial_id}/finalize")
    def finalize_trial(trial_id: str, payload: dict = Body(default={})):
        record = fetch(trial_id)
        force = bool(payload.get("force", False))
        with record.lock:
            engine = record.engine
            if engine.terminal:
                return {"trial_id": trial_id, "provisional": False, **state_view(engine)}
            if not force:
                raise HTTPException(
                    409, "trial still has budget and no safety stop; pass force=true"
                )
            mtdc, estimates = engine.provisional_report()
            return {
                "trial_id": trial_id,
                "provisional": True,
                "result": {
                    "mtdc": _mtdc_json(mtdc),
                    "stopped_early": False,
                    "stop_reason": None,
                    "estimates": None
                    if estimates is None
                    else [[round(float(v), 10) for v in row] for row in estimates],
                },
                "recommendation": engine.describe_pending(),
                "snapshot": engine.snapshot(),
                "terminal": False,
            }

    @app.get("/trials/{trial_id}/events", response_class=PlainTextResponse)
    def get_events(trial_id: str):
        record = fetch(trial_id)
        with record.lock:
            return "\n".join(ev.dumps_event(e) for e in record.engine.events) + "\n"

    return app


def _find_outcome_event(events: list[dict], seq: int) -> dict | None:
    for event in events:
        if event.get("event") == "outcomes_observed" and event.get("seq") == seq:
            return event
    return None


def _same_outcomes(event: dict, outcomes) -> bool:
    recorded = sorted(
        ((o["dc"][0], o["dc"][1]), o["n"], o["y"]) for o in event["outcomes"]
    )
    return recorded == sorted(outcomes)
