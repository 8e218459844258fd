"""Single-writer embedded document store for the chat service.

Everything lives in one JSON file with a schema version. Writes go through a
process-wide lock and an atomic replace, so concurrent request handlers can
never interleave partial states and a restart always sees the last complete
snapshot.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from pathlib import Path

SCHEMA_VERSION = 1

ROUTINE_STATUSES = ("draft", "saved", "submitted")


class NotFoundError(KeyError):
    pass


class InvalidTransitionError(ValueError):
    pass


def _now_iso() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()) + "Z"


class DocumentStore:
    def __init__(self, path: str | Path, seed_appliances: list[dict] | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._session_locks: dict[str, threading.Lock] = {}
        if self.path.exists():
            self._data = json.loads(self.path.read_text(encoding="utf-8"))
            if self._data.get("schema_version") != SCHEMA_VERSION:
                raise ValueError(f"unsupported store schema in {self.path}")
        else:
            self._data = {
                "schema_version": SCHEMA_VERSION,
                "appliances": seed_appliances or [],
                "routines": [],
                "sessions": {},
                "settings": {
                    "username": "friend",
                    "ha_base_url": "",
                    "ha_token": "",
                    "provider": {"kind": "mock", "endpoint_url": "", "auth_token": "",
                                 "model_id": "gpt-3.5-turbo", "temperature": 0.7},
                },
            }
            self._flush()

    def _flush(self) -> None:
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._data, indent=2, ensure_ascii=False),
                       encoding="utf-8")
        os.replace(tmp, self.path)

    def session_lock(self, session_id: str) -> threading.Lock:
        with self._lock:
            return self._session_locks.setdefault(session_id, threading.Lock())

    # -- appliances ---------------------------------------------------------

    def list_appliances(self, room_id: str | None = None) -> list[dict]:
        with self._lock:
            items = [dict(a) for a in self._data["appliances"]]
        if room_id:
            items = [a for a in items if a["room_id"] == room_id]
        return items

    def get_appliance(self, entity_id: str) -> dict:
        with self._lock:
            for appliance in self._data["appliances"]:
                if appliance["entity_id"] == entity_id:
                    return dict(appliance)
        raise NotFoundError(entity_id)

    def upsert_appliance(self, appliance: dict, must_exist: bool = False) -> dict:
        with self._lock:
            existing = self._data["appliances"]
            for index, current in enumerate(existing):
                if current["entity_id"] == appliance["entity_id"]:
                    existing[index] = appliance
                    self._flush()
                    return dict(appliance)
            if must_exist:
                raise NotFoundError(appliance["entity_id"])
            existing.append(appliance)
            self._flush()
            return dict(appliance)

    def delete_appliance(self, entity_id: str) -> None:
        with self._lock:
            appliances = self._data["appliances"]
            remaining = [a for a in appliances if a["entity_id"] != entity_id]
            if len(remaining) == len(appliances):
                raise NotFoundError(entity_id)
            self._data["appliances"] = remaining
            self._flush()

    # -- routines -----------------------------------------------------------

    def add_routine(self, automation_json: str, source_session: str) -> dict:
        routine = {
            "id": uuid.uuid4().hex[:12],
            "automation_json": automation_json,
            "status": "draft",
            "created_at": _now_iso(),
            "source_session": source_session,
        }
        with self._lock:
            self._data["routines"].append(routine)
            self._flush()
        return dict(routine)

    def list_routines(self) -> list[dict]:
        with self._lock:
            return [dict(r) for r in self._data["routines"]]

    def get_routine(self, routine_id: str) -> dict:
        with self._lock:
            for routine in self._data["routines"]:
                if routine["id"] == routine_id:
                    return dict(routine)
        raise NotFoundError(routine_id)

    def transition_routine(self, routine_id: str, new_status: str) -> dict:
        allowed = {"draft": {"saved"}, "saved": {"submitted"}, "submitted": set()}
        with self._lock:
            for routine in self._data["routines"]:
                if routine["id"] == routine_id:
                    if new_status not in allowed[routine["status"]]:
                        raise InvalidTransitionError(
                            f"cannot go {routine['status']} -> {new_status}")
                    routine["status"] = new_status
                    self._flush()
                    return dict(routine)
        raise NotFoundError(routine_id)

    def delete_routine(self, routine_id: str) -> None:
        with self._lock:
            for routine in self._data["routines"]:
                if routine["id"] == routine_id:
                    if routine["status"] == "submitted":
                        raise InvalidTransitionError("submitted routines cannot be deleted")
                    self._data["routines"].remove(routine)
                    self._flush()
                    return
        raise NotFoundError(routine_id)

    # -- sessions -----------------------------------------------------------

    def get_or_create_session(self, session_id: str | None) -> str:
        with self._lock:
            if session_id and session_id in self._data["sessions"]:
                return session_id
            new_id = session_id or uuid.uuid4().hex[:12]
            self._data["sessions"].setdefault(new_id, {"messages": []})
            self._flush()
            return new_id

    def append_message(self, session_id: str, role: str, text: str) -> None:
        with self._lock:
            session = self._data["sessions"].get(session_id)
            if session is None:
                raise NotFoundError(session_id)
            session["messages"].append({"role": role, "text": text, "ts": _now_iso()})
            self._flush()

    def session_messages(self, session_id: str) -> list[dict]:
        with self._lock:
            session = self._data["sessions"].get(session_id)
            if session is None:
                raise NotFoundError(session_id)
            return [dict(m) for m in session["messages"]]

    # -- settings -----------------------------------------------------------

    def get_settings(self) -> dict:
        with self._lock:
            return json.loads(json.dumps(self._data["settings"]))

    def update_settings(self, patch: dict) -> dict:
        with self._lock:
            settings = self._data["settings"]
            for key, value in patch.items():
                if key == "provider" and isinstance(value, dict):
                    settings["provider"].update(value)
                else:
                    settings[key] = value
            self._flush()
            return json.loads(json.dumps(settings))
