"""HTTP service behind the EcoMate chat application.

Conversational routine generation plus appliance, routine, and settings
management over REST. The UI bundle, when built, is served statically from
the same process. Persistence is the single-writer document store; chat
turns are serialized per session.
"""

from __future__ import annotations

import argparse
import json
import re
from importlib import resources
from pathlib import Path
from urllib.parse import urlparse

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .. import extractor, gateway, prompts, validator
from ..home import ENTITY_ID_RE, Appliance, EnergyProfile, HomeTemplate, Room
from ..secret import Secret
from .store import DocumentStore, InvalidTransitionError, NotFoundError

MOCK_ROUTINE_REPLY = (
    "Sure! Here is a routine that turns off your smart lights at sunset to save energy.\n"
    "```\n"
    + json.dumps({
        "alias": "Lights off at sunset",
        "trigger": [{"platform": "sun", "event": "sunset"}],
        "action": [{"service": "light.turn_off", "entity_id": "light.smart_lights"}],
    }, indent=2)
    + "\n```\n"
    "Used a sunset trigger so the lights never stay on overnight."
)


class ChatIn(BaseModel):
    session_id: str | None = None
    message: str = Field(min_length=1)


class ApplianceIn(BaseModel):
    entity_id: str
    name: str = Field(min_length=1)
    appliance_type: str = Field(min_length=1)
    room_id: str = Field(min_length=1)
    avg_power_watts: float = Field(ge=0)
    capabilities: list[str] = Field(min_length=1)


class ProviderIn(BaseModel):
    kind: str | None = None
    endpoint_url: str | None = None
    auth_token: str | None = None
    model_id: str | None = None
    temperature: float | None = None


class SettingsIn(BaseModel):
    username: str | None = None
    ha_base_url: str | None = None
    ha_token: str | None = None
    provider: ProviderIn | None = None


def _redact(token: str) -> str:
    return Secret(token).redacted() if token else ""


def _valid_url(url: str) -> bool:
    parsed = urlparse(url)
    return parsed.scheme in ("http", "https") and bool(parsed.netloc)


def default_provider_factory(provider_settings: dict):
    kind = provider_settings.get("kind", "mock")
    if kind == "mock":
        return gateway.MockProvider(text=provider_settings.get("mock_text")
                                    or MOCK_ROUTINE_REPLY)
    if kind == "replay":
        return gateway.load_replay_store(provider_settings["endpoint_url"])
    if kind == "http":
        if not provider_settings.get("endpoint_url"):
            raise LookupError("provider endpoint_url is not configured")
        return gateway.OpenAiHttpProvider(gateway.ProviderConfig(
            name=provider_settings.get("model_id", "llm"),
            endpoint_url=provider_settings["endpoint_url"],
            auth_token=Secret(provider_settings.get("auth_token", "")),
        ))
    raise LookupError(f"unknown provider kind {kind!r}")


def _template_from_store(store: DocumentStore) -> HomeTemplate:
    appliances = store.list_appliances()
    rooms = sorted({a["room_id"] for a in appliances})
    return HomeTemplate(
        id="home",
        rooms=tuple(Room(id=r, name=r.replace("_", " ").title()) for r in rooms),
        appliances=tuple(
            Appliance(
                entity_id=a["entity_id"], name=a["name"],
                appliance_type=a["appliance_type"], room_id=a["room_id"],
                avg_power_watts=float(a["avg_power_watts"]),
                capabilities=frozenset(a["capabilities"]),
            )
            for a in appliances
        ),
        sensors=(),
    )


def _profile_from_store(store: DocumentStore) -> EnergyProfile:
    entries: dict[str, tuple[float, int]] = {}
    for appliance in store.list_appliances():
        kind = appliance["appliance_type"].lower()
        mean, count = entries.get(kind, (0.0, 0))
        total = mean * count + float(appliance["avg_power_watts"])
        entries[kind] = (total / (count + 1), count + 1)
    return EnergyProfile(entries=entries)


def seed_appliances() -> list[dict]:
    document = resources.files("ecomate").joinpath("data", "demo_home.json") \
        .read_text(encoding="utf-8")
    return json.loads(document)["appliances"]


def load_starters() -> list[str]:
    document = resources.files("ecomate").joinpath("data", "starters.json") \
        .read_text(encoding="utf-8")
    return json.loads(document)["starters"]


def create_app(store_path: str | Path, provider_factory=None, ha_submit=None,
               api_token: str | None = None, ui_dist: str | Path | None = None) -> FastAPI:
    store = DocumentStore(store_path, seed_appliances=seed_appliances())
    provider_factory = provider_factory or default_provider_factory
    ha_submit = ha_submit or validator.submit_live
    app = FastAPI(title="EcoMate", version="0.1.0")
    app.state.store = store

    def require_token(request: Request) -> None:
        if api_token is None:
            return
        header = request.headers.get("Authorization", "")
        if header != f"Bearer {api_token}":
            raise HTTPException(status_code=401, detail="invalid or missing API token")

    guard = [Depends(require_token)]

    @app.exception_handler(NotFoundError)
    async def not_found(_, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"detail": f"not found: {exc}"})

    @app.exception_handler(InvalidTransitionError)
    async def invalid_transition(_, exc: InvalidTransitionError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.get("/api/starters", dependencies=guard)
    def starters() -> dict:
        return {"starters": load_starters()}

    # -- chat ---------------------------------------------------------------

    @app.post("/api/chat", dependencies=guard)
    def chat(payload: ChatIn) -> dict:
        settings = store.get_settings()
        try:
            provider = provider_factory(settings.get("provider", {}))
        except LookupError as exc:
            raise HTTPException(status_code=409, detail=f"settings missing: {exc}")

        session_id = store.get_or_create_session(payload.session_id)
        with store.session_lock(session_id):
            store.append_message(session_id, "user", payload.message)
            messages = store.session_messages(session_id)
            history = [(m["role"], m["text"]) for m in messages]

            template = _template_from_store(store)
            profile = _profile_from_store(store)
            bundle = prompts.build_prompt(
                prompts.PromptVariant.ECOMATE_CHAT, template, profile,
                command=payload.message, history=history,
                username=settings.get("username") or "friend")
            request = gateway.LlmRequest(
                model_id=settings.get("provider", {}).get("model_id", "gpt-3.5-turbo"),
                temperature=float(settings.get("provider", {}).get("temperature", 0.7)),
                messages=tuple(bundle.to_messages()))
            try:
                response = gateway.complete(provider, request)
            except gateway.GatewayError as exc:
                return {"session_id": session_id, "routine_id": None,
                        "reply_text": f"The assistant is unavailable right now ({exc}).",
                        "error": "provider"}

            extraction = extractor.extract(response.text)
            reply_text = extraction.remainder_text.strip()
            routine_id = None
            if extraction.found:
                outcome = validator.validate_offline(extraction.json_text, template,
                                                     strict_entities=False)
                if outcome.ok:
                    routine = store.add_routine(extraction.json_text, session_id)
                    routine_id = routine["id"]
                else:
                    reply_text += f"\n\nThe generated routine was not usable: {outcome.message}"
            store.append_message(session_id, "assistant", reply_text)
        return {"session_id": session_id, "reply_text": reply_text,
                "routine_id": routine_id}

    # -- appliances ---------------------------------------------------------

    def _check_appliance(payload: ApplianceIn) -> dict:
        if not ENTITY_ID_RE.match(payload.entity_id):
            raise HTTPException(status_code=422,
                                detail=f"bad entity_id {payload.entity_id!r}")
        return payload.model_dump()

    @app.get("/api/appliances", dependencies=guard)
    def list_appliances(room: str | None = None) -> list[dict]:
        return store.list_appliances(room_id=room)

    @app.post("/api/appliances", status_code=201, dependencies=guard)
    def add_appliance(payload: ApplianceIn) -> dict:
        return store.upsert_appliance(_check_appliance(payload))

    @app.put("/api/appliances/{entity_id}", dependencies=guard)
    def update_appliance(entity_id: str, payload: ApplianceIn) -> dict:
        if payload.entity_id != entity_id:
            raise HTTPException(status_code=422, detail="entity_id mismatch")
        return store.upsert_appliance(_check_appliance(payload), must_exist=True)

    @app.delete("/api/appliances/{entity_id}", status_code=204, dependencies=guard)
    def delete_appliance(entity_id: str) -> None:
        store.delete_appliance(entity_id)

    # -- routines -----------------------------------------------------------

    def _routine_view(routine: dict, with_code: bool = False) -> dict:
        try:
            alias = json.loads(routine["automation_json"]).get("alias", "routine")
        except (json.JSONDecodeError, AttributeError):
            alias = "routine"
        view = {"id": routine["id"], "alias": alias, "status": routine["status"],
                "created_at": routine["created_at"]}
        if with_code:
            view["automation_json"] = routine["automation_json"]
        return view

    @app.get("/api/routines", dependencies=guard)
    def list_routines() -> list[dict]:
        return [_routine_view(r) for r in store.list_routines()]

    @app.get("/api/routines/{routine_id}", dependencies=guard)
    def get_routine(routine_id: str) -> dict:
        return _routine_view(store.get_routine(routine_id), with_code=True)

    @app.delete("/api/routines/{routine_id}", status_code=204, dependencies=guard)
    def delete_routine(routine_id: str) -> None:
        store.delete_routine(routine_id)

    @app.post("/api/routines/{routine_id}/save", dependencies=guard)
    def save_routine(routine_id: str) -> dict:
        return _routine_view(store.transition_routine(routine_id, "saved"))

    @app.post("/api/routines/{routine_id}/submit", dependencies=guard)
    def submit_routine(routine_id: str) -> dict:
        routine = store.get_routine(routine_id)
        if routine["status"] != "saved":
            raise InvalidTransitionError(
                f"cannot go {routine['status']} -> submitted")
        settings = store.get_settings()
        if not settings.get("ha_base_url") or not settings.get("ha_token"):
            raise HTTPException(status_code=409,
                                detail="settings missing: HomeAssistant url/token")
        endpoint = validator.HaEndpoint(base_url=settings["ha_base_url"],
                                        token=Secret(settings["ha_token"]))
        try:
            outcome = ha_submit(routine["automation_json"], endpoint)
        except (validator.UnreachableError, validator.UnauthorizedError) as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        if not outcome.ok:
            raise HTTPException(status_code=502, detail=outcome.message)
        updated = store.transition_routine(routine_id, "submitted")
        view = _routine_view(updated)
        view["message"] = outcome.message
        return view

    # -- settings -----------------------------------------------------------

    def _settings_view(settings: dict) -> dict:
        provider = settings.get("provider", {})
        return {
            "username": settings.get("username", ""),
            "ha_base_url": settings.get("ha_base_url", ""),
            "ha_token": _redact(settings.get("ha_token", "")),
            "ha_configured": bool(settings.get("ha_base_url") and settings.get("ha_token")),
            "provider": {
                "kind": provider.get("kind", "mock"),
                "endpoint_url": provider.get("endpoint_url", ""),
                "auth_token": _redact(provider.get("auth_token", "")),
                "model_id": provider.get("model_id", ""),
                "temperature": provider.get("temperature", 0.7),
            },
        }

    @app.get("/api/settings", dependencies=guard)
    def get_settings() -> dict:
        return _settings_view(store.get_settings())

    @app.put("/api/settings", dependencies=guard)
    def put_settings(payload: SettingsIn) -> dict:
        patch = payload.model_dump(exclude_none=True)
        for url_key in ("ha_base_url",):
            if url_key in patch and patch[url_key] and not _valid_url(patch[url_key]):
                raise HTTPException(status_code=422,
                                    detail=f"{url_key} is not a valid http(s) url")
        provider_patch = patch.get("provider")
        if provider_patch and provider_patch.get("endpoint_url"):
            if not _valid_url(provider_patch["endpoint_url"]):
                raise HTTPException(status_code=422,
                                    detail="provider.endpoint_url is not a valid http(s) url")
        return _settings_view(store.update_settings(patch))

    if ui_dist and Path(ui_dist).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ecomate-serve",
                                     description="EcoMate chat service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--store", default="ecomate_store.json")
    parser.add_argument("--ui-dist", default="frontend/dist")
    parser.add_argument("--api-token", default=None,
                        help="require this bearer token on every /api route")
    args = parser.parse_args(argv)

    import uvicorn

    app = create_app(args.store, api_token=args.api_token, ui_dist=args.ui_dist)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
