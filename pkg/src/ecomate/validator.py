"""Automation validation against a strict HomeAssistant-style schema.

``validate_offline`` reproduces the acceptance decision (and error-message
shapes) of HomeAssistant's automation config API for a conservative subset of
the schema, so the benchmark and tests run with no HomeAssistant instance.
``submit_live`` pushes an automation to a real instance over REST. Divergence
between the two is resolved by extending the golden corpus, which records
live outcomes and is the oracle for the offline path.
"""

from __future__ import annotations

import enum
import json
import re
import threading
import time
from dataclasses import dataclass, field

import requests

from .home import ENTITY_ID_RE, HomeTemplate
from .secret import Secret

VALID_MESSAGE = "Home-assistant uploaded the automation correctly"
PARSE_ERROR_PREFIX = "Error while parsing the automation: SyntaxError: "
MALFORMED_PREFIX = "Message malformed: "

TOP_LEVEL_KEYS = ("alias", "id", "description", "mode", "trigger", "condition", "action")
REQUIRED_KEYS = ("alias", "trigger", "action")
MODES = ("parallel", "queued", "restart", "single")

# platform -> (required keys, all allowed keys)
TRIGGER_PLATFORMS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "state": (("entity_id",), ("platform", "entity_id", "to", "from", "for")),
    "numeric_state": (("entity_id",), ("platform", "entity_id", "above", "below", "for")),
    "time": (("at",), ("platform", "at")),
    "sun": (("event",), ("platform", "event", "offset")),
    "event": (("event_type",), ("platform", "event_type", "event_data")),
    "device": (("device_id",), ("platform", "device_id", "domain", "entity_id", "type", "subtype")),
}

CONDITION_TYPES = ("and", "numeric_state", "not", "or", "state", "sun", "template", "time", "zone")
CONDITION_KEYS = ("condition", "entity_id", "state", "attribute", "above", "below",
                  "after", "before", "for", "weekday", "conditions", "value_template")
ACTION_KEYS = ("service", "entity_id", "target", "data", "delay")
TARGET_KEYS = ("entity_id",)

SERVICE_RE = re.compile(r"^[a-z_]+\.[a-z0-9_]+$")
TIME_RE = re.compile(r"^(\d{2}):(\d{2}):(\d{2})$")


class ValidationStatus(enum.Enum):
    VALID = "Valid"
    PARSE_ERROR = "ParseError"
    MALFORMED = "Malformed"


@dataclass(frozen=True)
class ValidationOutcome:
    status: ValidationStatus
    message: str
    offending_path: str | None = None

    @property
    def ok(self) -> bool:
        return self.status is ValidationStatus.VALID


class UnreachableError(ConnectionError):
    """The HomeAssistant endpoint could not be reached."""


class UnauthorizedError(PermissionError):
    """The HomeAssistant endpoint rejected our bearer token."""


def _valid() -> ValidationOutcome:
    return ValidationOutcome(ValidationStatus.VALID, VALID_MESSAGE)


def _malformed(detail: str, key: str) -> ValidationOutcome:
    path = f"data['{key}']"
    return ValidationOutcome(ValidationStatus.MALFORMED, f"{MALFORMED_PREFIX}{detail} @ {path}", path)


def _parse_error(detail: str) -> ValidationOutcome:
    return ValidationOutcome(ValidationStatus.PARSE_ERROR, f"{PARSE_ERROR_PREFIX}{detail}")


def js_parse_detail(text: str, error: json.JSONDecodeError) -> str:
    """Render a JSON parse failure the way a JavaScript runtime reports it."""
    pos = error.pos
    while pos < len(text) and text[pos] in " \t\r\n":
        pos += 1
    if pos >= len(text):
        return "Unexpected end of JSON input"
    token = text[pos]
    if token == '"':
        return f"Unexpected string in JSON at position {pos}"
    if token.isdigit():
        return f"Unexpected number in JSON at position {pos}"
    return f"Unexpected token {token} in JSON at position {pos}"


def _check_extra_keys(item: dict, allowed: tuple[str, ...]) -> ValidationOutcome | None:
    for key in item:
        if key not in allowed:
            return _malformed("extra keys not allowed", str(key))
    return None


def _check_entity_value(value: object) -> ValidationOutcome | None:
    ids = value if isinstance(value, list) else [value]
    for entity_id in ids:
        if not isinstance(entity_id, str) or not ENTITY_ID_RE.match(entity_id):
            return _malformed(f"Entity ID {entity_id} is an invalid entity ID for dictionary value",
                              "entity_id")
    return None


def _valid_clock_value(value: object) -> bool:
    if not isinstance(value, str):
        return False
    match = TIME_RE.match(value)
    if not match:
        return False
    hours, minutes, seconds = (int(part) for part in match.groups())
    return hours < 24 and minutes < 60 and seconds < 60


def _check_trigger(item: object) -> ValidationOutcome | None:
    if not isinstance(item, dict):
        return _malformed("expected a dictionary", "trigger")
    platform = item.get("platform")
    if platform is None:
        return _malformed("required key not provided", "platform")
    if platform not in TRIGGER_PLATFORMS:
        options = ", ".join(repr(name) for name in sorted(TRIGGER_PLATFORMS))
        return _malformed(f"value must be one of [{options}] for dictionary value", "platform")
    required, allowed = TRIGGER_PLATFORMS[platform]
    outcome = _check_extra_keys(item, allowed)
    if outcome:
        return outcome
    for key in required:
        if key not in item:
            return _malformed("required key not provided", key)

    if platform == "time" and not _valid_clock_value(item["at"]):
        return _malformed(f"Invalid time specified: {item['at']} for dictionary value", "at")
    if platform == "sun" and item["event"] not in ("sunrise", "sunset"):
        return _malformed("value must be one of ['sunrise', 'sunset'] for dictionary value", "event")
    if platform == "numeric_state":
        if "above" not in item and "below" not in item:
            return _malformed("must contain at least one of above, below.", "trigger")
        for bound in ("above", "below"):
            if bound in item and not isinstance(item[bound], (int, float)):
                return _malformed("expected float for dictionary value", bound)
    if "entity_id" in item:
        outcome = _check_entity_value(item["entity_id"])
        if outcome:
            return outcome
    return None


def _check_condition(item: object) -> ValidationOutcome | None:
    if not isinstance(item, dict):
        return _malformed("expected a dictionary", "condition")
    kind = item.get("condition")
    if kind is None:
        return _malformed("required key not provided", "condition")
    if kind not in CONDITION_TYPES:
        options = ", ".join(repr(name) for name in CONDITION_TYPES)
        return _malformed(f"value must be one of [{options}] for dictionary value", "condition")
    outcome = _check_extra_keys(item, CONDITION_KEYS)
    if outcome:
        return outcome
    if "entity_id" in item:
        return _check_entity_value(item["entity_id"])
    return None


def _check_action(item: object) -> ValidationOutcome | None:
    if not isinstance(item, dict):
        return _malformed("expected a dictionary", "action")
    outcome = _check_extra_keys(item, ACTION_KEYS)
    if outcome:
        return outcome
    if "service" not in item and "delay" not in item:
        return _malformed("required key not provided", "service")
    if "service" in item:
        service = item["service"]
        if not isinstance(service, str) or not SERVICE_RE.match(service):
            return _malformed(
                f"Service {service} does not match format <domain>.<name> for dictionary value",
                "service")
    elif not _valid_clock_value(item["delay"]):
        return _malformed(f"Invalid time specified: {item['delay']} for dictionary value", "delay")
    if "entity_id" in item:
        outcome = _check_entity_value(item["entity_id"])
        if outcome:
            return outcome
    if "target" in item:
        target = item["target"]
        if not isinstance(target, dict):
            return _malformed("expected a dictionary for dictionary value", "target")
        outcome = _check_extra_keys(target, TARGET_KEYS)
        if outcome:
            return outcome
        if "entity_id" in target:
            outcome = _check_entity_value(target["entity_id"])
            if outcome:
                return outcome
    if "data" in item and not isinstance(item["data"], dict):
        return _malformed("expected a dictionary for dictionary value", "data")
    return None


def referenced_entity_ids(automation: dict) -> list[str]:
    """All entity ids an automation touches, in document order."""
    found: list[str] = []

    def add(value: object) -> None:
        ids = value if isinstance(value, list) else [value]
        found.extend(entity_id for entity_id in ids if isinstance(entity_id, str))

    for section in ("trigger", "condition", "action"):
        for item in automation.get(section) or []:
            if not isinstance(item, dict):
                continue
            if "entity_id" in item:
                add(item["entity_id"])
            target = item.get("target")
            if isinstance(target, dict) and "entity_id" in target:
                add(target["entity_id"])
    return found


def _check_strict_entities(automation: dict, template: HomeTemplate) -> ValidationOutcome | None:
    known = template.entity_ids
    for entity_id in referenced_entity_ids(automation):
        if entity_id not in known:
            return _malformed(f"Entity {entity_id} does not exist for dictionary value", "entity_id")
    for item in automation.get("action") or []:
        if not isinstance(item, dict) or "service" not in item:
            continue
        domain = str(item["service"]).split(".", 1)[0]
        targets = []
        if "entity_id" in item:
            value = item["entity_id"]
            targets.extend(value if isinstance(value, list) else [value])
        target = item.get("target")
        if isinstance(target, dict) and "entity_id" in target:
            value = target["entity_id"]
            targets.extend(value if isinstance(value, list) else [value])
        for entity_id in targets:
            if isinstance(entity_id, str) and entity_id.split(".", 1)[0] != domain:
                return _malformed(
                    f"Service domain {domain} does not match entity {entity_id} for dictionary value",
                    "service")
    return None


def validate_offline(json_text: str, template: HomeTemplate,
                     strict_entities: bool = True) -> ValidationOutcome:
    """Validate automation JSON without a HomeAssistant instance.

    Pure function: every outcome (including parse failure) is a value. With
    ``strict_entities`` every referenced entity must exist in the template
    and service domains must match their targets.
    """
    try:
        automation = json.loads(json_text)
    except json.JSONDecodeError as error:
        return _parse_error(js_parse_detail(json_text, error))

    if not isinstance(automation, dict):
        return _malformed("expected a dictionary", "automation")

    outcome = _check_extra_keys(automation, TOP_LEVEL_KEYS)
    if outcome:
        return outcome
    for key in REQUIRED_KEYS:
        if key not in automation:
            return _malformed("required key not provided", key)

    alias = automation["alias"]
    if not isinstance(alias, str):
        return _malformed("expected str for dictionary value", "alias")
    if not alias:
        return _malformed("length of value must be at least 1 for dictionary value", "alias")
    for key in ("id", "description"):
        if key in automation and not isinstance(automation[key], str):
            return _malformed("expected str for dictionary value", key)
    if "mode" in automation and automation["mode"] not in MODES:
        options = ", ".join(repr(name) for name in MODES)
        return _malformed(f"value must be one of [{options}] for dictionary value", "mode")

    for key, checker in (("trigger", _check_trigger), ("action", _check_action)):
        section = automation[key]
        if not isinstance(section, list):
            return _malformed("expected a list for dictionary value", key)
        if not section:
            return _malformed("length of value must be at least 1 for dictionary value", key)
        for item in section:
            outcome = checker(item)
            if outcome:
                return outcome

    if "condition" in automation:
        condition = automation["condition"]
        if not isinstance(condition, list):
            return _malformed("expected a list for dictionary value", "condition")
        for item in condition:
            outcome = _check_condition(item)
            if outcome:
                return outcome

    if strict_entities:
        outcome = _check_strict_entities(automation, template)
        if outcome:
            return outcome

    return _valid()


_id_lock = threading.Lock()
_last_generated_id = 0


def generate_automation_id() -> str:
    """Millisecond-timestamp id, strictly monotonic across calls."""
    global _last_generated_id
    with _id_lock:
        candidate = max(int(time.time() * 1000), _last_generated_id + 1)
        _last_generated_id = candidate
        return str(candidate)


@dataclass
class HaEndpoint:
    base_url: str
    token: Secret
    path_template: str = "/api/config/automation/config/{id}"
    timeout_s: float = 10.0
    _write_lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def url_for(self, automation_id: str) -> str:
        return self.base_url.rstrip("/") + self.path_template.format(id=automation_id)


def submit_live(json_text: str, endpoint: HaEndpoint) -> ValidationOutcome:
    """POST an automation to a live HomeAssistant instance.

    Writes are serialized per endpoint so generated ids cannot collide.
    """
    try:
        automation = json.loads(json_text)
    except json.JSONDecodeError as error:
        return _parse_error(js_parse_detail(json_text, error))
    if not isinstance(automation, dict):
        return _malformed("expected a dictionary", "automation")

    automation_id = automation.get("id") or generate_automation_id()
    body = dict(automation)
    body["id"] = automation_id

    with endpoint._write_lock:
        try:
            response = requests.post(
                endpoint.url_for(automation_id),
                json=body,
                headers={"Authorization": f"Bearer {endpoint.token.reveal()}"},
                timeout=endpoint.timeout_s,
            )
        except requests.RequestException as exc:
            raise UnreachableError(f"HomeAssistant endpoint unreachable: {exc}") from exc

    if response.status_code in (401, 403):
        raise UnauthorizedError(f"HomeAssistant rejected the token (HTTP {response.status_code})")
    if response.status_code == 400:
        try:
            message = response.json().get("message", response.text)
        except ValueError:
            message = response.text
        return ValidationOutcome(ValidationStatus.MALFORMED, message)
    if response.ok:
        return _valid()
    return ValidationOutcome(
        ValidationStatus.MALFORMED,
        f"{MALFORMED_PREFIX}unexpected response (HTTP {response.status_code}) @ data['automation']",
        "data['automation']",
    )
