"""Smart-home data model: house template, energy profile, user-command dataset.

All types are immutable after construction and safe to share between
threads. Loaders are pure functions from file content to model objects.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

ENTITY_ID_RE = re.compile(r"^[a-z_]+\.[a-z0-9_]+$")

SENSOR_TYPES = ("motion", "temperature", "luminance", "door", "power")

# Units a sensor of a given type must carry. Types not listed are free-form.
SENSOR_UNITS = {"temperature": "°C", "power": "W"}

GOAL_TYPES = ("immediate", "persistent")


class ParseError(ValueError):
    """Input document is not syntactically valid (JSON/CSV level)."""


class SchemaError(ValueError):
    """Input document parsed but violates a model invariant."""


class EmptyInputError(ValueError):
    """An ingest received no data rows."""


class NegativePowerError(ValueError):
    """A power reading below zero watts."""


def canonical_json(data: object) -> str:
    """Serialize to the canonical form used in prompts and goldens."""
    return json.dumps(data, sort_keys=True, indent=2)


@dataclass(frozen=True)
class Room:
    id: str
    name: str


@dataclass(frozen=True)
class Appliance:
    entity_id: str
    name: str
    appliance_type: str
    room_id: str
    avg_power_watts: float
    capabilities: frozenset[str]

    @property
    def domain(self) -> str:
        return self.entity_id.split(".", 1)[0]


@dataclass(frozen=True)
class Sensor:
    entity_id: str
    sensor_type: str
    room_id: str
    unit: str

    @property
    def domain(self) -> str:
        return self.entity_id.split(".", 1)[0]


@dataclass(frozen=True)
class HomeTemplate:
    """The entity universe: rooms plus the appliances and sensors in them."""

    id: str
    rooms: tuple[Room, ...]
    appliances: tuple[Appliance, ...]
    sensors: tuple[Sensor, ...]
    _appliances_by_entity: dict[str, Appliance] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )
    _sensors_by_entity: dict[str, Sensor] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        self._appliances_by_entity.update({a.entity_id: a for a in self.appliances})
        self._sensors_by_entity.update({s.entity_id: s for s in self.sensors})

    @property
    def entity_ids(self) -> frozenset[str]:
        return frozenset(self._appliances_by_entity) | frozenset(self._sensors_by_entity)

    @property
    def appliance_types(self) -> frozenset[str]:
        return frozenset(a.appliance_type for a in self.appliances)

    def appliance(self, entity_id: str) -> Appliance | None:
        return self._appliances_by_entity.get(entity_id)

    def sensor(self, entity_id: str) -> Sensor | None:
        return self._sensors_by_entity.get(entity_id)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "rooms": [{"id": r.id, "name": r.name} for r in self.rooms],
            "appliances": [
                {
                    "entity_id": a.entity_id,
                    "name": a.name,
                    "appliance_type": a.appliance_type,
                    "room_id": a.room_id,
                    "avg_power_watts": a.avg_power_watts,
                    "capabilities": sorted(a.capabilities),
                }
                for a in self.appliances
            ],
            "sensors": [
                {
                    "entity_id": s.entity_id,
                    "sensor_type": s.sensor_type,
                    "room_id": s.room_id,
                    "unit": s.unit,
                }
                for s in self.sensors
            ],
        }

    def to_canonical_json(self) -> str:
        return canonical_json(self.to_dict())


@dataclass(frozen=True)
class EnergyProfile:
    """Average measured power draw per appliance type."""

    entries: dict[str, tuple[float, int]]  # type -> (mean_power_watts, sample_count)

    def mean_power(self, appliance_type: str) -> float | None:
        entry = self.entries.get(appliance_type.lower())
        return entry[0] if entry else None

    def to_dict(self) -> dict:
        return {
            "energy_consumption_watts": {
                kind: {"mean_power_watts": round(mean, 2), "sample_count": count}
                for kind, (mean, count) in sorted(self.entries.items())
            }
        }

    def to_canonical_json(self) -> str:
        return canonical_json(self.to_dict())


@dataclass(frozen=True)
class UserCommand:
    text: str
    goal_type: str
    category: str
    example_tap: str


@dataclass(frozen=True)
class CommandCategory:
    name: str
    relevant_appliance_types: frozenset[str]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SchemaError(message)


def load_home_template(document: str) -> HomeTemplate:
    """Parse and validate a home template JSON document.

    Raises ParseError for malformed JSON and SchemaError for duplicate ids,
    dangling room references, or malformed entity ids.
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"home template is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("home template must be a JSON object")
    for key in ("id", "rooms", "appliances", "sensors"):
        _require(key in data, f"missing top-level key {key!r}")

    rooms = []
    room_ids: set[str] = set()
    for raw in data["rooms"]:
        _require(bool(raw.get("id")), "room id must be non-empty")
        _require(raw["id"] not in room_ids, f"duplicate room id {raw['id']!r}")
        room_ids.add(raw["id"])
        rooms.append(Room(id=raw["id"], name=raw.get("name", raw["id"])))

    entity_ids: set[str] = set()

    def check_entity(raw: dict, kind: str) -> str:
        entity_id = raw.get("entity_id", "")
        _require(
            bool(ENTITY_ID_RE.match(entity_id)),
            f"{kind} entity_id {entity_id!r} is not of the form <domain>.<object_id>",
        )
        _require(entity_id not in entity_ids, f"duplicate entity_id {entity_id!r}")
        entity_ids.add(entity_id)
        _require(
            raw.get("room_id") in room_ids,
            f"{kind} {entity_id!r} references unknown room {raw.get('room_id')!r}",
        )
        return entity_id

    appliances = []
    for raw in data["appliances"]:
        entity_id = check_entity(raw, "appliance")
        power = raw.get("avg_power_watts", 0)
        _require(isinstance(power, (int, float)) and power >= 0,
                 f"appliance {entity_id!r} has negative avg_power_watts")
        capabilities = frozenset(raw.get("capabilities", []))
        _require(bool(capabilities), f"appliance {entity_id!r} has no capabilities")
        appliances.append(
            Appliance(
                entity_id=entity_id,
                name=raw.get("name", entity_id),
                appliance_type=raw.get("appliance_type", ""),
                room_id=raw["room_id"],
                avg_power_watts=float(power),
                capabilities=capabilities,
            )
        )

    sensors = []
    for raw in data["sensors"]:
        entity_id = check_entity(raw, "sensor")
        sensor_type = raw.get("sensor_type", "")
        _require(sensor_type in SENSOR_TYPES,
                 f"sensor {entity_id!r} has unknown sensor_type {sensor_type!r}")
        unit = raw.get("unit", "")
        expected_unit = SENSOR_UNITS.get(sensor_type)
        if expected_unit is not None:
            _require(unit == expected_unit,
                     f"sensor {entity_id!r} of type {sensor_type!r} must use unit {expected_unit!r}")
        sensors.append(
            Sensor(entity_id=entity_id, sensor_type=sensor_type,
                   room_id=raw["room_id"], unit=unit)
        )

    return HomeTemplate(
        id=data["id"],
        rooms=tuple(rooms),
        appliances=tuple(appliances),
        sensors=tuple(sensors),
    )


# Header spellings accepted in annotation CSVs, normalized to our two columns.
_COLUMN_ALIASES = {
    "appliance_type": {"appliance_type", "appliance", "device", "device_type", "type"},
    "power_watts": {"power_watts", "power", "watts", "power_w", "consumption_w", "avg_power"},
}


def _normalize_header(name: str) -> str:
    return name.strip().lower().replace(" ", "_")


def _resolve_columns(fieldnames: Iterable[str]) -> dict[str, str]:
    normalized = {_normalize_header(name): name for name in fieldnames}
    resolved = {}
    for target, aliases in _COLUMN_ALIASES.items():
        for alias in aliases:
            if alias in normalized:
                resolved[target] = normalized[alias]
                break
        else:
            raise SchemaError(f"no column found for {target!r} (headers: {sorted(normalized)})")
    return resolved


def ingest_energy_annotations(files: Sequence[str | Path]) -> EnergyProfile:
    """Concatenate annotation CSVs and average power per appliance type.

    The result is independent of file order and row order.
    """
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    rows_seen = 0
    for path in files:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None:
                continue
            columns = _resolve_columns(reader.fieldnames)
            for row in reader:
                kind = (row[columns["appliance_type"]] or "").strip().lower()
                raw_power = (row[columns["power_watts"]] or "").strip()
                if not kind and not raw_power:
                    continue
                try:
                    power = float(raw_power)
                except ValueError as exc:
                    raise ParseError(f"bad power value {raw_power!r} in {path}") from exc
                if power < 0:
                    raise NegativePowerError(
                        f"negative power {power} for {kind!r} in {path}")
                totals[kind] = totals.get(kind, 0.0) + power
                counts[kind] = counts.get(kind, 0) + 1
                rows_seen += 1
    if rows_seen == 0:
        raise EmptyInputError("no annotation rows found")
    entries = {kind: (totals[kind] / counts[kind], counts[kind]) for kind in totals}
    return EnergyProfile(entries=entries)


def load_command_dataset(document: str) -> tuple[list[UserCommand], list[CommandCategory]]:
    """Parse the user-command dataset (categories plus commands)."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"command dataset is not valid JSON: {exc}") from exc

    categories = []
    by_name: dict[str, CommandCategory] = {}
    for raw in data.get("categories", []):
        relevant = frozenset(raw.get("relevant_appliance_types", []))
        _require(bool(relevant),
                 f"category {raw.get('name')!r} has an empty relevant-appliance set")
        category = CommandCategory(name=raw["name"], relevant_appliance_types=relevant)
        _require(category.name not in by_name, f"duplicate category {category.name!r}")
        by_name[category.name] = category
        categories.append(category)

    commands = []
    for raw in data.get("commands", []):
        _require(bool(raw.get("text")), "command text must be non-empty")
        _require(raw.get("goal_type") in GOAL_TYPES,
                 f"command {raw.get('text')!r} has bad goal_type {raw.get('goal_type')!r}")
        _require(raw.get("category") in by_name,
                 f"command {raw.get('text')!r} references unknown category {raw.get('category')!r}")
        commands.append(
            UserCommand(
                text=raw["text"],
                goal_type=raw["goal_type"],
                category=raw["category"],
                example_tap=raw.get("example_tap", ""),
            )
        )
    return commands, categories
