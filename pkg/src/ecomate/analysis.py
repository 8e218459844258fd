"""Benchmark analysis: failure taxonomy, per-configuration metrics, pair metrics.

A generation is a *false positive* when it targets devices although the home
has no appliance relevant to the command, and a *false negative* when no
routine was produced although relevant appliances exist. Accuracy is
``1 - (FP + FN)`` on the unrounded fractions. Invalid generations are sorted
into eight failure classes by a deterministic rule cascade; the mapping rules
are a reconstruction of how generation failures cluster in practice and are
documented on ``classify_failure``.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter, OrderedDict
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .home import Appliance, CommandCategory, HomeTemplate
from .validator import referenced_entity_ids

GREEN_LABEL = "Green"
NO_GREEN_LABEL = "No green"

# Trigger literals that read naturally but are not machine-usable values.
BAD_TRIGGER_LITERALS = frozenset({"sunset", "sunrise", "hot", "cold", "warm", "cool"})

# Value domains for settable attributes, used to tell a wrong setting value
# from a setting that merely belongs to another device.
ATTRIBUTE_DOMAINS: dict[str, tuple] = {
    "brightness": ("int_range", 0, 255),
    "color_temp": ("int_range", 153, 500),
    "volume_level": ("float_range", 0.0, 1.0),
    "position": ("int_range", 0, 100),
    "speed": ("enum", frozenset({"low", "medium", "high"})),
}

# Which sensor types naturally drive which appliance types; a trigger that
# uses a different sensor while a natural one exists is a suboptimal choice.
APPLIANCE_SENSOR_AFFINITY: dict[str, frozenset[str]] = {
    "light": frozenset({"luminance"}),
    "smart_blinds": frozenset({"luminance"}),
    "thermostat": frozenset({"temperature"}),
    "air_conditioner": frozenset({"temperature"}),
    "heater": frozenset({"temperature"}),
    "fan": frozenset({"temperature"}),
    "smart_lock": frozenset({"door", "motion"}),
    "security_camera": frozenset({"door", "motion"}),
    "vacuum_cleaner": frozenset({"motion"}),
    "television": frozenset({"motion"}),
    "speaker": frozenset({"motion"}),
    "air_purifier": frozenset({"motion"}),
    "coffee_machine": frozenset({"motion", "power"}),
}


class FailureClass(enum.Enum):
    DEVICE_EXTRA = "DeviceExtra"
    SENSOR_TRIGGER_VALUE = "SensorTriggerValue"
    DEVICE_OPTION_EXISTS = "DeviceOptionExists"
    DEVICE_SETTING = "DeviceSetting"
    DEVICE_HALLUCINATED = "DeviceHallucinated"
    SENSOR_SUBOPTIMAL_CHOICE = "SensorSuboptimalChoice"
    DEVICE_NO_OPTION_EXISTS = "DeviceNoOptionExists"
    OTHER = "Other"


class PreconditionViolatedError(ValueError):
    """A valid record was passed where an invalid one is required."""


class EmptyGroupError(ValueError):
    """A metrics group contained no records."""


class UnmatchedKeyError(ValueError):
    """A pairing key is missing one of its two prompt variants."""


class EmptyTextError(ValueError):
    """Similarity inputs must be non-empty."""


@dataclass(frozen=True)
class RunRecord:
    """One benchmark cell: command x model x prompt x temperature."""

    user_command: str
    goal_type: str
    category: str
    llm: str
    prompt: str
    temperature: float
    output: str
    json: str | None
    latency_ms: int
    json_validity: bool
    ha_response: str
    failure_class: FailureClass | None = None
    # In-memory advisory only; not part of the persisted column set.
    explanation_over_budget: bool = False


def round_half_up(numerator: int | float, denominator: int, places: int) -> Decimal:
    """Display rounding over an exact ratio, half away from zero-from-below."""
    quantum = Decimal(1).scaleb(-places)
    return (Decimal(numerator) / Decimal(denominator)).quantize(quantum, rounding=ROUND_HALF_UP)


def parse_automation(json_text: str | None) -> dict | None:
    if json_text is None:
        return None
    try:
        document = json.loads(json_text)
    except (json.JSONDecodeError, RecursionError):
        return None
    return document if isinstance(document, dict) else None


def action_entity_ids(automation: dict) -> list[str]:
    """Entity ids targeted by the action section, deduplicated in order."""
    found: "OrderedDict[str, None]" = OrderedDict()
    for item in automation.get("action") or []:
        if not isinstance(item, dict):
            continue
        values: list[object] = []
        if "entity_id" in item:
            value = item["entity_id"]
            values.extend(value if isinstance(value, list) else [value])
        target = item.get("target")
        if isinstance(target, dict) and "entity_id" in target:
            value = target["entity_id"]
            values.extend(value if isinstance(value, list) else [value])
        for entity_id in values:
            if isinstance(entity_id, str):
                found.setdefault(entity_id)
    return list(found)


def targeted_appliances(automation: dict, template: HomeTemplate) -> list[Appliance]:
    found = []
    for entity_id in action_entity_ids(automation):
        appliance = template.appliance(entity_id)
        if appliance is not None:
            found.append(appliance)
    return found


def _category_for(record: RunRecord,
                  categories: dict[str, CommandCategory]) -> CommandCategory | None:
    return categories.get(record.category)


def _home_has_relevant_appliance(category: CommandCategory | None,
                                 template: HomeTemplate) -> bool:
    if category is None:
        return False
    return bool(category.relevant_appliance_types & template.appliance_types)


def is_false_positive(record: RunRecord, template: HomeTemplate,
                      categories: dict[str, CommandCategory]) -> bool:
    """The routine targets devices although no relevant appliance exists."""
    category = _category_for(record, categories)
    if _home_has_relevant_appliance(category, template):
        return False
    automation = parse_automation(record.json)
    if automation is None:
        return False
    return bool(action_entity_ids(automation))


def is_false_negative(record: RunRecord, template: HomeTemplate,
                      categories: dict[str, CommandCategory]) -> bool:
    """No routine was produced although relevant appliances exist."""
    if record.json is not None:
        return False
    return _home_has_relevant_appliance(_category_for(record, categories), template)


def relevance_score(record: RunRecord, categories: dict[str, CommandCategory],
                    template: HomeTemplate) -> float:
    """(R - I) / (R + I) over targeted appliances; 0.0 when nothing is targeted."""
    automation = parse_automation(record.json)
    if automation is None:
        raise PreconditionViolatedError("relevance needs a record whose JSON parses")
    category = _category_for(record, categories)
    relevant_types = category.relevant_appliance_types if category else frozenset()
    targets = targeted_appliances(automation, template)
    if not targets:
        return 0.0
    relevant = sum(1 for appliance in targets if appliance.appliance_type in relevant_types)
    irrelevant = len(targets) - relevant
    return (relevant - irrelevant) / (relevant + irrelevant)


def _attribute_value_ok(name: str, value: object) -> bool:
    domain = ATTRIBUTE_DOMAINS.get(name)
    if domain is None:
        return True
    kind = domain[0]
    if kind == "int_range":
        return isinstance(value, int) and not isinstance(value, bool) \
            and domain[1] <= value <= domain[2]
    if kind == "float_range":
        return isinstance(value, (int, float)) and not isinstance(value, bool) \
            and domain[1] <= value <= domain[2]
    return isinstance(value, str) and value in domain[1]


def _trigger_items(automation: dict) -> list[dict]:
    section = automation.get("trigger")
    if not isinstance(section, list):
        return []
    return [item for item in section if isinstance(item, dict)]


def _action_items(automation: dict) -> list[dict]:
    section = automation.get("action")
    if not isinstance(section, list):
        return []
    return [item for item in section if isinstance(item, dict)]


def _has_bad_trigger_literal(automation: dict) -> bool:
    for item in _trigger_items(automation):
        for key in ("at", "above", "below", "to", "from"):
            value = item.get(key)
            if isinstance(value, str) and value.strip().lower() in BAD_TRIGGER_LITERALS:
                return True
    return False


def _service_name(item: dict) -> str | None:
    service = item.get("service")
    if isinstance(service, str) and "." in service:
        return service.split(".", 1)[1]
    return None


def _action_appliances(item: dict, template: HomeTemplate) -> list[Appliance]:
    wrapper = {"action": [item]}
    return targeted_appliances(wrapper, template)


def _preferred_sensor_types(category: CommandCategory | None) -> frozenset[str]:
    if category is None:
        return frozenset()
    preferred: set[str] = set()
    for appliance_type in category.relevant_appliance_types:
        preferred |= APPLIANCE_SENSOR_AFFINITY.get(appliance_type, frozenset())
    return frozenset(preferred)


def classify_failure(record: RunRecord, template: HomeTemplate,
                     categories: dict[str, CommandCategory]) -> FailureClass:
    """Assign exactly one failure class to an invalid record.

    Rule cascade, first match wins:
      1. output did not parse as a JSON object  -> Other
      2. any referenced entity unknown          -> DeviceHallucinated
      3. an action targets an appliance outside the command's relevant set
                                                -> DeviceExtra
      4. a trigger uses a descriptive literal (sunset, hot, ...) where a
         machine value belongs                  -> SensorTriggerValue
      5. an action calls a service unknown anywhere in the home
                                                -> DeviceNoOptionExists
      6. a settable attribute of the target carries an out-of-domain value
                                                -> DeviceSetting
      7. a service/attribute exists in the home but not on the targeted
         appliance (right option, wrong device) -> DeviceOptionExists
      8. the trigger uses a sensor although a better-suited sensor type for
         the command exists                     -> SensorSuboptimalChoice
      9. anything else                          -> Other
    """
    if record.json_validity:
        raise PreconditionViolatedError("classify_failure only applies to invalid records")

    automation = parse_automation(record.json)
    if automation is None:
        return FailureClass.OTHER

    category = _category_for(record, categories)
    relevant_types = category.relevant_appliance_types if category else frozenset()

    known = template.entity_ids
    references = referenced_entity_ids(automation)
    if any(entity_id not in known for entity_id in references):
        return FailureClass.DEVICE_HALLUCINATED

    if any(appliance.appliance_type not in relevant_types
           for appliance in targeted_appliances(automation, template)):
        return FailureClass.DEVICE_EXTRA

    if _has_bad_trigger_literal(automation):
        return FailureClass.SENSOR_TRIGGER_VALUE

    all_capabilities: set[str] = set()
    for appliance in template.appliances:
        all_capabilities |= appliance.capabilities

    actions = _action_items(automation)
    for item in actions:
        name = _service_name(item)
        if name is not None and _action_appliances(item, template) \
                and name not in all_capabilities:
            return FailureClass.DEVICE_NO_OPTION_EXISTS

    for item in actions:
        data = item.get("data")
        if not isinstance(data, dict):
            continue
        target_capabilities: set[str] = set()
        for appliance in _action_appliances(item, template):
            target_capabilities |= appliance.capabilities
        for attribute, value in data.items():
            if attribute in target_capabilities and not _attribute_value_ok(attribute, value):
                return FailureClass.DEVICE_SETTING

    for item in actions:
        targets = _action_appliances(item, template)
        if not targets:
            continue
        target_capabilities = set()
        for appliance in targets:
            target_capabilities |= appliance.capabilities
        name = _service_name(item)
        if name is not None and name not in target_capabilities and name in all_capabilities:
            return FailureClass.DEVICE_OPTION_EXISTS
        data = item.get("data")
        if isinstance(data, dict):
            for attribute, value in data.items():
                if attribute not in target_capabilities and attribute in all_capabilities \
                        and _attribute_value_ok(attribute, value):
                    return FailureClass.DEVICE_OPTION_EXISTS

    preferred = _preferred_sensor_types(category)
    if preferred:
        trigger_sensors = [
            template.sensor(entity_id)
            for item in _trigger_items(automation)
            for entity_id in referenced_entity_ids({"trigger": [item]})
        ]
        trigger_sensors = [sensor for sensor in trigger_sensors if sensor is not None]
        home_has_preferred = any(sensor.sensor_type in preferred for sensor in template.sensors)
        if trigger_sensors and home_has_preferred \
                and all(sensor.sensor_type not in preferred for sensor in trigger_sensors):
            return FailureClass.SENSOR_SUBOPTIMAL_CHOICE

    return FailureClass.OTHER


@dataclass(frozen=True)
class MetricsSummary:
    """Aggregates for one (llm, prompt, temperature) configuration."""

    llm: str
    prompt: str
    temperature: float
    total: int
    fp_count: int
    fn_count: int
    valid_count: int
    latency_min_ms: int
    latency_max_ms: int
    latency_sum_ms: int
    rel: float

    @property
    def fp(self) -> float:
        return self.fp_count / self.total

    @property
    def fn(self) -> float:
        return self.fn_count / self.total

    @property
    def acc(self) -> float:
        return 1.0 - (self.fp + self.fn)

    @property
    def validity_pct(self) -> float:
        return self.valid_count / self.total

    @property
    def latency_mean_ms(self) -> float:
        return self.latency_sum_ms / self.total

    def display(self, places: int = 2) -> dict[str, str]:
        """Two-decimal table view; raw counts stay authoritative."""
        acc_numerator = self.total - self.fp_count - self.fn_count
        return {
            "llm": self.llm,
            "prompt": self.prompt,
            "temperature": _format_temperature(self.temperature),
            "acc": str(round_half_up(acc_numerator, self.total, places)),
            "fp": str(round_half_up(self.fp_count, self.total, places)),
            "fn": str(round_half_up(self.fn_count, self.total, places)),
            "rel": str(round_half_up(self.rel * self.total, self.total, places)),
            "latency_min": str(self.latency_min_ms),
            "latency_max": str(self.latency_max_ms),
            "latency_mean": str(round_half_up(self.latency_sum_ms, self.total, places)),
            "validity_pct": str(round_half_up(self.valid_count, self.total, places)),
        }


def _format_temperature(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else str(value)


def summarize(records: list[RunRecord], template: HomeTemplate,
              categories: dict[str, CommandCategory]) -> list[MetricsSummary]:
    """Group records by (llm, prompt, temperature) and compute the metric set."""
    if not records:
        raise EmptyGroupError("no records to summarize")
    groups: dict[tuple[str, str, float], list[RunRecord]] = {}
    for record in records:
        groups.setdefault((record.llm, record.prompt, record.temperature), []).append(record)

    summaries = []
    for key in sorted(groups):
        members = groups[key]
        fp_count = sum(1 for r in members if is_false_positive(r, template, categories))
        fn_count = sum(1 for r in members if is_false_negative(r, template, categories))
        valid_count = sum(1 for r in members if r.json_validity)
        latencies = [r.latency_ms for r in members]
        rel_scores = [
            relevance_score(r, categories, template)
            for r in members
            if parse_automation(r.json) is not None
        ]
        summaries.append(
            MetricsSummary(
                llm=key[0],
                prompt=key[1],
                temperature=key[2],
                total=len(members),
                fp_count=fp_count,
                fn_count=fn_count,
                valid_count=valid_count,
                latency_min_ms=min(latencies),
                latency_max_ms=max(latencies),
                latency_sum_ms=sum(latencies),
                rel=sum(rel_scores) / len(rel_scores) if rel_scores else 0.0,
            )
        )
    return summaries


@dataclass(frozen=True)
class PairedRecord:
    """Green-vs-no-green comparison for one (command, llm, temperature)."""

    user_command: str
    llm: str
    temperature: float
    boolean_difference: int
    latency_difference_ms: int
    similarity: float


class SimilarityProvider:
    """Plug-in contract: implement ``score(a, b) -> [0, 1]`` or ``embed(text)``."""


class TrigramCosineProvider(SimilarityProvider):
    """Deterministic offline similarity: cosine over character-trigram counts.

    JSON inputs are canonicalized first (sorted keys, stripped whitespace) so
    the score is invariant under key reordering. Scores live in [0, 1]; the
    scale is not comparable with embedding-model similarity scores.
    """

    def score(self, a: str, b: str) -> float:
        grams_a = self._grams(_canonical_text(a))
        grams_b = self._grams(_canonical_text(b))
        return _cosine(grams_a, grams_b)

    @staticmethod
    def _grams(text: str, n: int = 3) -> Counter:
        if len(text) < n:
            return Counter([text])
        return Counter(text[i:i + n] for i in range(len(text) - n + 1))


class HttpEmbeddingProvider(SimilarityProvider):
    """Calls an external embedding endpoint: POST {"text": ...} -> {"vector": [...]}."""

    def __init__(self, endpoint_url: str, timeout_s: float = 30.0):
        self.endpoint_url = endpoint_url
        self.timeout_s = timeout_s

    def embed(self, text: str) -> list[float]:
        import requests

        response = requests.post(self.endpoint_url, json={"text": text}, timeout=self.timeout_s)
        response.raise_for_status()
        return [float(x) for x in response.json()["vector"]]


def _canonical_text(text: str) -> str:
    try:
        return json.dumps(json.loads(text), sort_keys=True, separators=(",", ":"))
    except (json.JSONDecodeError, RecursionError):
        return text


def _cosine(a: Counter, b: Counter) -> float:
    shared = set(a) & set(b)
    dot = sum(a[gram] * b[gram] for gram in shared)
    norm_a = math.sqrt(sum(count * count for count in a.values()))
    norm_b = math.sqrt(sum(count * count for count in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return min(dot / (norm_a * norm_b), 1.0)


_DEFAULT_PROVIDER = TrigramCosineProvider()


def similarity(json_a: str, json_b: str,
               provider: SimilarityProvider | None = None) -> float:
    if not json_a or not json_b:
        raise EmptyTextError("similarity inputs must be non-empty")
    provider = provider or _DEFAULT_PROVIDER
    if hasattr(provider, "score"):
        return float(provider.score(json_a, json_b))
    vector_a = provider.embed(_canonical_text(json_a))
    vector_b = provider.embed(_canonical_text(json_b))
    return _cosine(Counter(dict(enumerate(vector_a))), Counter(dict(enumerate(vector_b))))


def _comparison_text(record: RunRecord) -> str:
    return record.json if record.json is not None else record.output


def pair_green_nogreen(records: list[RunRecord],
                       provider: SimilarityProvider | None = None) -> list[PairedRecord]:
    """Match green and no-green generations per (command, llm, temperature)."""
    by_key: dict[tuple[str, str, float], dict[str, RunRecord]] = {}
    for record in records:
        if record.prompt not in (GREEN_LABEL, NO_GREEN_LABEL):
            continue
        slot = by_key.setdefault((record.user_command, record.llm, record.temperature), {})
        slot[record.prompt] = record

    pairs = []
    for key in sorted(by_key):
        sides = by_key[key]
        if GREEN_LABEL not in sides or NO_GREEN_LABEL not in sides:
            missing = GREEN_LABEL if GREEN_LABEL not in sides else NO_GREEN_LABEL
            raise UnmatchedKeyError(f"{key} is missing its {missing!r} record")
        green, nogreen = sides[GREEN_LABEL], sides[NO_GREEN_LABEL]
        text_green, text_nogreen = _comparison_text(green), _comparison_text(nogreen)
        # A side with no output at all (transport error) shares nothing.
        score = similarity(text_green, text_nogreen, provider) \
            if text_green and text_nogreen else 0.0
        pairs.append(
            PairedRecord(
                user_command=key[0],
                llm=key[1],
                temperature=key[2],
                boolean_difference=int(green.json_validity) - int(nogreen.json_validity),
                latency_difference_ms=green.latency_ms - nogreen.latency_ms,
                similarity=score,
            )
        )
    return pairs
