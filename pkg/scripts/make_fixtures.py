"""Synthesize the packaged demo fixtures.

Builds, deterministically:
  * the replay store (one response fixture per benchmark cell),
  * the validator golden corpus (hand-authored expected outcomes),
  * the labeled failure-classification corpus,
  * the green-vs-no-green prompt diff golden.

The replay store encodes a demo scenario whose per-configuration aggregates
land on the target summary table below. Regenerate with:

    python scripts/make_fixtures.py

Fixture digests depend on the packaged template, energy and prompt files;
rerun this script whenever any of those change.
"""

from __future__ import annotations

import difflib
import hashlib
import json
import random
import shutil
import sys
import tempfile
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from ecomate import analysis, gateway, prompts, validator  # noqa: E402
from ecomate.bench import data_path, default_grid_config, run_grid  # noqa: E402
from ecomate.home import (  # noqa: E402
    ingest_energy_annotations,
    load_command_dataset,
    load_home_template,
)

GREEN = prompts.PromptVariant.GREEN
NO_GREEN = prompts.PromptVariant.NO_GREEN

# Target aggregates per (llm, prompt label, temperature):
# valid, fp, fn counts out of 40, latency min/max (ms), latency mean (2 dp),
# and whether the mean must be exactly representable with integer latencies.
CellTarget = tuple[int, int, int, int, int, str, bool]

TARGETS: dict[tuple[str, str, float], CellTarget] = {
    ("GPT3.5", "Green", 0.0): (28, 7, 0, 2472, 8955, "5305.43", True),
    ("GPT3.5", "Green", 0.7): (25, 9, 0, 1704, 11351, "4809.83", True),
    ("GPT3.5", "No green", 0.0): (24, 7, 0, 2462, 8907, "5092.35", True),
    ("GPT3.5", "No green", 0.7): (23, 6, 0, 1990, 9559, "5059.35", True),
    ("GPT4", "Green", 0.0): (36, 8, 0, 6926, 27204, "15346.60", True),
    ("GPT4", "Green", 0.7): (35, 7, 1, 7508, 30496, "16481.50", True),
    ("GPT4", "No green", 0.0): (31, 6, 0, 5996, 38401, "16357.30", True),
    ("GPT4", "No green", 0.7): (35, 7, 0, 6036, 22995, "15458.00", True),
    ("LLAMA2-70b", "Green", 0.0): (0, 0, 0, 10738, 89666, "24322.66", False),
    ("LLAMA2-70b", "Green", 0.7): (0, 0, 0, 11259, 89994, "24783.03", True),
    ("LLAMA2-70b", "No green", 0.0): (0, 0, 0, 9756, 75800, "24023.97", False),
    ("LLAMA2-70b", "No green", 0.7): (0, 0, 0, 7196, 64823, "20742.31", False),
    ("LLAMA2-7b", "Green", 0.0): (0, 0, 0, 5392, 41343, "12942.93", True),
    ("LLAMA2-7b", "Green", 0.7): (0, 0, 0, 5190, 34398, "13133.83", True),
    ("LLAMA2-7b", "No green", 0.0): (0, 0, 0, 6000, 41947, "12981.10", True),
    ("LLAMA2-7b", "No green", 0.7): (0, 0, 0, 3332, 42804, "14032.03", True),
    ("MISTRAL", "Green", 0.0): (3, 0, 2, 963, 18851, "9915.65", True),
    ("MISTRAL", "Green", 0.7): (4, 0, 1, 1065, 29623, "10636.85", True),
    ("MISTRAL", "No green", 0.0): (6, 0, 1, 1110, 28178, "10605.33", True),
    ("MISTRAL", "No green", 0.7): (11, 1, 1, 912, 33440, "9930.43", True),
    ("codeLLAMA", "Green", 0.0): (5, 2, 0, 9383, 34592, "16133.15", True),
    ("codeLLAMA", "Green", 0.7): (4, 4, 1, 5262, 35300, "13351.74", False),
    ("codeLLAMA", "No green", 0.0): (4, 2, 0, 9193, 46016, "17245.23", True),
    ("codeLLAMA", "No green", 0.7): (1, 1, 0, 8543, 46445, "14230.82", False),
}

MODELS = ["GPT3.5", "GPT4", "LLAMA2-70b", "LLAMA2-7b", "MISTRAL", "codeLLAMA"]

# Models whose aggregates the acceptance gate pins exactly.
EXACT_MODELS = {"GPT3.5", "GPT4", "LLAMA2-7b"}

PROMPT_LABEL = {GREEN: "Green", NO_GREEN: "No green"}

# Shapes used on commands whose category has relevant appliances must leave
# an extractable JSON object behind (a missing routine there is a false
# negative); JSON-free shapes are reserved for the no-relevant-appliance rows.
INVALID_SHAPE_CYCLE = {
    "GPT3.5": ["below_on_time", "name_alias", "sunset_at"],
    "GPT4": ["sunset_at", "name_alias", "below_on_time"],
    "LLAMA2-70b": ["llama_garbage_a", "llama_garbage_b", "llama_garbage_c"],
    "LLAMA2-7b": ["llama_garbage_b", "llama_garbage_a", "llama_garbage_c"],
    "MISTRAL": ["algorithm_keyword", "fence_code_broken", "name_alias"],
    "codeLLAMA": ["name_alias", "fence_code_broken", "sunset_at"],
}

TEMP_FILLER = {
    "GPT3.5": ["refusal_no_relevant"],
    "GPT4": ["refusal_no_relevant"],
    "MISTRAL": ["refusal_no_relevant", "code_prefix"],
    "LLAMA2-70b": ["llama_garbage_a"],
    "LLAMA2-7b": ["llama_garbage_b"],
    "codeLLAMA": ["python_code"],
}


def stable_seed(*parts: object) -> int:
    key = "|".join(str(p) for p in parts)
    return int(hashlib.sha256(key.encode("utf-8")).hexdigest()[:8], 16)


def latency_plan(target: CellTarget) -> list[int]:
    """40 integer latencies with exact min/max and a mean that displays right."""
    _, _, _, lat_min, lat_max, mean_str, exact = target
    mean = Decimal(mean_str)
    base_sum = int((mean * 40).to_integral_value(rounding=ROUND_HALF_UP))
    chosen = None
    for total in range(base_sum - 60, base_sum + 61):
        shown = (Decimal(total) / 40).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
        if shown == mean:
            chosen = total
            break
    if chosen is None:
        if exact:
            raise AssertionError(f"no integer latency sum displays as {mean_str}")
        chosen = min(range(base_sum - 60, base_sum + 61),
                     key=lambda total: abs(Decimal(total) / 40 - mean))
    filler_total = chosen - lat_min - lat_max
    base, remainder = divmod(filler_total, 38)
    latencies = [lat_min, lat_max] + [base + (1 if i < remainder else 0) for i in range(38)]
    assert sum(latencies) == chosen
    assert all(lat_min <= value <= lat_max for value in latencies)
    return latencies


# ---------------------------------------------------------------------------
# Output synthesis


PREAMBLES = [
    "Sure! Here is the routine:",
    "Here is a routine for that:",
    "Certainly, this routine should help:",
]

EXPLANATIONS_PLAIN = [
    "Picked the matching appliance and a simple trigger to implement the request.",
    "Used a time trigger and the relevant device to satisfy the request.",
    "Chose the closest appliance and scheduled the requested action.",
]

EXPLANATIONS_GREEN = [
    "Selected relevant devices and scheduled the action to reduce energy use.",
    "Scheduled the routine so appliances stay off when not needed, saving energy.",
    "Chose the most efficient appliance and an energy-aware trigger.",
]


def alias_for(command: str) -> str:
    return command[0].upper() + command[1:]


def wrap(doc: dict, rng: random.Random, green: bool, preamble: str | None = None) -> str:
    explanation = rng.choice(EXPLANATIONS_GREEN if green else EXPLANATIONS_PLAIN)
    head = preamble or rng.choice(PREAMBLES)
    return f"{head}\n```\n{json.dumps(doc, indent=2)}\n```\n{explanation}"


def valid_doc(category: str, command: str, rng: random.Random) -> dict:
    alias = alias_for(command)
    if category == "Ambient Luminance":
        variants = [
            {"alias": alias,
             "trigger": [{"platform": "sun", "event": "sunset"}],
             "action": [{"service": "light.turn_off", "entity_id": "light.living_room"}]},
            {"alias": alias,
             "trigger": [{"platform": "time", "at": "20:30:00"}],
             "action": [{"service": "light.turn_on", "entity_id": "light.living_room",
                         "data": {"brightness": rng.choice([60, 80, 100])}}]},
            {"alias": alias,
             "trigger": [{"platform": "sun", "event": "sunrise"}],
             "action": [{"service": "cover.open_cover",
                         "entity_id": "cover.living_room_blinds"}]},
        ]
    elif category == "Media Control":
        variants = [
            {"alias": alias,
             "trigger": [{"platform": "time", "at": "23:00:00"}],
             "action": [{"service": "media_player.turn_off",
                         "entity_id": "media_player.television"}]},
            {"alias": alias,
             "trigger": [{"platform": "time", "at": "21:00:00"}],
             "action": [{"service": "media_player.volume_set",
                         "entity_id": "media_player.speakers",
                         "data": {"volume_level": 0.2}}]},
        ]
    elif category == "Robot Control":
        variants = [
            {"alias": alias,
             "trigger": [{"platform": "time", "at": "09:00:00"}],
             "action": [{"service": "vacuum.start", "entity_id": "vacuum.vacuum_cleaner"}]},
            {"alias": alias,
             "trigger": [{"platform": "state",
                          "entity_id": "binary_sensor.motion_hallway", "to": "off"}],
             "action": [{"service": "vacuum.start", "entity_id": "vacuum.vacuum_cleaner"}]},
            {"alias": alias,
             "trigger": [{"platform": "time", "at": "18:00:00"}],
             "action": [{"service": "vacuum.return_to_base",
                         "entity_id": "vacuum.vacuum_cleaner"}]},
        ]
    elif category == "Security":
        variants = [
            {"alias": alias,
             "trigger": [{"platform": "time", "at": "23:00:00"}],
             "action": [{"service": "lock.lock", "entity_id": "lock.front_door"}]},
            {"alias": alias,
             "trigger": [{"platform": "state", "entity_id": "binary_sensor.front_door",
                          "to": "on"}],
             "action": [{"service": "camera.turn_on", "entity_id": "camera.entrance"}]},
        ]
    elif category == "Air Quality":
        variants = [
            {"alias": alias,
             "trigger": [{"platform": "time", "at": "22:00:00"}],
             "action": [{"service": "fan.turn_on", "entity_id": "fan.air_purifier"}]},
            {"alias": alias,
             "trigger": [{"platform": "state",
                          "entity_id": "binary_sensor.motion_living_room", "to": "on"}],
             "action": [{"service": "fan.set_speed", "entity_id": "fan.air_purifier",
                         "data": {"speed": "low"}}]},
        ]
    else:  # Other Appliances
        variants = [
            {"alias": alias,
             "trigger": [{"platform": "time", "at": "07:00:00"}],
             "action": [{"service": "switch.turn_on", "entity_id": "switch.coffee_machine"}]},
            {"alias": alias,
             "trigger": [{"platform": "time", "at": "09:30:00"}],
             "action": [{"service": "switch.turn_off", "entity_id": "switch.coffee_machine"}]},
        ]
    return rng.choice(variants)


def fp_doc(command: str, rng: random.Random) -> dict:
    """A routine for a command the home has no relevant appliance for."""
    alias = alias_for(command)
    variants = [
        {"alias": alias,
         "trigger": [{"platform": "time", "at": "22:00:00"}],
         "action": [{"service": "light.turn_off",
                     "entity_id": ["light.living_room", "light.bedroom_one"]}]},
        {"alias": alias,
         "trigger": [{"platform": "sun", "event": "sunset"}],
         "action": [{"service": "cover.close_cover",
                     "entity_id": "cover.living_room_blinds"}]},
        {"alias": alias,
         "trigger": [{"platform": "time", "at": "21:30:00"}],
         "action": [{"service": "light.turn_off", "entity_id": "light.living_room"},
                    {"service": "cover.close_cover",
                     "entity_id": "cover.bedroom_one_blinds"}]},
    ]
    return rng.choice(variants)


def synth_output(kind: str, category: str, command: str, rng: random.Random,
                 green: bool) -> str:
    if kind == "valid":
        return wrap(valid_doc(category, command, rng), rng, green)
    if kind == "valid_recovered":
        doc = valid_doc(category, command, rng)
        return "```\ncode\n" + json.dumps(doc, indent=2) + "\n```\nRoutine generated as requested."
    if kind == "fp_valid":
        return wrap(fp_doc(command, rng), rng, green)
    if kind == "refusal_no_relevant":
        return ("The home template does not include a thermostat, air conditioner, heater, "
                "or fan, so I cannot create a routine for this request.")
    if kind == "refusal_fn":
        return "I'm sorry, I cannot create a routine for this request."
    if kind == "below_on_time":
        doc = valid_doc(category, command, rng)
        doc["trigger"] = [{"platform": "time", "at": "22:00:00", "below": 20}]
        return wrap(doc, rng, green)
    if kind == "sunset_at":
        doc = valid_doc(category, command, rng)
        doc["trigger"] = [{"platform": "time", "at": "sunset"}]
        return wrap(doc, rng, green)
    if kind == "name_alias":
        doc = valid_doc(category, command, rng)
        doc["name"] = doc.pop("alias")
        return wrap(doc, rng, green)
    if kind == "llama_garbage_a":
        doc = {"name": alias_for(command),
               "triggers": [{"type": "time", "when": "sunset"}],
               "actions": ["turn_off_everything"]}
        return ("Here is the automation you asked for:\n"
                + json.dumps(doc, indent=2)
                + "\nLet me know if you need anything else!")
    if kind == "llama_garbage_b":
        doc = {"routine": {"name": alias_for(command), "when": "night",
                           "do": ["turn off the lights", "lower the volume"]}}
        return "```\n" + json.dumps(doc, indent=2) + "\n```"
    if kind == "llama_garbage_c":
        doc = {"name": alias_for(command), "trigger": "at night",
               "action": "turn off the lights"}
        return json.dumps(doc, indent=2)
    if kind == "code_prefix":
        return ('code: {"alias": "' + alias_for(command)
                + '"; "trigger": []; "action": []}')
    if kind == "algorithm_keyword":
        doc = valid_doc(category, command, rng)
        doc["algorithm"] = doc.pop("alias")
        return wrap(doc, rng, green, preamble="Routine below.")
    if kind == "fence_code_broken":
        doc = valid_doc(category, command, rng)
        doc["name"] = doc.pop("alias")
        return "```\ncode\n" + json.dumps(doc, indent=2) + "\n```"
    if kind == "python_code":
        return ("Here is a Python script to handle that:\n\n"
                "def run_routine():\n"
                "    # stop the vacuum and switch everything off\n"
                "    vacuum.stop_cleaning()\n"
                "    return True\n")
    raise ValueError(f"unknown output kind {kind!r}")


def plan_outcomes(model: str, label: str, temperature: float,
                  target: CellTarget) -> dict[int, str]:
    valid, fp, fn = target[0], target[1], target[2]
    rng = random.Random(stable_seed("plan", model, label, temperature))
    kinds: dict[int, str] = {}
    fillers = TEMP_FILLER[model]
    for index in range(9):  # commands with no relevant appliance in the home
        kinds[index] = "fp_valid" if index < fp else fillers[index % len(fillers)]
    non_temp = list(range(9, 40))
    offset = stable_seed("rotate", model, label, temperature) % len(non_temp)
    order = non_temp[offset:] + non_temp[:offset]
    clean = valid - fp
    assert clean >= 0 and clean + fn <= len(order)
    for position, index in enumerate(order):
        if position < clean:
            if model == "MISTRAL" and position % 3 == 2:
                kinds[index] = "valid_recovered"
            else:
                kinds[index] = "valid"
        elif position < clean + fn:
            kinds[index] = "refusal_fn"
        else:
            cycle = INVALID_SHAPE_CYCLE[model]
            kinds[index] = cycle[(position - clean - fn) % len(cycle)]
    rng.shuffle(non_temp)  # keep rng state varied across releases
    return kinds


def build_replay_store(root: Path) -> None:
    template = load_home_template(data_path("h107.json").read_text(encoding="utf-8"))
    profile = ingest_energy_annotations([
        data_path("energy", "annotations_part1.csv"),
        data_path("energy", "annotations_part2.csv"),
    ])
    commands, _ = load_command_dataset(data_path("commands.json").read_text(encoding="utf-8"))

    if root.exists():
        shutil.rmtree(root)
    root.mkdir(parents=True)
    store = gateway.ReplayProvider(root)

    written = 0
    for model in MODELS:
        for variant in (GREEN, NO_GREEN):
            label = PROMPT_LABEL[variant]
            for temperature in (0.0, 0.7):
                target = TARGETS[(model, label, temperature)]
                kinds = plan_outcomes(model, label, temperature, target)
                latencies = latency_plan(target)
                for index, command in enumerate(commands):
                    rng = random.Random(
                        stable_seed("output", model, label, temperature, index))
                    text = synth_output(kinds[index], command.category, command.text,
                                        rng, green=variant is GREEN)
                    bundle = prompts.build_prompt(variant, template, profile, command.text)
                    request = gateway.LlmRequest(
                        model_id=model, temperature=temperature,
                        messages=tuple(bundle.to_messages()))
                    store.store(request, text, latencies[index])
                    written += 1
    print(f"replay store: {written} fixtures under {root}")


def verify_replay_store() -> None:
    """Run the real grid and assert the aggregates line up with the targets."""
    with tempfile.TemporaryDirectory() as tmp:
        config = default_grid_config(Path(tmp))
        records, _ = run_grid(config)
        assert len(records) == 960, len(records)

        template = load_home_template(data_path("h107.json").read_text(encoding="utf-8"))
        _, category_list = load_command_dataset(
            data_path("commands.json").read_text(encoding="utf-8"))
        categories = {c.name: c for c in category_list}
        summaries = analysis.summarize(records, template, categories)
        for summary in summaries:
            target = TARGETS[(summary.llm, summary.prompt, summary.temperature)]
            valid, fp, fn, lat_min, lat_max, mean_str, exact = target
            key = f"{summary.llm}/{summary.prompt}/t={summary.temperature}"
            assert summary.valid_count == valid, f"{key}: valid {summary.valid_count} != {valid}"
            assert summary.fp_count == fp, f"{key}: fp {summary.fp_count} != {fp}"
            assert summary.fn_count == fn, f"{key}: fn {summary.fn_count} != {fn}"
            assert summary.latency_min_ms == lat_min, key
            assert summary.latency_max_ms == lat_max, key
            shown = summary.display()["latency_mean"]
            if exact or summary.llm in EXACT_MODELS:
                assert shown == mean_str, f"{key}: mean {shown} != {mean_str}"
            else:
                assert abs(Decimal(shown) - Decimal(mean_str)) <= Decimal("0.02"), key

        pairs = analysis.pair_green_nogreen(records)
        gpt35_t0 = [p for p in pairs if p.llm == "GPT3.5" and p.temperature == 0.0]
        assert len(gpt35_t0) == 40
        bool_mean = analysis.round_half_up(sum(p.boolean_difference for p in gpt35_t0), 40, 3)
        lat_mean = analysis.round_half_up(sum(p.latency_difference_ms for p in gpt35_t0), 40, 0)
        assert str(bool_mean) == "0.100", bool_mean
        assert str(lat_mean) == "213", lat_mean

        print("similarity means per (llm, t) over green/no-green pairs:")
        for model in MODELS:
            for temperature in (0.0, 0.7):
                group = [p.similarity for p in pairs
                         if p.llm == model and p.temperature == temperature]
                print(f"  {model} t={temperature}: {sum(group) / len(group):.9f}")
    print("replay store verified against the target table")


# ---------------------------------------------------------------------------
# Validator golden corpus

T1_SUCCESS = "Home-assistant uploaded the automation correctly"


def _j(doc: object) -> str:
    return json.dumps(doc, indent=2)


def validator_corpus_items() -> list[dict]:
    ok_light = {"service": "light.turn_off", "entity_id": "light.kitchen"}
    base = {"alias": "night",
            "trigger": [{"platform": "time", "at": "22:00:00"}],
            "action": [ok_light]}

    def variant(**overrides) -> dict:
        doc = {key: json.loads(json.dumps(value)) for key, value in base.items()}
        doc.update(overrides)
        return doc

    semicolon_raw = '{"alias": "' + "a" * 41 + '", "t": 1; "u": 2}'
    assert semicolon_raw[61] == ";"

    items: list[dict] = []

    def add(name: str, payload: str, status: str, message: str, strict: bool = True) -> None:
        items.append({"name": name, "input": payload, "strict": strict,
                      "live_status": status, "live_message": message})

    # --- accepted automations -------------------------------------------------
    add("time_trigger_light_off", _j(base), "Valid", T1_SUCCESS)
    add("sun_trigger_close_blinds", _j({
        "alias": "dusk blinds",
        "trigger": [{"platform": "sun", "event": "sunset"}],
        "action": [{"service": "cover.close_cover", "entity_id": "cover.living_room_blinds"}],
    }), "Valid", T1_SUCCESS)
    add("numeric_state_above_fan", _j({
        "alias": "hot afternoon",
        "trigger": [{"platform": "numeric_state",
                     "entity_id": "sensor.temperature_living_room", "above": 26}],
        "action": [{"service": "fan.turn_on", "entity_id": "fan.air_purifier"}],
    }), "Valid", T1_SUCCESS)
    add("state_trigger_brightness_data", _j({
        "alias": "hallway motion light",
        "trigger": [{"platform": "state", "entity_id": "binary_sensor.motion_hallway",
                     "to": "on"}],
        "action": [{"service": "light.turn_on", "entity_id": "light.hallway",
                    "data": {"brightness": 128}}],
    }), "Valid", T1_SUCCESS)
    add("event_trigger_coffee", _j({
        "alias": "wake up coffee",
        "trigger": [{"platform": "event", "event_type": "alarm_dismissed"}],
        "action": [{"service": "switch.turn_on", "entity_id": "switch.coffee_machine"}],
    }), "Valid", T1_SUCCESS)
    add("device_trigger_lock", _j({
        "alias": "lock on leave",
        "trigger": [{"platform": "device", "device_id": "abc123", "domain": "binary_sensor"}],
        "action": [{"service": "lock.lock", "entity_id": "lock.front_door"}],
    }), "Valid", T1_SUCCESS)
    add("mode_and_metadata", _j(variant(id="1700000000001", description="demo",
                                        mode="queued")), "Valid", T1_SUCCESS)
    add("condition_plus_delay", _j({
        "alias": "tv off late",
        "trigger": [{"platform": "time", "at": "23:30:00"}],
        "condition": [{"condition": "state", "entity_id": "media_player.television",
                       "state": "on"}],
        "action": [{"delay": "00:05:00"},
                   {"service": "media_player.turn_off",
                    "entity_id": "media_player.television"}],
    }), "Valid", T1_SUCCESS)
    add("target_entity_form", _j(variant(action=[
        {"service": "light.turn_off", "target": {"entity_id": "light.bedroom_two"}},
    ])), "Valid", T1_SUCCESS)
    add("entity_list_action", _j(variant(action=[
        {"service": "light.turn_off",
         "entity_id": ["light.kitchen", "light.living_room"]},
    ])), "Valid", T1_SUCCESS)
    add("multi_trigger_multi_action", _j({
        "alias": "evening wind down",
        "trigger": [{"platform": "sun", "event": "sunset"},
                    {"platform": "time", "at": "21:00:00"}],
        "action": [{"service": "light.turn_off", "entity_id": "light.bathroom"},
                   {"service": "media_player.volume_set",
                    "entity_id": "media_player.speakers", "data": {"volume_level": 0.1}}],
    }), "Valid", T1_SUCCESS)
    add("numeric_state_below_only", _j(variant(trigger=[
        {"platform": "numeric_state", "entity_id": "sensor.luminance_living_room",
         "below": 100},
    ])), "Valid", T1_SUCCESS)
    add("unknown_entity_lenient_mode", _j(variant(action=[
        {"service": "light.turn_off", "entity_id": "light.garage"},
    ])), "Valid", T1_SUCCESS, strict=False)
    add("condition_numeric_state", _j(variant(condition=[
        {"condition": "numeric_state", "entity_id": "sensor.power_kitchen", "above": 1500},
    ])), "Valid", T1_SUCCESS)
    add("sunrise_vacuum", _j({
        "alias": "morning clean",
        "trigger": [{"platform": "sun", "event": "sunrise"}],
        "action": [{"service": "vacuum.start", "entity_id": "vacuum.vacuum_cleaner"}],
    }), "Valid", T1_SUCCESS)
    add("volume_set_with_data", _j(variant(action=[
        {"service": "media_player.volume_set", "entity_id": "media_player.speakers",
         "data": {"volume_level": 0.4}},
    ])), "Valid", T1_SUCCESS)

    # --- schema rejections ------------------------------------------------------
    def mal(detail: str, key: str) -> str:
        return f"Message malformed: {detail} @ data['{key}']"

    add("name_instead_of_alias", _j({
        "name": "night", "trigger": base["trigger"], "action": base["action"]}),
        "Malformed", mal("extra keys not allowed", "name"))
    add("below_on_time_trigger", _j(variant(trigger=[
        {"platform": "time", "at": "22:00:00", "below": 20}])),
        "Malformed", mal("extra keys not allowed", "below"))
    add("missing_alias", _j({"trigger": base["trigger"], "action": base["action"]}),
        "Malformed", mal("required key not provided", "alias"))
    add("missing_trigger", _j({"alias": "x", "action": base["action"]}),
        "Malformed", mal("required key not provided", "trigger"))
    add("missing_action", _j({"alias": "x", "trigger": base["trigger"]}),
        "Malformed", mal("required key not provided", "action"))
    add("alias_not_string", _j(variant(alias=3)),
        "Malformed", mal("expected str for dictionary value", "alias"))
    add("alias_empty", _j(variant(alias="")),
        "Malformed", mal("length of value must be at least 1 for dictionary value", "alias"))
    add("mode_invalid", _j(variant(mode="always")),
        "Malformed",
        mal("value must be one of ['parallel', 'queued', 'restart', 'single'] "
            "for dictionary value", "mode"))
    add("trigger_not_list", _j(variant(trigger="at night")),
        "Malformed", mal("expected a list for dictionary value", "trigger"))
    add("trigger_empty", _j(variant(trigger=[])),
        "Malformed", mal("length of value must be at least 1 for dictionary value", "trigger"))
    add("trigger_item_not_dict", _j(variant(trigger=["sunset"])),
        "Malformed", mal("expected a dictionary", "trigger"))
    add("platform_missing", _j(variant(trigger=[{"at": "22:00:00"}])),
        "Malformed", mal("required key not provided", "platform"))
    add("platform_unknown", _j(variant(trigger=[{"platform": "cron", "at": "22:00:00"}])),
        "Malformed",
        mal("value must be one of ['device', 'event', 'numeric_state', 'state', 'sun', "
            "'time'] for dictionary value", "platform"))
    add("time_at_sunset", _j(variant(trigger=[{"platform": "time", "at": "sunset"}])),
        "Malformed", mal("Invalid time specified: sunset for dictionary value", "at"))
    add("time_at_short", _j(variant(trigger=[{"platform": "time", "at": "7:00"}])),
        "Malformed", mal("Invalid time specified: 7:00 for dictionary value", "at"))
    add("time_at_out_of_range", _j(variant(trigger=[{"platform": "time", "at": "25:00:00"}])),
        "Malformed", mal("Invalid time specified: 25:00:00 for dictionary value", "at"))
    add("sun_event_unknown", _j(variant(trigger=[{"platform": "sun", "event": "noon"}])),
        "Malformed", mal("value must be one of ['sunrise', 'sunset'] for dictionary value",
                         "event"))
    add("numeric_state_no_bounds", _j(variant(trigger=[
        {"platform": "numeric_state", "entity_id": "sensor.temperature_living_room"}])),
        "Malformed", mal("must contain at least one of above, below.", "trigger"))
    add("numeric_state_text_bound", _j(variant(trigger=[
        {"platform": "numeric_state", "entity_id": "sensor.temperature_living_room",
         "above": "hot"}])),
        "Malformed", mal("expected float for dictionary value", "above"))
    add("state_missing_entity", _j(variant(trigger=[{"platform": "state", "to": "on"}])),
        "Malformed", mal("required key not provided", "entity_id"))
    add("trigger_entity_bad_format", _j(variant(trigger=[
        {"platform": "state", "entity_id": "Kitchen Light", "to": "on"}])),
        "Malformed",
        mal("Entity ID Kitchen Light is an invalid entity ID for dictionary value",
            "entity_id"))
    add("action_without_service", _j(variant(action=[{"entity_id": "light.kitchen"}])),
        "Malformed", mal("required key not provided", "service"))
    add("service_bad_format", _j(variant(action=[
        {"service": "turn_off", "entity_id": "light.kitchen"}])),
        "Malformed",
        mal("Service turn_off does not match format <domain>.<name> for dictionary value",
            "service"))
    add("action_extra_key", _j(variant(action=[
        {"service": "light.turn_on", "entity_id": "light.kitchen", "brightness": 80}])),
        "Malformed", mal("extra keys not allowed", "brightness"))
    add("data_not_dict", _j(variant(action=[
        {"service": "light.turn_on", "entity_id": "light.kitchen", "data": "bright"}])),
        "Malformed", mal("expected a dictionary for dictionary value", "data"))
    add("top_level_array", _j([base]), "Malformed", mal("expected a dictionary", "automation"))
    add("strict_unknown_entity", _j(variant(action=[
        {"service": "light.turn_off", "entity_id": "light.garage"}])),
        "Malformed", mal("Entity light.garage does not exist for dictionary value",
                         "entity_id"))
    add("strict_domain_mismatch", _j(variant(action=[
        {"service": "light.turn_off", "entity_id": "switch.coffee_machine"}])),
        "Malformed",
        mal("Service domain light does not match entity switch.coffee_machine "
            "for dictionary value", "service"))
    add("condition_missing_type", _j(variant(condition=[{"entity_id": "light.kitchen"}])),
        "Malformed", mal("required key not provided", "condition"))
    add("condition_unknown_type", _j(variant(condition=[
        {"condition": "weather", "entity_id": "light.kitchen"}])),
        "Malformed",
        mal("value must be one of ['and', 'numeric_state', 'not', 'or', 'state', 'sun', "
            "'template', 'time', 'zone'] for dictionary value", "condition"))
    add("triggers_plural", _j({
        "alias": "x", "triggers": base["trigger"], "action": base["action"]}),
        "Malformed", mal("extra keys not allowed", "triggers"))
    add("algorithm_keyword", _j({
        "algorithm": "x", "alias": "x", "trigger": base["trigger"],
        "action": base["action"]}),
        "Malformed", mal("extra keys not allowed", "algorithm"))
    add("delay_invalid", _j(variant(action=[{"delay": "soon"}])),
        "Malformed", mal("Invalid time specified: soon for dictionary value", "delay"))
    add("target_extra_key", _j(variant(action=[
        {"service": "light.turn_off", "target": {"entity_id": "light.kitchen",
                                                 "area_id": "kitchen"}}])),
        "Malformed", mal("extra keys not allowed", "area_id"))

    # --- parse failures --------------------------------------------------------
    def parse(detail: str) -> str:
        return f"Error while parsing the automation: SyntaxError: {detail}"

    add("code_word_prefix", 'code: {"alias": "night"; "trigger": []; "action": []}',
        "ParseError", parse("Unexpected token c in JSON at position 0"))
    add("semicolon_at_61", semicolon_raw,
        "ParseError", parse("Unexpected token ; in JSON at position 61"))
    add("empty_input", "", "ParseError", parse("Unexpected end of JSON input"))
    add("plain_refusal", "I cannot create that routine.",
        "ParseError", parse("Unexpected token I in JSON at position 0"))
    add("trailing_comma", '{"alias": "x", }',
        "ParseError", parse("Unexpected token } in JSON at position 15"))
    add("truncated_object", '{"alias": "night"',
        "ParseError", parse("Unexpected end of JSON input"))
    add("single_quotes", "{'alias': 'x'}",
        "ParseError", parse("Unexpected token ' in JSON at position 1"))
    add("yaml_body", "alias: night\ntrigger:\n- platform: time",
        "ParseError", parse("Unexpected token a in JSON at position 0"))
    add("unexpected_string", '{"a": 1 "b": 2}',
        "ParseError", parse("Unexpected string in JSON at position 8"))
    add("unexpected_number", '{"a" 1}',
        "ParseError", parse("Unexpected number in JSON at position 5"))
    add("extra_data_tail", '{"a":1} x',
        "ParseError", parse("Unexpected token x in JSON at position 8"))
    add("stray_backticks", "```\nalias night\n```",
        "ParseError", parse("Unexpected token ` in JSON at position 0"))

    return items


def build_validator_corpus(path: Path) -> None:
    template = load_home_template(data_path("h107.json").read_text(encoding="utf-8"))
    items = validator_corpus_items()
    for item in items:
        outcome = validator.validate_offline(item["input"], template,
                                             strict_entities=item["strict"])
        assert outcome.status.value == item["live_status"], (
            f"{item['name']}: {outcome.status.value} != {item['live_status']}")
        assert outcome.message == item["live_message"], (
            f"{item['name']}:\n  got      {outcome.message}\n  expected {item['live_message']}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"version": 1, "items": items}, indent=2) + "\n",
                    encoding="utf-8")
    print(f"validator corpus: {len(items)} items -> {path}")


# ---------------------------------------------------------------------------
# Failure-classification corpus


def failure_corpus_items() -> list[dict]:
    items: list[dict] = []

    def add(name: str, category: str, label: str, output: str,
            json_text: str | None) -> None:
        items.append({"name": name, "user_command": name.replace("_", " "),
                      "category": category, "output": output, "json": json_text,
                      "label": label})

    def doc_json(doc: dict) -> str:
        return json.dumps(doc, indent=2)

    light_action = [{"service": "light.turn_off", "entity_id": "light.living_room"}]
    time_trigger = [{"platform": "time", "at": "22:00:00"}]

    # Other: unparseable outputs and keyword/shape breakage with no device signal.
    add("plain_refusal", "Robot Control", "Other",
        "I cannot create that routine.", None)
    add("python_script_output", "Robot Control", "Other",
        "def run_routine():\n    vacuum.stop_cleaning()\n    return True", None)
    add("code_word_before_routine", "Media Control", "Other",
        'code: {"alias": "tv off"; "trigger": []; "action": []}', None)
    add("yaml_instead_of_json", "Ambient Luminance", "Other",
        "alias: lights out\ntrigger:\n- platform: time\n  at: '22:00:00'", None)
    add("truncated_routine", "Security", "Other",
        '{"alias": "lock up", "trigger": [{"platform": "time",', None)
    add("apology_text", "Other Appliances", "Other",
        "Apologies, the request is outside what I can automate.", None)
    add("name_keyword_lights", "Ambient Luminance", "Other",
        doc_json({"name": "lights out", "trigger": time_trigger, "action": light_action}),
        doc_json({"name": "lights out", "trigger": time_trigger, "action": light_action}))
    add("triggers_plural_vacuum", "Robot Control", "Other",
        doc_json({"alias": "clean", "triggers": time_trigger,
                  "action": [{"service": "vacuum.start",
                              "entity_id": "vacuum.vacuum_cleaner"}]}),
        doc_json({"alias": "clean", "triggers": time_trigger,
                  "action": [{"service": "vacuum.start",
                              "entity_id": "vacuum.vacuum_cleaner"}]}))
    add("algorithm_keyword_coffee", "Other Appliances", "Other",
        doc_json({"algorithm": "brew", "trigger": time_trigger,
                  "action": [{"service": "switch.turn_on",
                              "entity_id": "switch.coffee_machine"}]}),
        doc_json({"algorithm": "brew", "trigger": time_trigger,
                  "action": [{"service": "switch.turn_on",
                              "entity_id": "switch.coffee_machine"}]}))
    add("missing_action_section", "Security", "Other",
        doc_json({"alias": "watch", "trigger": time_trigger}),
        doc_json({"alias": "watch", "trigger": time_trigger}))
    add("invalid_mode_lights", "Ambient Luminance", "Other",
        doc_json({"alias": "soft evening", "mode": "always", "trigger": time_trigger,
                  "action": light_action}),
        doc_json({"alias": "soft evening", "mode": "always", "trigger": time_trigger,
                  "action": light_action}))
    add("empty_trigger_lock", "Security", "Other",
        doc_json({"alias": "lock", "trigger": [],
                  "action": [{"service": "lock.lock", "entity_id": "lock.front_door"}]}),
        doc_json({"alias": "lock", "trigger": [],
                  "action": [{"service": "lock.lock", "entity_id": "lock.front_door"}]}))

    # DeviceExtra: right devices plus unnecessary ones.
    def extra(name: str, category: str, doc: dict) -> None:
        add(name, category, "DeviceExtra", doc_json(doc), doc_json(doc))

    extra("vacuum_plus_lights", "Robot Control", {
        "alias": "clean everything", "icon": "mdi:robot", "trigger": time_trigger,
        "action": [{"service": "vacuum.start", "entity_id": "vacuum.vacuum_cleaner"},
                   {"service": "light.turn_off",
                    "entity_id": ["light.kitchen", "light.living_room",
                                  "light.bathroom"]}]})
    extra("lock_plus_speakers", "Security", {
        "alias": "night lock", "trigger": [{"platform": "time", "at": "23:00:00",
                                            "below": 20}],
        "action": [{"service": "lock.lock", "entity_id": "lock.front_door"},
                   {"service": "media_player.turn_off",
                    "entity_id": "media_player.speakers"}]})
    extra("lights_plus_coffee", "Ambient Luminance", {
        "alias": "lights down", "trigger": [{"platform": "time", "at": "10pm"}],
        "action": [{"service": "light.turn_off", "entity_id": "light.living_room"},
                   {"service": "switch.turn_off", "entity_id": "switch.coffee_machine"}]})
    extra("tv_plus_camera", "Media Control", {
        "alias": "movie night",
        "trigger": [{"platform": "time", "at": "20:00:00", "retrigger": False}],
        "action": [{"service": "media_player.turn_on",
                    "entity_id": "media_player.television"},
                   {"service": "camera.turn_off", "entity_id": "camera.entrance"}]})
    extra("purifier_plus_tv", "Air Quality", {
        "trigger": time_trigger,
        "action": [{"service": "fan.turn_on", "entity_id": "fan.air_purifier"},
                   {"service": "media_player.turn_off",
                    "entity_id": "media_player.television"}]})
    extra("coffee_plus_vacuum", "Other Appliances", {
        "alias": "", "trigger": time_trigger,
        "action": [{"service": "switch.turn_on", "entity_id": "switch.coffee_machine"},
                   {"service": "vacuum.start", "entity_id": "vacuum.vacuum_cleaner"}]})
    extra("camera_plus_blinds", "Security", {
        "alias": "away watch", "mode": "forever", "trigger": time_trigger,
        "action": [{"service": "camera.turn_on", "entity_id": "camera.entrance"},
                   {"service": "cover.close_cover",
                    "entity_id": "cover.living_room_blinds"}]})
    extra("temperature_command_lights_off", "Ambient Temperature", {
        "alias": "cool the house", "trigger": [{"platform": "time", "at": "sunset"}],
        "action": [{"service": "light.turn_off", "entity_id": "light.living_room"},
                   {"service": "cover.close_cover",
                    "entity_id": "cover.bedroom_one_blinds"}]})

    # SensorTriggerValue: descriptive literals where machine values belong.
    def trig(name: str, category: str, doc: dict) -> None:
        add(name, category, "SensorTriggerValue", doc_json(doc), doc_json(doc))

    trig("lights_at_sunset_literal", "Ambient Luminance", {
        "alias": "evening lights", "trigger": [{"platform": "time", "at": "sunset"}],
        "action": light_action})
    trig("purifier_at_sunrise_literal", "Air Quality", {
        "alias": "morning air", "trigger": [{"platform": "time", "at": "sunrise"}],
        "action": [{"service": "fan.turn_on", "entity_id": "fan.air_purifier"}]})
    trig("trigger_above_hot", "Ambient Temperature", {
        "alias": "too hot",
        "trigger": [{"platform": "numeric_state",
                     "entity_id": "sensor.temperature_living_room", "above": "hot"}],
        "action": [{"service": "fan.turn_off"}]})
    trig("trigger_below_cold", "Ambient Temperature", {
        "alias": "too cold",
        "trigger": [{"platform": "numeric_state",
                     "entity_id": "sensor.temperature_bedroom_one", "below": "cold"}],
        "action": [{"service": "fan.turn_off"}]})
    trig("lock_at_sunset_literal", "Security", {
        "alias": "dusk lock", "trigger": [{"platform": "time", "at": "sunset"}],
        "action": [{"service": "lock.lock", "entity_id": "lock.front_door"}]})
    trig("coffee_at_sunrise_literal", "Other Appliances", {
        "alias": "dawn coffee", "trigger": [{"platform": "time", "at": "sunrise"}],
        "action": [{"service": "switch.turn_on", "entity_id": "switch.coffee_machine"}]})

    # DeviceOptionExists: an option that exists in the home, on the wrong device.
    def opt(name: str, category: str, doc: dict) -> None:
        add(name, category, "DeviceOptionExists", doc_json(doc), doc_json(doc))

    opt("light_with_position_data", "Ambient Luminance", {
        "alias": "half light", "icon": "mdi:bulb", "trigger": time_trigger,
        "action": [{"service": "light.turn_on", "entity_id": "light.living_room",
                    "data": {"position": 50}}]})
    opt("cover_service_on_light", "Ambient Luminance", {
        "alias": "dim via cover", "notes": "wrong service", "trigger": time_trigger,
        "action": [{"service": "light.set_cover_position",
                    "entity_id": "light.kitchen"}]})
    opt("tv_with_speed_data", "Media Control", {
        "alias": "fast tv",
        "trigger": [{"platform": "time", "at": "20:00:00", "below": 3}],
        "action": [{"service": "media_player.turn_on",
                    "entity_id": "media_player.television", "data": {"speed": "high"}}]})
    opt("vacuum_open_cover", "Robot Control", {
        "trigger": time_trigger,
        "action": [{"service": "vacuum.open_cover",
                    "entity_id": "vacuum.vacuum_cleaner"}]})
    opt("coffee_with_brightness", "Other Appliances", {
        "alias": "bright coffee",
        "trigger": [{"platform": "time", "at": "07:00:00", "repeat": True}],
        "action": [{"service": "switch.turn_on", "entity_id": "switch.coffee_machine",
                    "data": {"brightness": 120}}]})

    # DeviceSetting: the right option with an impossible value.
    def setting(name: str, category: str, doc: dict) -> None:
        add(name, category, "DeviceSetting", doc_json(doc), doc_json(doc))

    setting("brightness_over_range", "Ambient Luminance", {
        "alias": "max light", "icon": "mdi:bulb", "trigger": time_trigger,
        "action": [{"service": "light.turn_on", "entity_id": "light.living_room",
                    "data": {"brightness": 300}}]})
    setting("brightness_text_value", "Ambient Luminance", {
        "alias": "max light",
        "action": [{"service": "light.turn_on", "entity_id": "light.kitchen",
                    "data": {"brightness": "max"}}]})
    setting("volume_above_one", "Media Control", {
        "alias": "loud", "trigger": time_trigger,
        "action": [{"service": "media_player.volume_set",
                    "entity_id": "media_player.speakers",
                    "data": {"volume_level": 5}, "loop": True}]})
    setting("purifier_turbo_speed", "Air Quality", {
        "alias": "turbo air", "icon": "mdi:fan", "trigger": time_trigger,
        "action": [{"service": "fan.set_speed", "entity_id": "fan.air_purifier",
                    "data": {"speed": "turbo"}}]})

    # DeviceHallucinated: devices the home does not have.
    def halluc(name: str, category: str, doc: dict) -> None:
        add(name, category, "DeviceHallucinated", doc_json(doc), doc_json(doc))

    halluc("washing_machine_routine", "Other Appliances", {
        "alias": "laundry", "trigger": time_trigger,
        "action": [{"service": "switch.turn_on", "entity_id": "switch.washing_machine"}]})
    halluc("thermostat_for_temperature", "Ambient Temperature", {
        "alias": "warm up", "trigger": time_trigger,
        "action": [{"service": "climate.turn_on", "entity_id": "climate.thermostat"}]})
    halluc("microwave_routine", "Other Appliances", {
        "alias": "dinner", "trigger": time_trigger,
        "action": [{"service": "switch.turn_on", "entity_id": "switch.microwave"}]})

    # SensorSuboptimalChoice: a sensor is used although a better one exists.
    add("motion_instead_of_luminance", "Ambient Luminance", "SensorSuboptimalChoice",
        doc_json({"alias": "auto light",
                  "trigger": [{"platform": "state",
                               "entity_id": "binary_sensor.motion_living_room",
                               "to": "on", "cooldown": 30}],
                  "action": [{"service": "light.turn_on",
                              "entity_id": "light.living_room"}]}),
        doc_json({"alias": "auto light",
                  "trigger": [{"platform": "state",
                               "entity_id": "binary_sensor.motion_living_room",
                               "to": "on", "cooldown": 30}],
                  "action": [{"service": "light.turn_on",
                              "entity_id": "light.living_room"}]}))

    # DeviceNoOptionExists: a service nothing in the home provides.
    add("vacuum_stop_cleaning_call", "Robot Control", "DeviceNoOptionExists",
        doc_json({"alias": "stop cleaning", "schedule": "now", "trigger": time_trigger,
                  "action": [{"service": "vacuum.stop_cleaning",
                              "entity_id": "vacuum.vacuum_cleaner"}]}),
        doc_json({"alias": "stop cleaning", "schedule": "now", "trigger": time_trigger,
                  "action": [{"service": "vacuum.stop_cleaning",
                              "entity_id": "vacuum.vacuum_cleaner"}]}))

    return items


def build_failure_corpus(path: Path) -> None:
    template = load_home_template(data_path("h107.json").read_text(encoding="utf-8"))
    _, category_list = load_command_dataset(
        data_path("commands.json").read_text(encoding="utf-8"))
    categories = {c.name: c for c in category_list}

    items = failure_corpus_items()
    assert len(items) == 40, len(items)
    counts: dict[str, int] = {}
    for item in items:
        if item["json"] is not None:
            outcome = validator.validate_offline(item["json"], template, strict_entities=True)
            assert not outcome.ok, f"{item['name']} should be invalid, got {outcome.message}"
        record = analysis.RunRecord(
            user_command=item["user_command"], goal_type="immediate",
            category=item["category"], llm="corpus", prompt="Green", temperature=0.0,
            output=item["output"], json=item["json"], latency_ms=0, json_validity=False,
            ha_response="")
        got = analysis.classify_failure(record, template, categories)
        assert got.value == item["label"], (
            f"{item['name']}: classified {got.value}, labeled {item['label']}")
        counts[item["label"]] = counts.get(item["label"], 0) + 1

    ordered = sorted(counts.items(), key=lambda kv: -kv[1])
    assert ordered[0][0] == "Other" and ordered[1][0] == "DeviceExtra", ordered
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"version": 1, "items": items}, indent=2) + "\n",
                    encoding="utf-8")
    print(f"failure corpus: {len(items)} items -> {path}  distribution: {ordered}")


def build_prompt_diff_golden(path: Path) -> None:
    template = load_home_template(data_path("h107.json").read_text(encoding="utf-8"))
    profile = ingest_energy_annotations([
        data_path("energy", "annotations_part1.csv"),
        data_path("energy", "annotations_part2.csv"),
    ])
    command = "make it less bright"
    green = prompts.build_prompt(GREEN, template, profile, command)
    nogreen = prompts.build_prompt(NO_GREEN, template, profile, command)
    diff = "\n".join(difflib.unified_diff(
        nogreen.system_text.splitlines(), green.system_text.splitlines(),
        fromfile="no_green", tofile="green", lineterm=""))
    path.write_text(diff + "\n", encoding="utf-8")
    print(f"prompt diff golden -> {path}")


def main() -> None:
    data_root = REPO / "src" / "ecomate" / "data"
    build_replay_store(data_root / "replay")
    build_validator_corpus(data_root / "corpora" / "validator_golden.json")
    build_failure_corpus(data_root / "corpora" / "failure_corpus.json")
    build_prompt_diff_golden(data_root / "prompts" / "green_vs_no_green.diff")
    verify_replay_store()


if __name__ == "__main__":
    main()
