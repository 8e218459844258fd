from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecomate.analysis import (
    EmptyGroupError,
    EmptyTextError,
    FailureClass,
    MetricsSummary,
    PreconditionViolatedError,
    RunRecord,
    UnmatchedKeyError,
    classify_failure,
    is_false_negative,
    is_false_positive,
    pair_green_nogreen,
    relevance_score,
    round_half_up,
    similarity,
    summarize,
)

TEMP_CATEGORY = "Ambient Temperature"  # no relevant appliance in the h107 home
LIGHT_ENTITIES = ["light.kitchen", "light.living_room", "light.bedroom_one",
                  "light.bedroom_two", "light.bathroom", "light.hallway"]


def record(category: str = "Robot Control", json_doc: dict | None = None,
           json_text: str | None = None, valid: bool = False, llm: str = "demo",
           prompt: str = "Green", temperature: float = 0.0, latency: int = 1000,
           command: str = "clean the house") -> RunRecord:
    payload = json_text if json_text is not None else (
        json.dumps(json_doc) if json_doc is not None else None)
    return RunRecord(
        user_command=command, goal_type="immediate", category=category, llm=llm,
        prompt=prompt, temperature=temperature, output=payload or "no routine",
        json=payload, latency_ms=latency, json_validity=valid, ha_response="")


def actions_for(entities: list[str], service: str = "light.turn_off") -> dict:
    return {"alias": "x", "trigger": [{"platform": "time", "at": "22:00:00"}],
            "action": [{"service": service, "entity_id": entity} for entity in entities]}


# -- relevance ----------------------------------------------------------------


def test_relevance_vacuum_only_is_one(template, categories):
    doc = actions_for(["vacuum.vacuum_cleaner"], service="vacuum.start")
    assert relevance_score(record(json_doc=doc), categories, template) == 1.0


def test_relevance_vacuum_plus_three_lights(template, categories):
    doc = {"alias": "x", "trigger": [],
           "action": [{"service": "vacuum.start", "entity_id": "vacuum.vacuum_cleaner"},
                      {"service": "light.turn_off",
                       "entity_id": LIGHT_ENTITIES[:3]}]}
    assert relevance_score(record(json_doc=doc), categories, template) == -0.5


def test_relevance_no_targets_is_zero(template, categories):
    doc = {"alias": "x", "trigger": [], "action": [{"service": "light.turn_off"}]}
    assert relevance_score(record(json_doc=doc), categories, template) == 0.0


def test_relevance_requires_parseable_json(template, categories):
    with pytest.raises(PreconditionViolatedError):
        relevance_score(record(json_text="not json"), categories, template)


@settings(max_examples=200)
@given(relevant=st.integers(0, 4), irrelevant=st.integers(0, 4))
def test_relevance_bounds_and_extremes(template, categories, relevant, irrelevant):
    vacuums = ["vacuum.vacuum_cleaner"] * relevant  # duplicates collapse to one
    doc = {"alias": "x", "trigger": [], "action": []}
    if relevant:
        doc["action"].append({"service": "vacuum.start",
                              "entity_id": "vacuum.vacuum_cleaner"})
    doc["action"] += [{"service": "light.turn_off", "entity_id": entity}
                      for entity in LIGHT_ENTITIES[:irrelevant]]
    score = relevance_score(record(json_doc=doc), categories, template)
    assert -1.0 <= score <= 1.0
    r = 1 if relevant else 0
    if r and irrelevant == 0:
        assert score == 1.0
    if irrelevant and r == 0:
        assert score == -1.0
    assert vacuums is not None


# -- false positives / negatives ---------------------------------------------


def test_fp_requires_missing_relevant_appliance(template, categories):
    targeting = record(category=TEMP_CATEGORY,
                       json_doc=actions_for(["light.kitchen"]), valid=True)
    assert is_false_positive(targeting, template, categories)
    relevant_home = record(category="Robot Control",
                           json_doc=actions_for(["light.kitchen"]))
    assert not is_false_positive(relevant_home, template, categories)
    no_targets = record(category=TEMP_CATEGORY, json_doc={"alias": "x", "action": []})
    assert not is_false_positive(no_targets, template, categories)


def test_fn_requires_relevant_appliance_and_no_routine(template, categories):
    assert is_false_negative(record(category="Robot Control"), template, categories)
    assert not is_false_negative(record(category=TEMP_CATEGORY), template, categories)
    produced = record(category="Robot Control", json_doc=actions_for([]))
    assert not is_false_negative(produced, template, categories)


# -- summarize ----------------------------------------------------------------


def engineered_group(template, categories) -> list[RunRecord]:
    """40 records: 7 FP, 0 FN, 28 valid, latencies pinned at 2472/8955."""
    records = []
    for index in range(40):
        category = TEMP_CATEGORY if index < 9 else "Robot Control"
        if index < 7:  # routines for commands with no relevant appliance
            records.append(record(command=f"c{index}", category=category, valid=True,
                                  json_doc=actions_for(["light.kitchen"]),
                                  latency=2472 if index == 0 else 5000))
        elif index < 9:
            records.append(record(command=f"c{index}", category=category,
                                  latency=8955 if index == 8 else 5000))
        elif index < 9 + 21:
            records.append(record(command=f"c{index}", category=category, valid=True,
                                  json_doc=actions_for(["vacuum.vacuum_cleaner"],
                                                       "vacuum.start"),
                                  latency=5000))
        else:
            records.append(record(command=f"c{index}", category=category,
                                  json_doc={"name": "bad", "trigger": [], "action": []},
                                  latency=5000))
    return records


def test_summarize_engineered_group(template, categories):
    records = engineered_group(template, categories)
    summary, = summarize(records, template, categories)
    assert summary.fp_count == 7 and summary.fn_count == 0
    assert summary.fp == pytest.approx(0.175)
    assert summary.acc == pytest.approx(0.825)
    shown = summary.display()
    assert shown["fp"] == "0.18" and shown["acc"] == "0.83"
    assert summary.valid_count == 28
    assert shown["validity_pct"] == "0.70"
    assert summary.latency_min_ms == 2472 and summary.latency_max_ms == 8955


def test_summarize_rejects_empty():
    with pytest.raises(EmptyGroupError):
        summarize([], None, {})


def brute_force_counts(records, template, categories):
    """Independent recount: naive loops straight from the metric definitions."""
    fp = fn = 0
    for r in records:
        relevant_types = categories[r.category].relevant_appliance_types
        home_types = {a.appliance_type for a in template.appliances}
        has_relevant = bool(set(relevant_types) & home_types)
        targets = []
        if r.json is not None:
            try:
                doc = json.loads(r.json)
            except json.JSONDecodeError:
                doc = None
            if isinstance(doc, dict):
                for action in doc.get("action") or []:
                    if isinstance(action, dict):
                        value = action.get("entity_id")
                        if isinstance(value, str):
                            targets.append(value)
                        elif isinstance(value, list):
                            targets.extend(v for v in value if isinstance(v, str))
                        target = action.get("target")
                        if isinstance(target, dict):
                            tv = target.get("entity_id")
                            if isinstance(tv, str):
                                targets.append(tv)
                            elif isinstance(tv, list):
                                targets.extend(v for v in tv if isinstance(v, str))
        if targets and not has_relevant:
            fp += 1
        if r.json is None and has_relevant:
            fn += 1
    return fp, fn


def random_record_set(rng: random.Random, template, categories) -> list[RunRecord]:
    names = list(categories)
    records = []
    for index in range(rng.randint(1, 12)):
        category = rng.choice(names)
        shape = rng.randrange(4)
        if shape == 0:
            payload = None
        elif shape == 1:
            payload = actions_for(rng.sample(LIGHT_ENTITIES, rng.randint(0, 3)))
        elif shape == 2:
            payload = {"alias": "x", "action": []}
        else:
            payload = actions_for(["vacuum.vacuum_cleaner"], "vacuum.start")
        records.append(record(command=f"cmd{index}", category=category,
                              json_doc=payload, valid=rng.random() < 0.5,
                              latency=rng.randint(100, 9000)))
    return records


def test_acc_identity_against_brute_force(template, categories):
    rng = random.Random(20260809)
    for _ in range(300):
        records = random_record_set(rng, template, categories)
        summary, = summarize(records, template, categories)
        fp, fn = brute_force_counts(records, template, categories)
        assert summary.fp_count == fp
        assert summary.fn_count == fn
        assert summary.acc == 1.0 - (summary.fp + summary.fn)


# -- pairing -------------------------------------------------------------------


def green_nogreen(valid_g: bool, valid_ng: bool, lat_g: int, lat_ng: int):
    doc = actions_for(["vacuum.vacuum_cleaner"], "vacuum.start")
    return [
        record(prompt="Green", valid=valid_g, json_doc=doc, latency=lat_g),
        record(prompt="No green", valid=valid_ng, json_doc=doc, latency=lat_ng),
    ]


def test_pair_boolean_difference_plus_one():
    pair, = pair_green_nogreen(green_nogreen(True, False, 1000, 900))
    assert pair.boolean_difference == 1


def test_pair_boolean_difference_zero():
    pair, = pair_green_nogreen(green_nogreen(True, True, 1000, 900))
    assert pair.boolean_difference == 0


def test_pair_latency_difference():
    pair, = pair_green_nogreen(green_nogreen(True, False, 5213, 5000))
    assert pair.latency_difference_ms == 213


def test_pair_unmatched_key_raises():
    with pytest.raises(UnmatchedKeyError):
        pair_green_nogreen(green_nogreen(True, False, 1, 1)[:1])


@settings(max_examples=100)
@given(valid_g=st.booleans(), valid_ng=st.booleans(),
       lat_g=st.integers(0, 99999), lat_ng=st.integers(0, 99999))
def test_pair_antisymmetry(valid_g, valid_ng, lat_g, lat_ng):
    forward, = pair_green_nogreen(green_nogreen(valid_g, valid_ng, lat_g, lat_ng))
    swapped, = pair_green_nogreen(green_nogreen(valid_ng, valid_g, lat_ng, lat_g))
    assert forward.boolean_difference == -swapped.boolean_difference
    assert forward.latency_difference_ms == -swapped.latency_difference_ms
    assert forward.boolean_difference in (-1, 0, 1)


# -- similarity -----------------------------------------------------------------


def test_similarity_identity():
    text = json.dumps(actions_for(["light.kitchen"]))
    assert similarity(text, text) == pytest.approx(1.0, abs=1e-9)


def test_similarity_key_reordering_invariant():
    a = '{"alias": "x", "trigger": [], "action": []}'
    b = '{"action": [], "alias": "x", "trigger": []}'
    assert similarity(a, b) == pytest.approx(1.0, abs=1e-9)


def test_similarity_disjoint_alphabets():
    assert similarity("aaaa", "bbbb") == 0.0


def test_similarity_one_trigger_value_apart_pinned():
    a = json.dumps({"alias": "night lights",
                    "trigger": [{"platform": "time", "at": "22:00:00"}],
                    "action": [{"service": "light.turn_off",
                                "entity_id": "light.living_room"}]})
    b = json.dumps({"alias": "night lights",
                    "trigger": [{"platform": "time", "at": "23:30:00"}],
                    "action": [{"service": "light.turn_off",
                                "entity_id": "light.living_room"}]})
    score = similarity(a, b)
    assert score > 0.9
    assert score == pytest.approx(0.9767547513254082, abs=1e-9)


def test_similarity_empty_input_rejected():
    with pytest.raises(EmptyTextError):
        similarity("", "x")


@settings(max_examples=100)
@given(a=st.text(min_size=1, max_size=40), b=st.text(min_size=1, max_size=40))
def test_similarity_symmetric_and_bounded(a, b):
    forward = similarity(a, b)
    backward = similarity(b, a)
    assert forward == pytest.approx(backward, abs=1e-12)
    assert 0.0 <= forward <= 1.0


def test_similarity_score_provider_plugs_in():
    class Constant:
        def score(self, a, b):
            return 0.5

    assert similarity("x", "y", provider=Constant()) == 0.5


def test_similarity_embed_provider_plugs_in():
    class Axis:
        def embed(self, text):
            return [1.0, 0.0] if "a" in text else [0.0, 1.0]

    assert similarity("aa", "aa", provider=Axis()) == pytest.approx(1.0)
    assert similarity("aa", "bb", provider=Axis()) == pytest.approx(0.0)


# -- failure classification -----------------------------------------------------


def test_classifier_rejects_valid_records(template, categories):
    with pytest.raises(PreconditionViolatedError):
        classify_failure(record(valid=True), template, categories)


def test_classifier_hallucinated_washing_machine(template, categories):
    doc = actions_for(["switch.washing_machine"], "switch.turn_on")
    got = classify_failure(record(category="Other Appliances", json_doc=doc),
                           template, categories)
    assert got is FailureClass.DEVICE_HALLUCINATED


def test_classifier_sunset_under_time_platform(template, categories):
    doc = actions_for(["vacuum.vacuum_cleaner"], "vacuum.start")
    doc["trigger"] = [{"platform": "time", "at": "sunset"}]
    got = classify_failure(record(json_doc=doc), template, categories)
    assert got is FailureClass.SENSOR_TRIGGER_VALUE


def test_classifier_parse_error_is_other(template, categories):
    got = classify_failure(record(json_text=None), template, categories)
    assert got is FailureClass.OTHER


def test_classifier_never_raises_on_invalid_records(template, categories):
    rng = random.Random(7)
    for _ in range(200):
        records = random_record_set(rng, template, categories)
        for r in records:
            if r.json_validity:
                continue
            got = classify_failure(r, template, categories)
            assert isinstance(got, FailureClass)


def test_failure_corpus_zero_diffs(template, categories, failure_corpus):
    assert len(failure_corpus) == 40
    mismatches = []
    for item in failure_corpus:
        r = record(category=item["category"], json_text=item["json"],
                   command=item["user_command"])
        r = RunRecord(**{**r.__dict__, "output": item["output"]})
        got = classify_failure(r, template, categories)
        if got.value != item["label"]:
            mismatches.append((item["name"], got.value, item["label"]))
    assert mismatches == []


def test_failure_corpus_ordering_matches_reported_top_two(failure_corpus):
    counts = {}
    for item in failure_corpus:
        counts[item["label"]] = counts.get(item["label"], 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: -kv[1])
    assert ordered[0][0] == "Other"
    assert ordered[1][0] == "DeviceExtra"


# -- display rounding ------------------------------------------------------------


def test_round_half_up_exact_ratios():
    assert str(round_half_up(7, 40, 2)) == "0.18"
    assert str(round_half_up(33, 40, 2)) == "0.83"
    assert str(round_half_up(212217, 40, 2)) == "5305.43"
    assert str(round_half_up(1, 40, 2)) == "0.03"
