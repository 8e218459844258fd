from __future__ import annotations

import json

import pytest

from ecomate.bench import data_path
from ecomate.home import (
    ingest_energy_annotations,
    load_command_dataset,
    load_home_template,
)


@pytest.fixture(scope="session")
def template():
    return load_home_template(data_path("h107.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def profile():
    return ingest_energy_annotations([
        data_path("energy", "annotations_part1.csv"),
        data_path("energy", "annotations_part2.csv"),
    ])


@pytest.fixture(scope="session")
def command_dataset():
    return load_command_dataset(data_path("commands.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def commands(command_dataset):
    return command_dataset[0]


@pytest.fixture(scope="session")
def categories(command_dataset):
    return {category.name: category for category in command_dataset[1]}


@pytest.fixture(scope="session")
def validator_corpus():
    path = data_path("corpora", "validator_golden.json")
    return json.loads(path.read_text(encoding="utf-8"))["items"]


@pytest.fixture(scope="session")
def failure_corpus():
    path = data_path("corpora", "failure_corpus.json")
    return json.loads(path.read_text(encoding="utf-8"))["items"]
