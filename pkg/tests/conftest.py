from pathlib import Path

import pytest

from ftaq.modelfmt import load_model

DATA = Path(__file__).resolve().parents[1] / "src" / "ftaq" / "data"
SCRIPTS = DATA / "scripts"
ERRORS = DATA / "errors"


def fixture_model(name: str):
    return load_model(DATA / f"{name}.ftat")


@pytest.fixture(scope="session")
def m1():
    return fixture_model("m1")


@pytest.fixture(scope="session")
def m2():
    return fixture_model("m2")


@pytest.fixture(scope="session")
def m3():
    return fixture_model("m3")


@pytest.fixture(scope="session")
def jm():
    return fixture_model("jm")


@pytest.fixture(scope="session")
def water():
    return fixture_model("water")


@pytest.fixture(scope="session")
def water_demo():
    return fixture_model("water_demo")
