from pathlib import Path

import pytest

from adaptutor import load_course_pack_file, parse_rulebook, validate_instrument
import json

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def demo_pack():
    return load_course_pack_file(REPO_ROOT / "packs" / "demo-computing.json")


@pytest.fixture(scope="session")
def default_rules():
    with open(REPO_ROOT / "rules" / "default.json", encoding="utf-8") as f:
        return parse_rulebook(json.load(f))


@pytest.fixture(scope="session")
def demo_instrument():
    with open(REPO_ROOT / "instruments" / "demo-20.json", encoding="utf-8") as f:
        return validate_instrument(json.load(f))
