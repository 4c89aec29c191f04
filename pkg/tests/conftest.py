import pytest

from stepo.kb import load_kb, sample_kb_path
from stepo.retrieval import user_preference_stats

from kbfactory import make_kb

PERSONA = "persona_business"
ANCHOR = "black_slim_straight_pants"


@pytest.fixture(scope="session")
def sample_kb():
    return load_kb(sample_kb_path())


@pytest.fixture(scope="session")
def sample_dir():
    return sample_kb_path()


@pytest.fixture(scope="session")
def persona_profile(sample_kb, sample_dir):
    import json

    outfits = json.loads((sample_dir / "users" / PERSONA / "outfits.json").read_text(encoding="utf-8"))
    return user_preference_stats([o["item_ids"] for o in outfits], sample_kb, PERSONA)


@pytest.fixture
def tiny_kb(tmp_path):
    return make_kb(tmp_path / "kb")


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
