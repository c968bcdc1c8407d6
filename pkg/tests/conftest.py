import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from krodtwin.burgers import PRESETS, generate_snapshots  # noqa: E402
from krodtwin.pipeline import preset_config, run_pipeline  # noqa: E402


@pytest.fixture(scope="session")
def snapshots():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = generate_snapshots(PRESETS[name])
        return cache[name]

    return get


@pytest.fixture(scope="session")
def preset_run(tmp_path_factory):
    """Full pipeline runs, one per (preset, folds, tag), shared across the session."""
    cache = {}

    def get(name, folds="twofold", tag="a"):
        key = (name, folds, tag)
        if key not in cache:
            out = tmp_path_factory.mktemp(f"{name}-{folds}-{tag}")
            status, manifest = run_pipeline(preset_config(name, out, seed=0, folds=folds))
            cache[key] = (status, manifest, out)
        return cache[key]

    return get


def read_json(path):
    return json.loads(Path(path).read_text())


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for the acceptance summary."""

    def record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title}" + (f" | {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
