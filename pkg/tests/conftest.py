from __future__ import annotations

import os
import shutil
import sys

import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEMO_DIR = os.path.join(REPO_ROOT, "demo", "mnist_calculator")
MOCK_BRIDGE = os.path.join(REPO_ROOT, "tests", "mock_bridge.py")
RUNTIME_MAIN = os.path.join(REPO_ROOT, "runtime", "dist", "main.js")


@pytest.fixture(scope="session")
def demo_dir() -> str:
    return DEMO_DIR


@pytest.fixture()
def tmp_project(tmp_path) -> str:
    """A scratch copy of the demo project safe to mutate."""
    target = tmp_path / "proj"
    shutil.copytree(DEMO_DIR, target)
    return str(target)


@pytest.fixture()
def mock_launcher():
    """Launcher factory for the in-repo mock bridge, parameterized by cwd."""
    from mlcforge.bridge import launcher_from_command

    def make(cwd: str, timeout: float = 60.0):
        return launcher_from_command([sys.executable, MOCK_BRIDGE], cwd=cwd, timeout=timeout)

    return make


@pytest.fixture()
def demo_analysis():
    """Analyzed demo project (read-only use)."""
    from mlcforge.analysis import analyze_unit
    from mlcforge.frontend import load_project

    unit, diags = load_project(DEMO_DIR)
    assert unit is not None, [d.render() for d in diags]
    analysis = analyze_unit(unit)
    assert analysis.ok, [d.render() for d in analysis.diagnostics]
    return analysis


def load_analyzed(project_dir: str, automl: bool | None = None):
    from mlcforge.analysis import analyze_unit
    from mlcforge.frontend import load_project
    from mlcforge.weights import import_resolver_for

    unit, diags = load_project(project_dir)
    assert unit is not None, [d.render() for d in diags]
    resolver = import_resolver_for(unit.manifest.root)
    return analyze_unit(unit, import_resolver=resolver, automl=automl), diags


def has_runtime() -> bool:
    return os.path.isfile(RUNTIME_MAIN)


requires_runtime = pytest.mark.skipif(
    not os.path.isfile(RUNTIME_MAIN),
    reason="runtime package not built (npm run build in runtime/)",
)
