"""Smoke tests: verify every module imports and the CLI registry is consistent."""

import importlib
import subprocess
import sys

import pytest

# Every public module that should be importable
MODULES = [
    "byzantine_secretary",
    "byzantine_secretary.model",
    "byzantine_secretary.subroutines",
    "byzantine_secretary.single_item",
    "byzantine_secretary.multi_select",
    "byzantine_secretary.matroids",
    "byzantine_secretary.adversaries",
    "byzantine_secretary.harness",
    "byzantine_secretary._errors",
    "byzantine_secretary._response",
    "byzantine_secretary.cli",
]


@pytest.mark.parametrize("module", MODULES)
def test_module_imports(module):
    """Every module should import without errors."""
    mod = importlib.import_module(module)
    assert mod is not None


def test_cli_entrypoint():
    """The bsec CLI should be callable and print help."""
    result = subprocess.run(
        [sys.executable, "-m", "byzantine_secretary.cli", "--help"],
        capture_output=True,
        text=True,
        timeout=30,
    )
    assert result.returncode == 0
    assert "bsec" in result.stdout


def test_cli_registry_modules_loadable():
    """Every module in the CLI registry should be loadable."""
    from byzantine_secretary.cli import _REGISTRY, _load_module

    for module_name in _REGISTRY:
        mod = _load_module(module_name)
        assert mod is not None, f"Failed to load module: {module_name}"


def test_cli_registry_commands_callable():
    """Every command in registry modules should resolve to a callable."""
    from byzantine_secretary.cli import _REGISTRY, _load_module

    for module_name, commands in _REGISTRY.items():
        mod = _load_module(module_name)
        for command_name in commands:
            fn = getattr(mod, command_name, None)
            assert fn is not None, f"{module_name}.{command_name} not found"
            assert callable(fn), f"{module_name}.{command_name} is not callable"


def test_cli_verbs_point_at_registry():
    from byzantine_secretary.cli import _REGISTRY, _VERBS

    for verb, (module_name, command_name) in _VERBS.items():
        assert command_name in _REGISTRY[module_name], verb


def test_response_from_exception_carries_code():
    from byzantine_secretary._errors import OracleFailure, UnknownAlgorithmError
    from byzantine_secretary._response import from_exception

    assert from_exception(OracleFailure("no incumbent"))["data"] == {"error_code": "ORACLE_FAILURE"}
    assert from_exception(UnknownAlgorithmError("nope"))["data"] == {"error_code": "UNKNOWN_ALGORITHM"}
    # Plain ValueErrors are configuration problems
    assert from_exception(ValueError("bad"))["data"] == {"error_code": "CONFIG_ERROR"}
    assert from_exception(RuntimeError("boom"))["data"] is None


def test_version_consistency():
    """Package __version__ should match pyproject.toml."""
    import re
    from pathlib import Path

    import byzantine_secretary

    pyproject = Path(__file__).parent.parent / "pyproject.toml"
    text = pyproject.read_text()
    match = re.search(r'^version\s*=\s*"([^"]+)"', text, re.MULTILINE)
    assert match, "Could not find version in pyproject.toml"
    assert byzantine_secretary.__version__ == match.group(1)
