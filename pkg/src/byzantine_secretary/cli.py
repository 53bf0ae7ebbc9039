"""CLI entry point for byzantine-secretary.

Usage:
    bsec <module> <command> [--param=value ...]
    bsec gen --family F --n N --seed S --out f.json [--family-param=value ...]
    bsec run --instance f.json --algo A --trials T --seed S --out r.csv
    bsec run --config exp.json
    bsec oracle --instance f.json [--kind=knapsack --K=40]
    bsec report --in r.csv --format md|csv

Examples:
    bsec gen --family lower_bound --n 8 --num_reds 3 --out lb.json
    bsec run --family pure_green --n 100 --algo dynkin --trials 200000
    bsec single_item logstar_schedule --n=1000000
    bsec multi_select knapsack_params --n=2000 --K=400 --desk

Exit codes: 0 ok, 2 configuration error, 3 oracle failure, 1 anything else.
"""

import argparse
import itertools
import json
import logging
import os
import sys

# Registry of modules → commands → params (lazy-loaded)
_REGISTRY = {
    "model": {
        "validate_instance": {"required": ["instance"]},
        "compute_benchmark": {"required": ["instance"], "optional": ["kind", "r", "K"]},
        "discretize_time": {"required": ["t", "n"]},
        "realize_stream": {"required": ["instance"], "optional": ["seed", "discretize"]},
    },
    "single_item": {
        "logstar_schedule": {"required": ["n"]},
        "posterior_second_max": {"required": ["instance"], "optional": ["seed", "checkpoint", "state"]},
        "two_blue_exact": {"required": ["instance"]},
        "good_input_probability": {"optional": ["N", "states", "seed"]},
    },
    "multi_select": {
        "knapsack_params": {"required": ["n", "K"], "optional": ["epsilon", "delta", "c", "H", "K_floor", "desk"]},
    },
    "matroids": {
        "check_oracle": {"required": ["oracle"], "optional": ["instance", "ground"]},
    },
    "adversaries": {
        "list_families": {},
        "generate_family": {"required": ["family", "n"], "optional": ["seed", "out", "params"]},
    },
    "harness": {
        "run": {
            "optional": [
                "algo",
                "config",
                "instance",
                "family",
                "n",
                "trials",
                "seed",
                "payoff",
                "discretize",
                "resample",
                "family_params",
                "label",
                "audit",
                "workers",
                "out",
            ]
        },
        "report": {"required": ["input"], "optional": ["format", "out"]},
        "n_guess": {"optional": ["draws", "seed"]},
        "estimate_n": {"required": ["instance"], "optional": ["seed"]},
        "list_algorithms": {},
    },
}

# Top-level verbs → (module, command)
_VERBS = {
    "gen": ("adversaries", "generate_family"),
    "run": ("harness", "run"),
    "oracle": ("model", "compute_benchmark"),
    "report": ("harness", "report"),
}

# Commands that forward unknown flags (algorithm or family params)
_OPEN_COMMANDS = {("harness", "run"), ("adversaries", "generate_family")}

# Params that should be parsed as bool
_BOOL_PARAMS = {
    "discretize",
    "desk",
    "resample",
    "audit",
    "gmax_above_reds",
}

# Params that should be parsed as int
_INT_PARAMS = {
    "n",
    "N",
    "seed",
    "trials",
    "r",
    "checkpoint",
    "state",
    "states",
    "draws",
    "ground",
    "workers",
    "num_reds",
    "count",
    "easy_interval",
    "parts",
    "capacity",
    "spikes",
}

# Params that should be parsed as float
_FLOAT_PARAMS = {
    "t",
    "K",
    "epsilon",
    "delta",
    "c",
    "H",
    "K_floor",
    "reject_prob",
    "ratio",
    "size",
}

# Flags handled by argparse itself
_GLOBAL_FLAGS = {"--version", "-h", "--help"}

# Flag spellings that differ from the command's keyword
_ALIASES = {"in": "input"}

_EXIT_BY_CODE = {
    "CONFIG_ERROR": 2,
    "UNKNOWN_ALGORITHM": 2,
    "INVALID_INSTANCE": 2,
    "ORACLE_FAILURE": 3,
    "ORACLE_INCONSISTENT": 3,
}


def _cli_error(message, *, error_code=None, hint=None, exit_code=2):
    """Print error as JSON to stdout (for scripts) and plain text to stderr (for humans), then exit."""
    payload = {"status": False, "data": None, "message": message}
    if error_code:
        payload["error_code"] = error_code
    if hint:
        payload["hint"] = hint
    print(json.dumps(payload, indent=2))
    print(f"Error: {message}", file=sys.stderr)
    sys.exit(exit_code)


def _load_module(name):
    """Lazy-import a byzantine_secretary subpackage."""
    if name == "model":
        from byzantine_secretary import model

        return model
    elif name == "single_item":
        from byzantine_secretary import single_item

        return single_item
    elif name == "multi_select":
        from byzantine_secretary import multi_select

        return multi_select
    elif name == "matroids":
        from byzantine_secretary import matroids

        return matroids
    elif name == "adversaries":
        from byzantine_secretary import adversaries

        return adversaries
    elif name == "harness":
        from byzantine_secretary import harness

        return harness
    else:
        raise ValueError(f"Unknown module '{name}'. Available: {', '.join(_REGISTRY.keys())}")


def _parse_value(key, value):
    """Convert CLI string values to appropriate Python types."""
    if key in _BOOL_PARAMS:
        if isinstance(value, bool):
            return value
        return value.lower() in ("true", "1", "yes", "")
    if key in _INT_PARAMS:
        return int(value)
    if key in _FLOAT_PARAMS:
        return float(value)
    return value


def _parse_params(remaining):
    """Parse ``--key=value``, ``--key value`` and bare ``--flag`` tokens."""
    kwargs = {}
    i = 0
    while i < len(remaining):
        arg = remaining[i]
        i += 1
        if not arg.startswith("--"):
            raise ValueError(f"unexpected argument {arg!r}")
        arg = arg[2:]
        if "=" in arg:
            key, value = arg.split("=", 1)
        else:
            key = arg
            nxt = remaining[i] if i < len(remaining) else None
            key_norm = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
            if key_norm not in _BOOL_PARAMS and nxt is not None and not nxt.startswith("--"):
                value = nxt
                i += 1
            else:
                value = True
        key = key.replace("-", "_")
        key = _ALIASES.get(key, key)
        kwargs[key] = _parse_value(key, value)
    return kwargs


def _param_type(name):
    """Return JSON Schema type string for a parameter based on known sets."""
    if name in _BOOL_PARAMS:
        return "boolean"
    if name in _INT_PARAMS:
        return "integer"
    if name in _FLOAT_PARAMS:
        return "number"
    return "string"


def _generate_schema(module_name):
    """JSON Schema tool definitions for a module, described by the command docstrings."""
    commands = _REGISTRY[module_name]
    module = _load_module(module_name)
    tools = []
    for cmd_name, cmd_info in commands.items():
        required = cmd_info.get("required", [])
        optional = cmd_info.get("optional", [])
        func = getattr(module, cmd_name, None)
        doc = func.__doc__.strip().split("\n")[0] if func is not None and func.__doc__ else f"{cmd_name} command"
        tools.append(
            {
                "name": f"{module_name}_{cmd_name}",
                "command": cmd_name,
                "description": doc,
                "parameters": {
                    "type": "object",
                    "properties": {p: {"type": _param_type(p)} for p in required + optional},
                    "required": required,
                },
            }
        )

    from byzantine_secretary import __version__

    return {"module": module_name, "version": __version__, "tools": tools}


def _configure_logging():
    level = os.environ.get("BSEC_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _split_open_params(module_name, command_name, kwargs):
    """For gen, fold family-specific flags into ``params``."""
    if (module_name, command_name) != ("adversaries", "generate_family"):
        return kwargs
    info = _REGISTRY[module_name][command_name]
    known = set(info.get("required", [])) | set(info.get("optional", []))
    extra = {k: kwargs.pop(k) for k in list(kwargs) if k not in known}
    if extra:
        params = kwargs.get("params") or {}
        if isinstance(params, str):
            params = json.loads(params)
        kwargs["params"] = {**params, **extra}
    return kwargs


def main():
    parser = argparse.ArgumentParser(
        prog="bsec",
        description="Byzantine secretary simulator: instance generators, online selection algorithms and Monte Carlo experiments.",
    )
    parser.add_argument(
        "module",
        nargs="?",
        help="Verb (gen, run, oracle, report) or module: model, single_item, multi_select, matroids, adversaries, harness",
    )
    parser.add_argument("command", nargs="?", help="Command name (e.g., logstar_schedule)")
    parser.add_argument("--version", action="store_true", help="Show version")

    # Leading bare words are module and command; everything after them is a --key=value param
    argv = sys.argv[1:]
    lead = list(itertools.takewhile(lambda a: not a.startswith("-"), argv))[:2]
    rest = argv[len(lead):]
    args, _ = parser.parse_known_args(lead + [a for a in rest if a in _GLOBAL_FLAGS])
    remaining = [a for a in rest if a not in _GLOBAL_FLAGS]
    _configure_logging()

    if args.version:
        from byzantine_secretary import __version__

        print(f"byzantine-secretary {__version__}")
        return

    if not args.module:
        parser.print_help()
        print("\nVerbs:")
        for verb, (mod, cmd) in _VERBS.items():
            print(f"  {verb}: {mod} {cmd}")
        print("\nAvailable modules:")
        for mod_name, commands in _REGISTRY.items():
            print(f"  {mod_name}: {', '.join(commands.keys())}")
        return

    # Reserved "catalog" command: return all available modules
    if args.module == "catalog":
        from byzantine_secretary import __version__

        catalog = {
            "version": __version__,
            "modules": list(_REGISTRY.keys()),
            "verbs": list(_VERBS.keys()),
        }
        print(json.dumps(catalog, indent=2))
        return

    if args.module in _VERBS:
        module_name, command_name = _VERBS[args.module]
        if args.command:
            remaining = [args.command, *remaining]
    else:
        module_name, command_name = args.module, args.command
        if module_name not in _REGISTRY:
            _cli_error(f"Unknown module '{module_name}'. Available: {', '.join(_REGISTRY.keys())}")

        if not command_name:
            # Show commands for this module
            print(f"Commands for '{module_name}':")
            for cmd_name, cmd_info in _REGISTRY[module_name].items():
                required = cmd_info.get("required", [])
                optional = cmd_info.get("optional", [])
                parts = [f"--{p}=<value>" for p in required]
                parts += [f"[--{p}=<value>]" for p in optional]
                print(f"  {cmd_name} {' '.join(parts)}")
            return

        # Reserved "schema" command: generate JSON Schema tool definitions
        if command_name == "schema":
            print(json.dumps(_generate_schema(module_name), indent=2))
            return

        if command_name not in _REGISTRY[module_name]:
            _cli_error(
                f"Unknown command '{command_name}' for module '{module_name}'. "
                f"Available: {', '.join(_REGISTRY[module_name].keys())}"
            )

    try:
        kwargs = _parse_params(remaining)
        kwargs = _split_open_params(module_name, command_name, kwargs)
    except ValueError as e:
        _cli_error(f"Malformed params: {e}", error_code="CONFIG_ERROR")

    # Check required params
    cmd_info = _REGISTRY[module_name][command_name]
    required = cmd_info.get("required", [])
    missing = [p for p in required if p not in kwargs]
    if missing:
        _cli_error(
            f"Missing required params: {', '.join('--' + p for p in missing)}. "
            f"Run 'bsec {module_name}' to see usage.",
            error_code="CONFIG_ERROR",
        )
    if (module_name, command_name) not in _OPEN_COMMANDS:
        allowed = set(required) | set(cmd_info.get("optional", []))
        unknown = sorted(set(kwargs) - allowed)
        if unknown:
            _cli_error(
                f"Unknown params: {', '.join('--' + p for p in unknown)}. Run 'bsec {module_name}' to see usage.",
                error_code="CONFIG_ERROR",
            )

    module = _load_module(module_name)
    func = getattr(module, command_name, None)
    if not func:
        _cli_error(f"Function '{command_name}' not found in module '{module_name}'", exit_code=1)

    try:
        result = func(**kwargs)
    except TypeError as e:
        _cli_error(f"{e}. Hint: check parameter names. Run 'bsec {module_name}' to see usage.")
    except Exception as e:
        print(json.dumps({"status": False, "data": None, "message": str(e)}, indent=2))
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)

    print(json.dumps(result, indent=2, default=str, ensure_ascii=False))
    if isinstance(result, dict) and result.get("status") is False:
        code = (result.get("data") or {}).get("error_code")
        print(f"Error: {result.get('message')}", file=sys.stderr)
        sys.exit(_EXIT_BY_CODE.get(code, 1))


if __name__ == "__main__":
    main()
