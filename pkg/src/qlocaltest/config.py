"""Experiment specs for the command-line harness: defaults, validation, hashing."""

from __future__ import annotations

import copy
import hashlib
import json
from typing import Any

import numpy as np

from . import channels, compiler, testers, tomography

COMMANDS = ("verify", "schur-selftest", "tomo-iso", "tomo-channel", "dnorm")

TOLERANCES = {
    "channel_completeness": channels.COMPLETENESS_TOL,
    "kraus_rank": channels.RANK_TOL,
    "tester_psd": testers.PSD_TOL,
    "tester_normalization": testers.NORM_TOL,
    "pinv_rcond": testers.PINV_RCOND,
    "compiler_z_max": compiler.Z_MAX,
    "compiler_exact": compiler.EXACT_TOL,
    "schur": 1e-10,
    "power_decomposition": 1e-9,
    "twirl": 1e-10,
    "twirl_z_max": 5.0,
    "isometry": 1e-9,
    "contractivity": 1e-6,
    "seesaw_convergence": 1e-9,
}

CONSTANTS = {"c_copies": tomography.C_COPIES, "c_total": tomography.C_TOTAL}

ORACLE_MODEL = "eps = eps_max * Uniform[0,1], eps_max = c_copies * d / copies (modelling choice)"

DEFAULTS: dict[str, dict[str, Any]] = {
    "verify": {"n": 1, "d1": 2, "d2": 2, "r": 2, "outcomes": 3, "instances": 5,
               "mc_samples": 10000},
    "schur-selftest": {"cases": [[2, 2], [2, 3], [3, 2], [3, 4], [2, 4]],
                       "twirl_cases": [[2, 2], [3, 2]], "states": 20, "mc_samples": 20000},
    "tomo-iso": {"d1": 2, "d2": 4, "N_grid": [100, 1000, 10000, 100000], "trials": 30,
                 "eps": 0.25, "diamond": "exact", **CONSTANTS},
    "tomo-channel": {"d1": 2, "d2": 2, "r": 2, "N_grid": [1000, 10000], "trials": 10,
                     "eps": 0.25, "restarts": 32, "iters": 200, **CONSTANTS},
    "dnorm": {"channels": [], "restarts": 32, "iters": 200},
}


class SpecError(ValueError):
    """Malformed or inconsistent experiment spec (exit code 2)."""


def _positive_int(spec: dict, key: str) -> int:
    v = spec.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise SpecError(f"{key!r} must be a positive integer, got {v!r}")
    return v


def resolve(command: str, spec: dict | None = None, *, seed: int | None = None) -> dict:
    """Merge ``spec`` over the command defaults and validate the result."""
    if command not in COMMANDS:
        raise SpecError(f"unknown command {command!r}")
    spec = {} if spec is None else spec
    if not isinstance(spec, dict):
        raise SpecError("spec must be a JSON object")
    if "command" in spec and spec["command"] != command:
        raise SpecError(f"spec is for {spec['command']!r}, not {command!r}")
    unknown = set(spec) - set(DEFAULTS[command]) - {"command", "seed", "tolerances"}
    if unknown:
        raise SpecError(f"unknown spec fields: {sorted(unknown)}")
    out = copy.deepcopy(DEFAULTS[command])
    out.update({k: v for k, v in spec.items() if k not in ("tolerances",)})
    out["command"] = command
    if seed is not None:
        out["seed"] = seed
    out.setdefault("seed", 0)
    s = out["seed"]
    if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s < 2**64:
        raise SpecError(f"seed must be an unsigned 64-bit integer, got {s!r}")
    tol = dict(TOLERANCES)
    extra = spec.get("tolerances", {})
    if not isinstance(extra, dict) or set(extra) - set(TOLERANCES):
        raise SpecError(f"unknown tolerance keys: {sorted(set(extra) - set(TOLERANCES))}")
    tol.update(extra)
    out["tolerances"] = tol
    _validate(out)
    return out


def _validate(spec: dict):
    cmd = spec["command"]
    for key in ("n", "d1", "d2", "r", "outcomes", "instances", "mc_samples", "trials", "states",
                "restarts", "iters"):
        if key in spec:
            _positive_int(spec, key)
    if cmd == "verify" and spec["r"] * spec["d2"] < spec["d1"]:
        raise SpecError(f"need r*d2 >= d1, got r={spec['r']}, d2={spec['d2']}, d1={spec['d1']}")
    if cmd in ("tomo-iso",) and spec["d2"] < spec["d1"]:
        raise SpecError("an isometry needs d2 >= d1")
    if cmd == "tomo-channel" and spec["r"] * spec["d2"] < spec["d1"]:
        raise SpecError(f"need r*d2 >= d1, got r={spec['r']}, d2={spec['d2']}, d1={spec['d1']}")
    if "N_grid" in spec:
        grid = spec["N_grid"]
        if not isinstance(grid, list) or not grid or not all(
                isinstance(x, int) and not isinstance(x, bool) and x >= 1 for x in grid):
            raise SpecError("N_grid must be a non-empty list of positive integers")
    for key in ("c_copies", "c_total"):
        if key in spec and (not isinstance(spec[key], (int, float)) or isinstance(spec[key], bool)
                            or spec[key] <= 0):
            raise SpecError(f"{key} must be a positive number")
    if "eps" in spec and spec["eps"] is not None:
        if not isinstance(spec["eps"], (int, float)) or not 0 < spec["eps"] <= 2:
            raise SpecError("eps must be in (0, 2]")
    if cmd == "tomo-iso" and spec["diamond"] not in ("exact", "seesaw"):
        raise SpecError("diamond must be 'exact' or 'seesaw'")
    if cmd == "schur-selftest":
        for key in ("cases", "twirl_cases"):
            pairs = spec[key]
            if not isinstance(pairs, list) or not all(
                    isinstance(p, list) and len(p) == 2 and all(isinstance(x, int) and x >= 1 for x in p)
                    for p in pairs):
                raise SpecError(f"{key} must be a list of [n, d] pairs")
    if cmd == "dnorm":
        chs = spec["channels"]
        if not isinstance(chs, list) or len(chs) < 2:
            raise SpecError("dnorm needs a list of at least two channels (paths or inline objects)")


def spec_hash(spec: dict) -> str:
    return hashlib.sha256(json.dumps(spec, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def stream(master_seed: int, k: int) -> np.random.Generator:
    """RNG for task ``k``; independent of how tasks are scheduled."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, k]))
