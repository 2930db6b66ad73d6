"""Configuration: context rules, gas coefficients, latency model, bands.

Defaults below are the committed calibration artifacts; a YAML file with
the same structure can override any subset (`load_config`).
"""

from __future__ import annotations

import copy

import yaml

DEFAULT_CONFIG: dict = {
    "rules": [
        {"event": "accident", "region": "*", "time": "*", "flag": True},
        {"event": "emergency", "region": "*", "time": "*", "flag": True},
        {"event": "weather", "region": "*", "time": "*", "flag": False},
        {"event": "traffic", "region": "*", "time": "22-6", "flag": True},
        {"event": "traffic", "region": "*", "time": "*", "flag": False},
    ],
    "policy_templates": {
        "strict": "Role=TrafficPolice AND Region={region}",
        "minimal": "Role=Analyst",
    },
    "cross_region_events": ["accident"],
    "gas": {
        "price_gwei": 20,
        "calls": {
            "evaluatePolicy": {"base": 3000, "per_byte": 20, "per_index": 0},
            "uploadCiphertext": {"base": 21000, "per_byte": 80, "per_index": 30000},
            "revokeAttribute": {"base": 21000, "per_byte": 80, "per_index": 20000},
            "publishCrossRegion": {"base": 21000, "per_byte": 40, "per_index": 15000},
            "search": {"base": 5000, "per_byte": 25, "per_index": 0},
            "registerParams": {"base": 21000, "per_byte": 80, "per_index": 10000},
        },
    },
    "chain": {
        "block_time_s": 2.0,
        "link_latency_ms": {"mean": 4.0, "jitter": 1.0},
    },
    "latency": {
        "arrival_window_ms": 1.0,
        "link_ms": {"mean": 8.0, "jitter": 0.4},
        "functions": {
            "evaluatePolicy": {"fixed_ms": 4.0, "service_ms": 0.6},
            "uploadCiphertext": {"fixed_ms": 30.0, "service_ms": 2.9},
            "revokeAttribute": {"fixed_ms": 24.0, "service_ms": 1.1},
        },
    },
    "workload": {
        "user_counts": [5, 10, 15, 20],
        "iterations": 10,
        "upload_payload_bytes": 256,
        "upload_policy_rows": 2,
    },
    "bands": {
        "upload_ratio": [0.30, 0.47],
        "revoke_ratio": [0.80, 1.22],
        "degradation_pct": [40.0, 70.0],
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | None = None) -> dict:
    """Defaults merged with an optional YAML override file."""
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    with open(path, "r", encoding="utf-8") as handle:
        override = yaml.safe_load(handle) or {}
    if not isinstance(override, dict):
        raise ValueError("config file must hold a mapping")
    return _merge(DEFAULT_CONFIG, override)


def dump_config(cfg: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(cfg, handle, sort_keys=True)
