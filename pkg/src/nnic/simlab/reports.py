"""Serialization of experiment results to JSON and CSV.

JSON files carry the full result (config echo, failures, runtime) under a
``schema_version`` key.  CSV files carry only the replicate-count-determined
numbers — no timings — so two runs with the same config and seed produce
byte-identical CSVs regardless of worker count.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from .experiments import BiasCurve, SelectionTable

__all__ = ["SCHEMA_VERSION", "result_to_dict", "write_json", "write_csv"]

SCHEMA_VERSION = 1


def _plain(value):
    """Recursively convert numpy scalars/arrays and dataclasses to JSON types."""
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return _plain(dataclasses.asdict(value))
    return value


def result_to_dict(result):
    """Dict form of a :class:`BiasCurve` or :class:`SelectionTable`."""
    out = _plain(dataclasses.asdict(result))
    out["schema_version"] = SCHEMA_VERSION
    out["kind"] = type(result).__name__
    out["incomplete"] = result.incomplete
    return out


def write_json(result, path):
    payload = result_to_dict(result) if dataclasses.is_dataclass(result) else _plain(result)
    if "schema_version" not in payload:
        payload["schema_version"] = SCHEMA_VERSION
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")


def _fmt(value):
    if value is None:
        return ""
    return repr(float(value))


def _bias_csv_lines(result):
    header = ["eps", "true_bias", "mean_bhat1", "sd_bhat1"]
    has_b2 = result.mean_bhat2 is not None
    if has_b2:
        header += ["mean_bhat2", "sd_bhat2"]
    lines = [",".join(header)]
    for i, eps in enumerate(result.eps):
        row = [
            _fmt(eps),
            _fmt(result.true_bias[i]),
            _fmt(result.mean_bhat1[i]),
            _fmt(result.sd_bhat1[i]),
        ]
        if has_b2:
            row += [_fmt(result.mean_bhat2[i]), _fmt(result.sd_bhat2[i])]
        lines.append(",".join(row))
    return lines


def _selection_csv_lines(result):
    header = ["label"]
    for crit in result.criteria:
        header += [f"{crit}_freq", f"{crit}_lo", f"{crit}_hi"]
    lines = [",".join(header)]
    for i, label in enumerate(result.labels):
        row = [label]
        for crit in result.criteria:
            low, high = result.ci[crit][i]
            row += [_fmt(result.frequency[crit][i]), _fmt(low), _fmt(high)]
        lines.append(",".join(row))
    return lines


def write_csv(result, path):
    """Write the tabular core of a result; raises TypeError for other objects."""
    if isinstance(result, BiasCurve):
        lines = _bias_csv_lines(result)
    elif isinstance(result, SelectionTable):
        lines = _selection_csv_lines(result)
    else:
        raise TypeError(f"no CSV form for {type(result).__name__}")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(lines) + "\n")
