"""Python front end to the tiled NUCA manycore simulator."""

import json

from . import _core
from ._core import (
    ConfigError,
    SimulationFault,
    UsageError,
    VerificationError,
    case_config,
    csv_header,
)

NUM_CASES = _core.NUM_CASES

__all__ = [
    "NUM_CASES",
    "ConfigError",
    "SimulationFault",
    "UsageError",
    "VerificationError",
    "baseline",
    "case_config",
    "csv_header",
    "run",
    "speedup",
    "sweep",
]


def _params_text(params):
    if params is None:
        return ""
    if isinstance(params, str):
        return params
    return "".join(f"{key} = {_format_value(value)}\n" for key, value in params.items())


def _format_value(value):
    if isinstance(value, bool):
        return "on" if value else "off"
    return str(value)


def run(case_id, *, workload="mergesort", n=1 << 20, threads=64, reps=1, seed=1,
        striping=None, caches=True, intermediate_step=False, params=None):
    """Runs one case and returns its report row as a dict.

    ``params`` is either key=value text or a dict of parameter-file keys.
    """
    text = _core.run_json(case_id, workload, n, threads, reps, seed, intermediate_step,
                          _params_text(params), striping, caches)
    return json.loads(text)[0]


def baseline(*, workload="mergesort", n=1 << 20, reps=1, seed=1, params=None):
    """Single-thread cycles under case 1 policies."""
    return _core.baseline(workload, n, reps, seed, _params_text(params))


def speedup(row, base_cycles):
    cycles = row["total_cycles"]
    if cycles == 0:
        raise ZeroDivisionError("row has zero total_cycles")
    return base_cycles / cycles


def sweep(axis, values, case_id, *, workload="mergesort", n=1 << 20, threads=64, reps=1,
          seed=1, params=None, jobs=0):
    """One row per value of ``axis`` (size, threads, reps or striping)."""
    text = _core.sweep_json(axis, [_format_value(v) for v in values], case_id, workload, n,
                            threads, reps, seed, _params_text(params), jobs)
    return json.loads(text)
