"""Deviation equations on spaces with affine connection and metric.

Thin wrapper over the compiled ``_lndev`` module. Scenarios are passed as
YAML text, the same format the ``lndev`` command-line tool reads.
"""

from ._lndev import (
    ContractError,
    NumericalError,
    ParseError,
    builtin_names,
    classify_builtin,
    compensation_setup,
    format_double,
    normalize_scenario,
    run_scenario,
    task_names,
)

__all__ = [
    "ContractError",
    "NumericalError",
    "ParseError",
    "builtin_names",
    "classify_builtin",
    "compensation_setup",
    "format_double",
    "normalize_scenario",
    "run_scenario",
    "task_names",
]
