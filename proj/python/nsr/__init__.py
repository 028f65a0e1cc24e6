"""Python access to the nsr core: validity arithmetic, grids, networks, certification."""

from ._core import (
    LipschitzConstants,
    Mlp,
    NsrError,
    System,
    builtin_system,
    builtin_system_names,
    certify,
    check_validity,
    config_hash,
    joint_count,
    load_mlp,
    make_mlp,
    nearest_center,
    precheck,
)

__all__ = [
    "LipschitzConstants",
    "Mlp",
    "NsrError",
    "System",
    "builtin_system",
    "builtin_system_names",
    "certify",
    "check_validity",
    "config_hash",
    "joint_count",
    "load_mlp",
    "make_mlp",
    "nearest_center",
    "precheck",
]
