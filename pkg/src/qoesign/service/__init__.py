"""HTTP service layer: coordinator API, standalone QTSP nodes, key storage."""

from qoesign.service.config import (
    ENV_VAR,
    ServiceConfig,
    ServiceMode,
    config_from_dict,
    ensure_data_dir,
    load_config,
)
from qoesign.service.keystore import Keystore

__all__ = [
    "ENV_VAR",
    "Keystore",
    "ServiceConfig",
    "ServiceMode",
    "config_from_dict",
    "ensure_data_dir",
    "load_config",
]
