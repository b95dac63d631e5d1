"""
Artifact writing for CLI commands.

Every artifact is written to `<path>.partial` first and renamed into place
only after the writer returns; a failed writer leaves the `.partial` file
behind and never the final name. Each artifact gets a sibling
`<path>.manifest.json` recording inputs (with content digests), seed, config
hash, the library defaults in force and library versions. Manifests carry
no timestamps.

Public API:
- write_artifact(path, writer) -> path
- write_manifest(path, cfg, extra) -> manifest path
- library_versions() -> dict
- library_defaults() -> dict of per-package tunables
- file_digest(path) -> hex sha256
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Any, Callable, Dict, Optional

import numpy as np
import pandas as pd
import scipy
import skimage

from src.benchmark import config as bench_config
from src.cli.config import RunConfig, config_hash
from src.decoder import config as dec_config
from src.metrics import config as met_config
from src.sdfdata import config as sdf_config

PARTIAL_SUFFIX = ".partial"
MANIFEST_SUFFIX = ".manifest.json"


def library_versions() -> Dict[str, str]:
    return {
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "scikit-image": skimage.__version__,
        "scipy": scipy.__version__,
    }


def library_defaults() -> Dict[str, Dict[str, Any]]:
    return {
        "benchmark": bench_config.get_defaults(),
        "decoder": dec_config.get_defaults(),
        "metrics": met_config.get_defaults(),
        "sdfdata": sdf_config.get_defaults(),
    }


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_artifact(path: str, writer: Callable[[str], Any]) -> str:
    partial = path + PARTIAL_SUFFIX
    writer(partial)
    os.replace(partial, path)
    return path


def write_manifest(path: str, cfg: RunConfig, extra: Optional[Dict[str, Any]] = None) -> str:
    manifest = {
        "artifact": os.path.basename(path),
        "command": cfg.command,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg),
        "config": {k: v for k, v in cfg.to_dict().items() if k != "threads"},
        "inputs": {k: {"path": p, "sha256": file_digest(p)} for k, p in sorted(cfg.inputs().items())},
        "defaults": library_defaults(),
        "versions": library_versions(),
    }
    if extra:
        manifest.update(extra)
    target = path + MANIFEST_SUFFIX

    def dump(p: str):
        with open(p, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")

    return write_artifact(target, dump)
