#!/usr/bin/env python3
"""Regenerate the bundled synthetic fixture under fixtures/synthetic_small.

The fixture is exactly what `mtlhouse generate` writes for the stored
generator settings, so tests can assert byte-equality after regeneration.
"""

import json
import sys
import tempfile
from pathlib import Path

from mtlhouse.cli import main

REPO = Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO / "fixtures" / "synthetic_small"

GENERATOR_SETTINGS = {
    "n_tasks": 5,
    "n_features": 10,
    "samples_per_task_per_month": 10,
    "months": 10,
    "shared_support_size": 4,
    "coefficient_noise": 0.05,
    "observation_noise": 0.1,
    "seed": 20240214,
}


def run() -> int:
    config = {
        "data": {"synthetic": GENERATOR_SETTINGS},
        "task_definitions": ["region:SA3"],
        "methods": [{"kind": "ols"}],
        "out_dir": str(FIXTURE_DIR),
    }
    with tempfile.TemporaryDirectory() as tmp:
        config_path = Path(tmp) / "fixture_config.json"
        config_path.write_text(json.dumps(config))
        return main(["generate", "--config", str(config_path)])


if __name__ == "__main__":
    sys.exit(run())
