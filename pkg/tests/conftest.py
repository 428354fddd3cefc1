from __future__ import annotations

import pytest

from softhand_sim.hand_model import calibrated_bpi_config, default_bpi_config


@pytest.fixture(scope="session")
def config():
    return default_bpi_config()


@pytest.fixture(scope="session")
def calibrated():
    return calibrated_bpi_config()


@pytest.fixture(scope="session")
def cli_calibration(tmp_path_factory):
    """One end-to-end ``calibrate`` run shared by the CLI and acceptance tests (about 40 s)."""
    from softhand_sim.cli import main

    out = tmp_path_factory.mktemp("calibrate")
    code = main(["calibrate", "--out", str(out)])
    return code, out
