import shutil
import subprocess
import sys

import pytest


def _run_cli(args):
    proc = subprocess.run([sys.executable, "-m", "clusterinit.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def smoke_corpus(tmp_path_factory):
    """Small rasterized corpus produced through the toolkit's public CLI."""
    root = tmp_path_factory.mktemp("corpus")
    _run_cli(["gen", "--count", "24", "--seed", "5", "--out", str(root / "data"),
              "--family", "gaussian_blobs", "--k-range", "2", "4",
              "--n-range", "20000", "28000", "--sigma-range", "1.3", "2.0",
              "--separation", "10", "--balance", "equal"])
    _run_cli(["raster", "--data", str(root / "data"), "--out", str(root / "frames")])
    return root / "frames"
