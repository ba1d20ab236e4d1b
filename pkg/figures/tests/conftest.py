import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    """A real output directory produced through the public CLI only."""
    out = tmp_path_factory.mktemp("dataset") / "out"
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "ilclab",
            "casestudy",
            "--samples",
            "60",
            "--out",
            str(out),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return out
