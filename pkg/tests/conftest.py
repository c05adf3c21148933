import re
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from featgrind import FeatureMatrix

ACCEPTANCE_TITLES = {
    1: "scalar codec payload ratio 32.0 at k=1, fits 10^4 x 128 in < 1 s",
    2: "scalar codec log-domain error within span/2^k, zero violations",
    3: "vector codec compression arithmetic (46.5 / 228.6 / byte-aligned 32.0)",
    4: "vector codec objective optimal vs brute force, assignments exact",
    5: "one-hot rows reconstruct losslessly under both metrics",
    6: "sampled factor estimator agrees with exact within 2% on 20 graphs",
    7: "mean factor strictly decreasing with depth on a 5000-node graph",
    8: "sparsifier factor ordering and density trend over 5 seeds",
    9: "simulator byte/Amdahl/cache exactness and worker scaling shape",
    10: "every CLI subcommand is bit-identical across same-seed reruns",
}

_ACCEPTANCE_RE = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter):
    outcomes = {}
    for category, flag in (("passed", True), ("failed", False),
                           ("error", False)):
        for report in terminalreporter.stats.get(category, []):
            match = _ACCEPTANCE_RE.search(report.nodeid)
            if match:
                num = int(match.group(1))
                outcomes[num] = outcomes.get(num, True) and flag
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(outcomes):
        word = "PASS" if outcomes[num] else "FAIL"
        title = ACCEPTANCE_TITLES.get(num, "?")
        terminalreporter.write_line(f"[{word}] criterion {num}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(0xFEA7)


@pytest.fixture
def lognormal_features(rng):
    mag = np.exp(rng.normal(0.0, 2.0, size=(200, 16)))
    sign = rng.integers(0, 2, size=(200, 16)) * 2 - 1
    return FeatureMatrix((mag * sign).astype(np.float32))
