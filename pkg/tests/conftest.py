import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tennis_momentum.ingest import write_match_csv  # noqa: E402
from tennis_momentum.synthetic import simulate_match, simulate_tournament  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"

# Filled by test_acceptance; echoed in the terminal summary so the
# criterion lines survive pytest's output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def match300():
    return simulate_match("synthetic-0300", "Ana Baker", "Cleo Diaz", n_points=300, seed=1)


@pytest.fixture(scope="session")
def tournament():
    return simulate_tournament("Carlos Test", n_matches=4, n_points=300, seed=1)


@pytest.fixture
def csv_file(tmp_path, match300):
    path = tmp_path / "match.csv"
    path.write_text(write_match_csv(match300), encoding="utf-8")
    return path


@pytest.fixture
def tournament_csv(tmp_path, tournament):
    path = tmp_path / "tournament.csv"
    path.write_text(write_match_csv(tournament), encoding="utf-8")
    return path
