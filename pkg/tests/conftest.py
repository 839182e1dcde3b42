import sys
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from insidernet import fixture_path
from insidernet.ingest import InsiderFirmLog, load_logs
from insidernet.network import CoTradeGraph, Edge

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"
D0 = date(2020, 1, 6)  # a Monday
HORIZON_START = date(2014, 1, 1)


def days(*offsets, start=D0):
    return [start + timedelta(days=o) for o in offsets]


def make_log(insider, acq=(), dis=(), firm="F", start=D0):
    return InsiderFirmLog(insider, firm, sorted(set(days(*acq, start=start))), sorted(set(days(*dis, start=start))))


def make_graph(weighted_edges, firm="F", population=None):
    """Graph from ``(u, v, w)`` or ``(u, v, w, firm)`` tuples."""
    edges, aff = {}, {}
    for item in weighted_edges:
        u, v, w = item[:3]
        f = item[3] if len(item) > 3 else firm
        key = tuple(sorted((u, v)))
        e = edges.get(key)
        if e is None:
            edges[key] = Edge(key[0], key[1], w, f, {f: w})
        else:
            e.contexts[f] = w
            if w > e.weight:
                e.weight, e.firm = w, f
        aff.setdefault(u, set()).add(f)
        aff.setdefault(v, set()).add(f)
    return CoTradeGraph(
        edges=dict(sorted(edges.items())),
        affiliations={k: frozenset(v) for k, v in aff.items()},
        population=len(aff) if population is None else population,
    )


def random_logs(n_pairs, seed=0, max_trades=20):
    """Insider-firm logs with random tenures, including some one-day tenures."""
    rng = np.random.default_rng(seed)
    logs = []
    span = (date(2024, 12, 31) - HORIZON_START).days
    for i in range(n_pairs):
        firm = f"F{i % 37:02d}"
        start = int(rng.integers(0, span))
        length = 0 if i % 25 == 0 else int(rng.integers(0, min(1500, span - start) + 1))
        count = int(rng.integers(1, max_trades + 1))
        offs = sorted(set(rng.integers(start, start + length + 1, size=count).tolist()))
        acq = [HORIZON_START + timedelta(days=o) for o in offs[::2]]
        dis = [HORIZON_START + timedelta(days=o) for o in offs[1::2]]
        logs.append(InsiderFirmLog(f"I{i:04d}", firm, acq, dis))
    return logs


@pytest.fixture(scope="session")
def fixture_csv():
    return Path(str(fixture_path()))


@pytest.fixture(scope="session")
def fixture_logs(fixture_csv):
    return load_logs(fixture_csv)


# one line per acceptance criterion, printed after the run whatever the capture mode
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
