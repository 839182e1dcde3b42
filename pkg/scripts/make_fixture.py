"""Regenerate the bundled 200-insider synthetic trades CSV.

175 background insiders trade at random open days; 5 planted groups of 5
trade together. Usage: python3 scripts/make_fixture.py [--out PATH]
"""

import argparse
import logging
from pathlib import Path

from insidernet.ingest import write_events_csv
from insidernet.synthetic import PlantedConfig, planted_cliques

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "insidernet" / "data" / "fixture_trades.csv"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--seed", type=int, default=PlantedConfig.seed)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    ds = planted_cliques(PlantedConfig(seed=args.seed))
    write_events_csv(ds.events, args.out)
    logging.info("%d events, %d insiders, %d planted edges -> %s",
                 len(ds.events), len(ds.insiders), len(ds.planted_edges), args.out)


if __name__ == "__main__":
    main()
