"""Co-trading networks of corporate insiders from SEC Form 4 filings.

Pipeline: ingest trades, score within-firm insider pairs with a weekly
kernel, keep pairs passing the edge filters, compare the graph against
randomised null ensembles, then rank insiders by centrality and egonet
anomaly scores.
"""

from importlib import resources

__version__ = "0.1.0"


def fixture_path():
    """Path of the bundled 200-insider synthetic trades CSV."""
    return resources.files(__name__) / "data" / "fixture_trades.csv"
