"""Imputation of acoustic-telemetry fish tracks by a directed random walk.

Typical use::

    from trackimpute import ingest, bootstrap

    receivers = ingest.parse_receivers("receivers.csv")
    table = {r.id: r for r in receivers}
    specs = ingest.segments_for_fish(ingest.parse_detections("detections.csv", table), table, "18453")
    result = bootstrap.run_bootstrap(specs, bootstrap.PriorConfig(), 5000, 0.9, seed=1)
"""

__version__ = "0.1.0"
