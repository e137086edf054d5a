"""Cluster-based asynchronous SGD with approximate-agreement coupling.

The package has two execution engines for the same algorithms:

- ``asgd.sim``: an event-level simulator (one scheduler event per register
  operation, message delivery, or local step) with crash/partition injection,
  replayable traces, and audits.
- ``asgd.batch``: a vectorized ensemble driver that runs all seeds of a
  configuration at once, sampling schedule structure at round granularity.
  Used for the large statistical sweeps.

``asgd.harness`` estimates ensemble statistics, fits convergence rates, and
produces contraction and divergence reports; ``asgd.cli`` exposes the
``asgd run`` / ``asgd verify`` commands.
"""

__version__ = "0.1.0"
