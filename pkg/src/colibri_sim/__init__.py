"""colibri-sim - queue-based LRwait/SCwait atomics on a simulated manycore."""

__version__ = "0.1.0"
