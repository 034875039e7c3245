"""Service layer: the FastAPI app and the operations it exposes.

The CLI calls the same runner functions in-process, so batch runs stay
reproducible without a server.
"""

from .runner import report_run, train_run
from .bench import bench_compression_run, bench_he_run

__all__ = ["bench_compression_run", "bench_he_run", "report_run", "train_run"]
