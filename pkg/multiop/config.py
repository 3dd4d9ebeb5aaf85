import logging
import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Numerical defaults shared by every command.

    Explicit arguments win over environment variables, which win over the
    built-in defaults.
    """

    def __init__(
        self,
        bits: Optional[int] = None,
        max_bits: Optional[int] = None,
        dps: Optional[int] = None,
        grid: Optional[int] = None,
        tol: Optional[float] = None,
        workers: Optional[int] = None,
        timeout: Optional[int] = None,
        log_level: Optional[str] = None,
        isolation_depth: Optional[int] = None,
    ):
        self.bits = bits if bits is not None else int(os.getenv("MULTIOP_BITS", "128"))
        self.max_bits = max_bits if max_bits is not None else int(os.getenv("MULTIOP_MAX_BITS", "4096"))
        self.dps = dps if dps is not None else int(os.getenv("MULTIOP_DPS", "30"))
        self.grid = grid if grid is not None else int(os.getenv("MULTIOP_GRID", "2048"))
        self.tol = tol if tol is not None else float(os.getenv("MULTIOP_TOL", "1e-12"))
        self.workers = workers if workers is not None else int(os.getenv("MULTIOP_WORKERS", "1"))
        self.timeout = timeout if timeout is not None else int(os.getenv("MULTIOP_TIMEOUT", "0"))
        self.log_level = (log_level or os.getenv("MULTIOP_LOG_LEVEL", "INFO")).upper()
        self.isolation_depth = (
            isolation_depth
            if isolation_depth is not None
            else int(os.getenv("MULTIOP_ISOLATION_DEPTH", "400"))
        )

    def configure_logging(self):
        """Install the console handler used by the CLI"""
        logging.basicConfig(
            level=getattr(logging, self.log_level, logging.INFO),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )


settings = Settings()
