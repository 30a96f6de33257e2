import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Configure logging
logger = logging.getLogger("RydSAT")
logger.setLevel(logging.DEBUG)

# Console handler with INFO level; stdout carries CLI output
console_handler = logging.StreamHandler(sys.stderr)
console_handler.setLevel(logging.INFO)
console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
logger.addHandler(console_handler)

_sidecar: Optional[logging.FileHandler] = None


def attach_sidecar(path: Path) -> logging.FileHandler:
    """Send DEBUG records to a sidecar log file next to the run artifacts"""
    global _sidecar
    path = Path(path)
    if _sidecar is not None:
        if Path(_sidecar.baseFilename) == path.resolve():
            return _sidecar
        detach_sidecar()

    path.parent.mkdir(parents=True, exist_ok=True)
    file_handler = logging.FileHandler(path)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(file_handler)
    _sidecar = file_handler
    return file_handler


def detach_sidecar() -> None:
    global _sidecar
    if _sidecar is None:
        return
    logger.removeHandler(_sidecar)
    _sidecar.close()
    _sidecar = None


def set_console_level(level: int) -> None:
    console_handler.setLevel(level)


@contextmanager
def stage_timer(stage: str) -> Iterator[None]:
    start = time.perf_counter()
    logger.debug("stage %s started", stage)
    try:
        yield
    finally:
        logger.info("stage %s finished in %.3f s", stage, time.perf_counter() - start)
