import logging
import sys

_FORMAT = "[%(name)s] %(message)s"


def get_logger(tag: str) -> logging.Logger:
    """Named component logger; messages render as `[TAG] message` once configured."""
    return logging.getLogger(tag)


def configure(verbose: bool = False, stream=None) -> None:
    """Install the tagged console handler on the root logger (CLI only)."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_zulf", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(_FORMAT))
    handler._zulf = True
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
