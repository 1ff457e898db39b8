import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from config import settings
from zulf_engine.errors import ConfigurationError
from zulf_engine.log import get_logger

log = get_logger("TABLES")

DATA_DIR = Path(__file__).resolve().parent


def search_path() -> List[Path]:
    """Directories searched for data tables, override directories first."""
    dirs: List[Path] = []
    raw = os.environ.get(settings.CONFIG_PATH_ENV, "")
    for part in raw.split(os.pathsep):
        if part.strip():
            dirs.append(Path(part.strip()))
    dirs.append(DATA_DIR)
    return dirs


def resolve_table(name: str, override: Optional[Union[str, Path]] = None) -> Path:
    if override is not None:
        path = Path(override)
        if not path.is_file():
            raise ConfigurationError(f"data table not found: {path}", key=str(path))
        return path
    for directory in search_path():
        candidate = directory / name
        if candidate.is_file():
            return candidate
    raise ConfigurationError(f"data table {name!r} not found on search path", key=name)


def load_table(name: str, override: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """Load a JSON table, dropping `_comment` keys."""
    path = resolve_table(name, override)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})", key=name) from exc
    log.debug(f"loaded {name} from {path}")
    return {k: v for k, v in raw.items() if not k.startswith("_")}


def covalent_radii(override=None) -> Dict[str, float]:
    return {el: float(r) for el, r in load_table("covalent_radii.json", override).items()}


def gyromagnetic_ratios(override=None) -> Dict[str, Dict[str, Any]]:
    return load_table("gyromagnetic_ratios.json", override)


def cost_ledger(override=None) -> Dict[str, Any]:
    return load_table("cost_ledger.json", override)
