"""
liectl - Utilities Module
Provides logging, artifact writing, number formatting and parallel fan-out helpers
"""

import os
import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Any, Optional, Callable, Iterable, Sequence

import numpy as np

from config import Config


# =============================================================================
# Logging and Monitoring Setup
# =============================================================================

def setup_logging(log_level: str = 'INFO', log_file: Optional[str] = Config.LOG_FILE) -> logging.Logger:
    """Set up the liectl logger with rotating file and console handlers"""

    # Create logger
    logger = logging.getLogger('liectl')
    logger.setLevel(getattr(logging, log_level.upper()))

    # Prevent duplicate handlers
    if logger.handlers:
        return logger

    # Create formatters
    detailed_formatter = logging.Formatter(
        '%(asctime)s | %(name)s | %(levelname)s | %(module)s:%(funcName)s:%(lineno)d | %(message)s'
    )

    simple_formatter = logging.Formatter(
        '%(asctime)s | %(levelname)s | %(message)s'
    )

    # File handler with rotation
    if log_file:
        from logging.handlers import RotatingFileHandler
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=Config.MAX_LOG_SIZE,
            backupCount=Config.LOG_BACKUP_COUNT
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(detailed_formatter)
        logger.addHandler(file_handler)

    # Console handler; stderr keeps stdout free for results
    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, log_level.upper()))
    console_handler.setFormatter(simple_formatter)
    logger.addHandler(console_handler)

    return logger


def log_action(action: str, module: str, level: str = 'INFO',
               additional_data: Optional[Dict[str, Any]] = None) -> None:
    """Log toolkit actions with structured context"""

    logger = logging.getLogger('liectl')

    log_data = {
        'action': action,
        'module': module,
    }
    if additional_data:
        log_data.update(additional_data)

    message = f"{module.upper()}: {action}"

    log_level = getattr(logging, level.upper(), logging.INFO)
    logger.log(log_level, message, extra={'log_data': log_data})


# =============================================================================
# Number Formatting
# =============================================================================

def format_number(value: Any, digits: int = Config.CSV_DIGITS) -> str:
    """Format a value for CSV output; floats keep `digits` significant digits"""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{digits}g}"
    return str(value)


def metadata_line(command: str, seed: Any = None, dt: Any = None) -> str:
    """Header line carried by every numeric artifact"""
    dt_text = 'none' if dt is None else repr(float(dt))
    return f"# liectl {command} seed={seed if seed is not None else 0} dt={dt_text}"


# =============================================================================
# Artifact Writing
# =============================================================================

def ensure_directory(path: str) -> str:
    """Create a directory if needed and return it"""
    os.makedirs(path, exist_ok=True)
    return path


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]],
              meta: Optional[Dict[str, Any]] = None) -> str:
    """Write a CSV artifact with the metadata header line and LF line endings"""
    directory = os.path.dirname(path)
    if directory:
        ensure_directory(directory)

    meta = meta or {}
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(metadata_line(meta.get('command', 'run'), meta.get('seed'), meta.get('dt')) + '\n')
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])

    log_action(f"Wrote {path}", "utils", level='DEBUG')
    return path


def write_json(path: str, payload: Dict[str, Any], meta: Optional[Dict[str, Any]] = None) -> str:
    """Write a JSON artifact; the metadata travels in a `meta` object"""
    from models import _jsonable

    directory = os.path.dirname(path)
    if directory:
        ensure_directory(directory)

    document = dict(_jsonable(payload))
    if meta is not None:
        document['meta'] = {
            'command': meta.get('command', 'run'),
            'seed': meta.get('seed', 0),
            'dt': meta.get('dt'),
        }
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(document, indent=2, sort_keys=True, allow_nan=True) + '\n')

    log_action(f"Wrote {path}", "utils", level='DEBUG')
    return path


# =============================================================================
# Parallel Fan-out
# =============================================================================

def parallel_map(func: Callable[[Any], Any], items: Iterable[Any],
                 max_workers: Optional[int] = None) -> List[Any]:
    """Apply func to items on a thread pool; results keep input order"""
    items = list(items)
    workers = min(max_workers or Config.THREADS, len(items)) if items else 1
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


# =============================================================================
# Environment Checks
# =============================================================================

def validate_system_requirements() -> Dict[str, bool]:
    """Validate that runtime requirements are met"""

    requirements = {
        'python_version': False,
        'required_modules': False,
        'output_directory_writable': False,
    }

    import sys
    if sys.version_info >= (3, 8):
        requirements['python_version'] = True

    try:
        import scipy  # noqa: F401
        import tabulate  # noqa: F401
        requirements['required_modules'] = True
    except ImportError:
        pass

    try:
        ensure_directory(Config.OUTPUT_DIR)
        requirements['output_directory_writable'] = os.access(Config.OUTPUT_DIR, os.W_OK)
    except OSError:
        pass

    return requirements
