from typing import Optional
from logging import FileHandler, getLogger

from rich.console import Console

LOGGER = getLogger(__name__)

console = Console(stderr=True)

STYLES = {"INFO": "green", "WARNING": "yellow", "ERROR": "bold red"}
LEVELS = {"INFO": 20, "WARNING": 30, "ERROR": 40}


def _mirror_to_files(message: str, level: int):
    """Hand the record to the file handlers only; the console already shows it."""
    record = LOGGER.makeRecord(LOGGER.name, level, __file__, 0, message, None, None)
    for handler in getLogger().handlers:
        if isinstance(handler, FileHandler) and level >= handler.level:
            handler.handle(record)


def send_log(message: str, level: str = "INFO"):
    """
    Announce a scenario check on the console and mirror it to the log file.

    Args:
        message: The message to show
        level: Log level (INFO, WARNING, ERROR)
    """
    try:
        style = STYLES.get(level, "white")
        console.print(f"[{style}]\\[{level}][/{style}] {message}", highlight=False)
    except Exception as e:
        LOGGER.error(f"Failed to print run log: {str(e)}")
    _mirror_to_files(message, LEVELS.get(level, 20))


def send_info(message):
    send_log(message, "INFO")


def send_warning(message):
    send_log(message, "WARNING")


def send_error(message, exception: Optional[Exception] = None):
    error_message = message
    if exception:
        error_message += f" ({type(exception).__name__}: {str(exception)})"
    send_log(error_message, "ERROR")


def send_check(name: str, passed: bool, detail: str = ""):
    """One acceptance check: PASS lines as info, FAIL lines as errors."""
    line = f"{'PASS' if passed else 'FAIL'} {name}" + (f" - {detail}" if detail else "")
    if passed:
        send_info(line)
    else:
        send_error(line)
