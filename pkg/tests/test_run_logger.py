from logging import getLogger

from app import setup_logging
from utils.run_logger import send_check


def test_checks_reach_the_console_and_the_log_file_once(tmp_path, capsys):
    setup_logging(str(tmp_path))
    try:
        send_check("demo_check", True, "ok")
        send_check("other_check", False)
        err = capsys.readouterr().err
    finally:
        for handler in getLogger().handlers:
            handler.close()
        getLogger().handlers.clear()
    assert err.count("PASS demo_check") == 1
    assert err.count("FAIL other_check") == 1
    log = (tmp_path / "log.txt").read_text()
    assert log.count("PASS demo_check - ok") == 1
    assert "[ERROR] - FAIL other_check" in log
