import logging
import sys

try:
    # Helps show ANSI colors on Windows terminals
    import colorama  # type: ignore
    colorama_available = True
except Exception:
    colorama_available = False

from dotenv import load_dotenv

from index_coding.cli.arguments import build_parser
from index_coding.cli.handlers import run_command


class ColoredFormatter(logging.Formatter):
    COLORS = {
        'DEBUG': '\x1b[36m',    # Cyan
        'INFO': '\x1b[32m',     # Green
        'WARNING': '\x1b[33m',  # Yellow
        'ERROR': '\x1b[31m',    # Red
        'CRITICAL': '\x1b[41m', # Red background
    }
    RESET = '\x1b[0m'

    def format(self, record: logging.LogRecord) -> str:
        level = record.levelname
        color = self.COLORS.get(level, '')
        reset = self.RESET if color else ''
        # [12:34:56] [INFO] Message
        base = logging.Formatter(fmt="%(asctime)s [%(levelname)s] %(message)s", datefmt="%H:%M:%S")
        msg = base.format(record)
        if color:
            # Color only the [LEVEL] part
            msg = msg.replace(f"[{level}]", f"{color}[{level}]{reset}")
        return msg


def setup_logging(verbose: bool = False) -> None:
    if colorama_available:
        try:
            colorama.just_fix_windows_console()
        except Exception:
            pass
    level = logging.DEBUG if verbose else logging.INFO
    root = logging.getLogger()
    root.setLevel(level)
    # Clean existing handlers to avoid duplicate logs
    for h in list(root.handlers):
        root.removeHandler(h)
    ch = logging.StreamHandler(sys.stderr)
    ch.setLevel(level)
    ch.setFormatter(ColoredFormatter())
    root.addHandler(ch)


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    return run_command(args)


if __name__ == "__main__":
    sys.exit(main())
