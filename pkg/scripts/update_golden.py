"""Regenerate the CLI golden files under tests/golden from the command table in tests/test_cli.py."""

from __future__ import annotations

import contextlib
import io
import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from opdl.cli import main  # noqa: E402
from tests.test_cli import GOLDEN, GOLDEN_DIR, golden_text  # noqa: E402


def run(argv: list[str]) -> tuple[str, int]:
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = main(argv)
    return out.getvalue(), code


if __name__ == "__main__":
    os.chdir(ROOT)
    GOLDEN_DIR.mkdir(exist_ok=True)
    for name, argv in GOLDEN.items():
        text, code = run(argv)
        (GOLDEN_DIR / f"{name}.txt").write_text(golden_text(argv, text, code))
        print(f"{name}: exit {code}")
