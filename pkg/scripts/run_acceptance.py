"""Run the acceptance suite and print one PASS/FAIL line per criterion."""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
           str(ROOT / "tests" / "test_acceptance.py")]
    proc = subprocess.run(cmd, cwd=ROOT, capture_output=True, text=True)
    lines = [l for l in proc.stdout.splitlines() if l.startswith("[criterion")]
    for line in lines:
        print(line)
    print(f"{sum('PASS' in l for l in lines)}/{len(lines)} criteria pass")
    sys.exit(proc.returncode)
