#!/usr/bin/env python3
"""Run the acceptance suite and show one PASS/FAIL line per criterion."""
import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parents[1]
cmd = [sys.executable, "-m", "pytest", str(root / "tests" / "test_acceptance.py"), "-v", *sys.argv[1:]]
sys.exit(subprocess.call(cmd, cwd=root))
