"""Optional cross-check against an external SPIN binary.

Everything here is inert unless the ``SPIN_BIN`` environment variable names
a SPIN executable; callers test :func:`spin_available` first.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from typing import Optional


def spin_binary() -> Optional[str]:
    path = os.environ.get("SPIN_BIN")
    if not path:
        return None
    return shutil.which(path) or (path if os.path.exists(path) else None)


def spin_available() -> bool:
    return spin_binary() is not None


@dataclass
class SpinResult:
    ok: bool
    errors: int
    output: str


def _run(cmd: list, cwd: str, timeout: int = 600) -> subprocess.CompletedProcess:
    return subprocess.run(cmd, cwd=cwd, capture_output=True, text=True, timeout=timeout)


def syntax_check(pml_text: str, library_text: str, include_name: str = "utils.pr") -> SpinResult:
    """Run ``spin -a`` on the model; ok when SPIN generates a verifier."""
    spin = spin_binary()
    if spin is None:
        raise RuntimeError("SPIN_BIN is not set")
    with tempfile.TemporaryDirectory() as tmp:
        with open(os.path.join(tmp, include_name), "w") as fh:
            fh.write(library_text)
        with open(os.path.join(tmp, "model.pml"), "w") as fh:
            fh.write(pml_text)
        r = _run([spin, "-a", "model.pml"], tmp)
        ok = r.returncode == 0 and os.path.exists(os.path.join(tmp, "pan.c"))
        return SpinResult(ok, 0 if ok else 1, r.stdout + r.stderr)


def verify(pml_text: str, library_text: str, ltl_text: str = "", prop: Optional[str] = None,
           include_name: str = "utils.pr", cc: str = "cc") -> SpinResult:
    """Build and run ``pan``: safety (invalid end states) without ``prop``,
    acceptance cycles for the named ``ltl`` block otherwise."""
    spin = spin_binary()
    if spin is None:
        raise RuntimeError("SPIN_BIN is not set")
    with tempfile.TemporaryDirectory() as tmp:
        with open(os.path.join(tmp, include_name), "w") as fh:
            fh.write(library_text)
        with open(os.path.join(tmp, "model.pml"), "w") as fh:
            fh.write(pml_text + ("\n" + ltl_text if prop else ""))
        out = ""
        r = _run([spin, "-a", "model.pml"], tmp)
        out += r.stdout + r.stderr
        if r.returncode != 0:
            return SpinResult(False, 1, out)
        flags = ["-DNOREDUCE"] + ([] if prop else ["-DSAFETY"])
        r = _run([cc, "-O2", *flags, "-o", "pan", "pan.c"], tmp)
        out += r.stdout + r.stderr
        if r.returncode != 0:
            return SpinResult(False, 1, out)
        args = ["./pan", "-m1000000"] + (["-a", "-N", prop] if prop else [])
        r = _run(args, tmp)
        out += r.stdout + r.stderr
        m = re.search(r"errors:\s*(\d+)", r.stdout)
        errors = int(m.group(1)) if m else 1
        return SpinResult(True, errors, out)
