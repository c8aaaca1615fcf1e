"""Isolated execution of untrusted generated scripts.

Isolation is an OS process boundary plus an in-child audit-hook guard:
writes outside the private work directory, socket use, and reads of
non-allowlisted environment variables are blocked or reported as
violations, never propagated as exceptions to the caller. Wall-clock
timeout and an output byte cap bound resource use; a CPU rlimit is applied
where the platform exposes one.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import SandboxUnavailable

logger = logging.getLogger(__name__)

VIOLATION_KINDS = ("timeout", "output_cap", "fs_escape", "network_attempt", "env_access")

DEFAULT_DENYLIST = [
    "subprocess",
    "os.system",
    "os.popen",
    "os.exec",
    "os.fork",
    "os.kill",
    "ctypes",
    "import socket",
    "socket.socket",
    "__import__",
    "eval(",
    "exec(",
    "shutil.rmtree",
    "pty.",
]


@dataclass
class SandboxPolicy:
    wall_timeout_ms: int = 10_000
    max_output_bytes: int = 1_048_576
    work_dir_only: bool = True
    network_allowed: bool = False
    env_allowlist: list[str] = field(default_factory=list)
    denylist_tokens: list[str] = field(default_factory=lambda: list(DEFAULT_DENYLIST))

    def __post_init__(self) -> None:
        if self.wall_timeout_ms <= 0:
            raise ValueError("wall_timeout_ms must be positive")
        if self.max_output_bytes <= 0:
            raise ValueError("max_output_bytes must be positive")


@dataclass
class SandboxResult:
    exit_ok: bool
    stdout: str
    stderr: str
    duration_ms: int
    violations: list[str] = field(default_factory=list)

    def to_payload(self) -> dict[str, Any]:
        return {
            "exit_ok": self.exit_ok,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "duration_ms": self.duration_ms,
            "violations": list(self.violations),
        }


@dataclass(frozen=True)
class ScanFinding:
    token: str
    line: int
    snippet: str


# The guard runs inside the child before any untrusted code. It reports
# violations to a side-channel file (opened before the hook is installed)
# and blocks filesystem escapes and network use by raising from the hook.
_RUNNER_TEMPLATE = """\
import os, sys

WORK_DIR = {work_dir!r}
NETWORK_ALLOWED = {network_allowed!r}
WORK_DIR_ONLY = {work_dir_only!r}
ENV_ALLOWLIST = frozenset({env_allowlist!r})

_violations = open(os.path.join(WORK_DIR, "_violations.log"), "w")

def _report(kind, detail):
    _violations.write(kind + "\\t" + str(detail)[:300] + "\\n")
    _violations.flush()

def _inside(path):
    try:
        resolved = os.path.realpath(os.path.join(WORK_DIR, os.fspath(path)))
    except (TypeError, ValueError):
        return True
    return resolved == WORK_DIR or resolved.startswith(WORK_DIR + os.sep)

_WRITE_MARKERS = ("w", "a", "x", "+")
_FS_EVENTS = {{"os.remove": 0, "os.unlink": 0, "os.rename": 1, "os.mkdir": 0,
              "os.rmdir": 0, "shutil.rmtree": 0, "os.link": 1, "os.symlink": 1}}

def _guard(event, args):
    if event == "open":
        path, mode = args[0], args[1]
        if isinstance(path, int):
            return
        mode = mode or "r"
        if WORK_DIR_ONLY and any(m in mode for m in _WRITE_MARKERS) and not _inside(path):
            _report("fs_escape", "open " + str(path) + " mode " + mode)
            raise RuntimeError("sandbox: write outside work directory blocked")
    elif event in _FS_EVENTS:
        path = args[_FS_EVENTS[event]]
        if WORK_DIR_ONLY and not isinstance(path, int) and not _inside(path):
            _report("fs_escape", event + " " + str(path))
            raise RuntimeError("sandbox: filesystem mutation outside work directory blocked")
    elif event.startswith("socket.") and event != "socket.__new__":
        if not NETWORK_ALLOWED:
            _report("network_attempt", event)
            raise RuntimeError("sandbox: network access blocked")

class _EnvProxy(dict):
    def __getitem__(self, key):
        self._note(key)
        return dict.__getitem__(self, key)
    def get(self, key, default=None):
        self._note(key)
        return dict.get(self, key, default)
    def __contains__(self, key):
        self._note(key)
        return dict.__contains__(self, key)
    @staticmethod
    def _note(key):
        if isinstance(key, str) and key not in ENV_ALLOWLIST:
            _report("env_access", key)

os.environ = _EnvProxy(os.environ)
sys.addaudithook(_guard)

import runpy
runpy.run_path(os.path.join(WORK_DIR, "_tool_script.py"), run_name="__main__")
"""


def static_scan(script_text: str, policy: SandboxPolicy) -> list[ScanFinding]:
    """Lexical denylist scan; tokens inside string literals are reported too."""
    findings: list[ScanFinding] = []
    for line_number, line in enumerate(script_text.splitlines(), start=1):
        for token in policy.denylist_tokens:
            if token in line:
                findings.append(ScanFinding(token=token, line=line_number, snippet=line.strip()))
    return findings


def _cpu_limit(timeout_ms: int):
    """preexec hook applying a CPU rlimit; None where unsupported."""
    try:
        import resource
    except ImportError:  # non-POSIX platform
        logger.warning("resource limits unavailable; relying on wall clock and output caps")
        return None

    seconds = max(1, timeout_ms // 1000 + 1)

    def apply() -> None:
        os.setsid()
        try:
            resource.setrlimit(resource.RLIMIT_CPU, (seconds, seconds + 1))
        except (ValueError, OSError):
            pass

    return apply


def execute_script(
    script_text: str,
    args: dict[str, Any] | None,
    policy: SandboxPolicy | None = None,
    interpreter: list[str] | None = None,
) -> SandboxResult:
    """Run a script in a fresh work directory under the policy's limits.

    The script receives ``args`` as one JSON document on stdin and must
    print its envelope to stdout. Script failures are encoded in the
    result; only infrastructure faults raise SandboxUnavailable.
    """
    policy = policy or SandboxPolicy()
    interpreter = interpreter or [sys.executable, "-I"]
    work_dir = Path(tempfile.mkdtemp(prefix="kubepilot-sandbox-"))
    try:
        real_work_dir = str(work_dir.resolve())
        (work_dir / "_tool_script.py").write_text(script_text)
        runner = _RUNNER_TEMPLATE.format(
            work_dir=real_work_dir,
            network_allowed=policy.network_allowed,
            work_dir_only=policy.work_dir_only,
            env_allowlist=tuple(policy.env_allowlist),
        )
        (work_dir / "_runner.py").write_text(runner)

        child_env = {
            key: os.environ[key] for key in policy.env_allowlist if key in os.environ
        }

        started = time.monotonic()
        try:
            process = subprocess.Popen(
                [*interpreter, str(work_dir / "_runner.py")],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                cwd=real_work_dir,
                env=child_env,
                preexec_fn=_cpu_limit(policy.wall_timeout_ms),
            )
        except (OSError, ValueError) as exc:
            raise SandboxUnavailable(f"cannot spawn sandbox interpreter: {exc}") from exc

        stdin_payload = json.dumps(args or {}).encode()
        timed_out = False
        try:
            stdout_raw, stderr_raw = process.communicate(
                stdin_payload, timeout=policy.wall_timeout_ms / 1000.0
            )
        except subprocess.TimeoutExpired:
            timed_out = True
            try:
                os.killpg(process.pid, signal.SIGKILL)
            except (ProcessLookupError, PermissionError, OSError):
                process.kill()
            stdout_raw, stderr_raw = process.communicate()
        duration_ms = int((time.monotonic() - started) * 1000)

        violations: list[str] = []
        if timed_out:
            violations.append("timeout")
        if len(stdout_raw) > policy.max_output_bytes:
            stdout_raw = stdout_raw[: policy.max_output_bytes]
            violations.append("output_cap")
        for line in _read_violation_log(work_dir):
            kind = line.split("\t", 1)[0]
            if kind in VIOLATION_KINDS and kind not in violations:
                violations.append(kind)

        return SandboxResult(
            exit_ok=process.returncode == 0 and not timed_out,
            stdout=stdout_raw.decode("utf-8", errors="replace"),
            stderr=stderr_raw.decode("utf-8", errors="replace")[-10_000:],
            duration_ms=duration_ms,
            violations=violations,
        )
    finally:
        shutil.rmtree(work_dir, ignore_errors=True)


def _read_violation_log(work_dir: Path) -> list[str]:
    log_path = work_dir / "_violations.log"
    if not log_path.exists():
        return []
    return [line for line in log_path.read_text(errors="replace").splitlines() if line]
