"""Launcher command-line synthesis for Cray aprun, IBM jsrun, geopmlaunch-wrapped
aprun, and a plain local-shell target for workstation runs.

The rendered argv strings follow the production command shapes exactly; tests
hold them to byte equality, so token order and spelling here are load-bearing.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass

LAUNCHER_KINDS = (
    "theta_aprun",
    "summit_jsrun_gpu",
    "summit_jsrun_cpu",
    "geopm_aprun",
    "local_shell",
)


class LaunchError(ValueError):
    """Invalid thread count or launcher specification."""


@dataclass(frozen=True)
class LaunchSpec:
    """Target launcher plus the fixed allocation shape for every trial."""

    kind: str
    nodes: int = 1
    ranks_per_node: int = 1
    cores_per_rank: int = 42
    exe_template: str = "{exe}"

    def __post_init__(self) -> None:
        if self.kind not in LAUNCHER_KINDS:
            raise LaunchError(f"unknown launcher kind {self.kind!r}")
        if self.nodes < 1 or self.ranks_per_node < 1:
            raise LaunchError("nodes and ranks_per_node must be >= 1")
        if "{exe}" not in self.exe_template:
            raise LaunchError("exe_template must contain an {exe} placeholder")


@dataclass(frozen=True)
class LaunchPlan:
    """A fully rendered command: argv tokens, environment to apply, and the
    report file the run is expected to leave behind (geopm only)."""

    argv: tuple[str, ...]
    env: dict[str, str]
    report: str | None = None

    def command_line(self) -> str:
        return " ".join(self.argv)


def theta_depth_map(n_threads: int) -> tuple[int, int]:
    """Map a thread count to aprun's (-d depth, -j hw threads per core).

    The SMT level steps at 64/128/192 thread boundaries; within a band the
    count must divide evenly so that d*j == n_threads with j in {1,2,3,4}.
    """
    n = n_threads
    if n < 1 or n > 256:
        raise LaunchError(f"thread count {n} outside supported range [1, 256]")
    if n <= 64:
        return n, 1
    if n <= 128:
        if n % 2:
            raise LaunchError(f"thread count {n} in (64,128] must be divisible by 2")
        return n // 2, 2
    if n <= 192:
        if n % 3:
            raise LaunchError(f"thread count {n} in (128,192] must be divisible by 3")
        return n // 3, 3
    if n % 4:
        raise LaunchError(f"thread count {n} in (192,256] must be divisible by 4")
    return n // 4, 4


def _summit_bpacked(n_threads: int) -> int:
    if n_threads < 4 or n_threads % 4:
        raise LaunchError(f"thread count {n_threads} must be a positive multiple of 4 for jsrun")
    return n_threads // 4


def validate_thread_count(kind: str, n_threads: int) -> None:
    """Reject thread counts the target launcher cannot place (used both at
    space-definition time and again when a plan is built)."""
    if kind == "theta_aprun" or kind == "geopm_aprun":
        theta_depth_map(n_threads)
    elif kind in ("summit_jsrun_gpu", "summit_jsrun_cpu"):
        _summit_bpacked(n_threads)


def build_plan(
    spec: LaunchSpec,
    n_threads: int,
    env: dict[str, str],
    exe: str,
    report: str | None = None,
) -> LaunchPlan:
    """Render the launcher argv for one evaluation. Pure: identical inputs
    yield identical argv and env."""
    exe_tokens = shlex.split(spec.exe_template.format(exe=exe))
    total_ranks = spec.nodes * spec.ranks_per_node

    if spec.kind == "theta_aprun":
        d, j = theta_depth_map(n_threads)
        argv = [
            "aprun", "-n", str(total_ranks), "-N", str(spec.ranks_per_node),
            "-cc", "depth", "-d", str(d), "-j", str(j), *exe_tokens,
        ]
        return LaunchPlan(tuple(argv), dict(env))

    if spec.kind == "geopm_aprun":
        if not report:
            raise LaunchError("geopm_aprun requires a report filename")
        theta_depth_map(n_threads)  # affinity is delegated to geopmlaunch, count still validated
        argv = [
            "geopmlaunch", "aprun", "-n", str(total_ranks), "-N", str(spec.ranks_per_node),
            "--geopm-ctl=pthread", "--geopm-report", report, "--", *exe_tokens,
        ]
        return LaunchPlan(tuple(argv), dict(env), report=report)

    if spec.kind in ("summit_jsrun_gpu", "summit_jsrun_cpu"):
        packed = _summit_bpacked(n_threads)
        per_rank = ["-a", "6", "-g", "6"] if spec.kind == "summit_jsrun_gpu" else ["-a", "1", "-g", "0"]
        argv = [
            "jsrun", "-n", str(spec.nodes), *per_rank,
            "-c", str(spec.cores_per_rank), f"-bpacked:{packed}", "-dpacked", *exe_tokens,
        ]
        return LaunchPlan(tuple(argv), dict(env))

    if spec.kind == "local_shell":
        return LaunchPlan(tuple(exe_tokens), dict(env))

    raise LaunchError(f"unknown launcher kind {spec.kind!r}")
