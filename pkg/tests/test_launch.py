from __future__ import annotations

import pytest

from hpctune.launch import LaunchError, LaunchSpec, build_plan, theta_depth_map


class TestThetaDepthMap:
    def test_paper_listed_cases(self):
        assert theta_depth_map(64) == (64, 1)
        assert theta_depth_map(96) == (48, 2)
        assert theta_depth_map(256) == (64, 4)

    def test_exhaustive_accepted_range(self):
        for n in range(4, 257):
            accepted = (
                n <= 64
                or (64 < n <= 128 and n % 2 == 0)
                or (128 < n <= 192 and n % 3 == 0)
                or (192 < n <= 256 and n % 4 == 0)
            )
            if accepted:
                d, j = theta_depth_map(n)
                assert d * j == n
                assert 1 <= j <= 4
                if n <= 64:
                    assert j == 1
                elif n <= 128:
                    assert j == 2
                elif n <= 192:
                    assert j == 3
                else:
                    assert j == 4
            else:
                with pytest.raises(LaunchError):
                    theta_depth_map(n)

    def test_boundaries_exact(self):
        assert theta_depth_map(64)[1] == 1
        assert theta_depth_map(66)[1] == 2
        assert theta_depth_map(128)[1] == 2
        assert theta_depth_map(129)[1] == 3
        assert theta_depth_map(192)[1] == 3
        assert theta_depth_map(196)[1] == 4

    def test_rejects_out_of_range(self):
        for n in (0, -4, 257, 1000):
            with pytest.raises(LaunchError):
                theta_depth_map(n)


THETA = LaunchSpec(kind="theta_aprun", nodes=4096, ranks_per_node=1, exe_template="{exe} -m event")
GPU = LaunchSpec(kind="summit_jsrun_gpu", nodes=4096, ranks_per_node=6, exe_template="{exe} -m event")
CPU = LaunchSpec(kind="summit_jsrun_cpu", nodes=4096, ranks_per_node=1, exe_template="{exe} -m event")
GEOPM = LaunchSpec(kind="geopm_aprun", nodes=4096, ranks_per_node=1, exe_template="{exe} -m event")


class TestGoldenCommandLines:
    def test_aprun_64_threads(self):
        plan = build_plan(THETA, 64, {}, "./XSBench")
        assert plan.command_line() == "aprun -n 4096 -N 1 -cc depth -d 64 -j 1 ./XSBench -m event"

    def test_aprun_96_threads(self):
        plan = build_plan(THETA, 96, {}, "$filename")
        assert plan.command_line() == "aprun -n 4096 -N 1 -cc depth -d 48 -j 2 $filename -m event"

    def test_jsrun_gpu_168_threads(self):
        plan = build_plan(GPU, 168, {}, "../XSBench")
        assert plan.command_line() == "jsrun -n 4096 -a 6 -g 6 -c 42 -bpacked:42 -dpacked ../XSBench -m event"

    def test_jsrun_cpu_84_threads(self):
        plan = build_plan(CPU, 84, {}, "$filename")
        assert plan.command_line() == "jsrun -n 4096 -a 1 -g 0 -c 42 -bpacked:21 -dpacked $filename -m event"

    def test_geopm_wrapper(self):
        plan = build_plan(GEOPM, 64, {"OMP_NUM_THREADS": "64"}, "../XSBench", report="gm.report")
        assert plan.command_line() == (
            "geopmlaunch aprun -n 4096 -N 1 --geopm-ctl=pthread --geopm-report gm.report -- ../XSBench -m event"
        )
        assert plan.env == {"OMP_NUM_THREADS": "64"}
        assert plan.report == "gm.report"


def test_build_plan_is_pure():
    a = build_plan(THETA, 96, {"OMP_PLACES": "cores"}, "./app")
    b = build_plan(THETA, 96, {"OMP_PLACES": "cores"}, "./app")
    assert a.argv == b.argv
    assert a.env == b.env


def test_jsrun_rejects_threads_not_divisible_by_four():
    with pytest.raises(LaunchError):
        build_plan(GPU, 42, {}, "./app")
    with pytest.raises(LaunchError):
        build_plan(CPU, 85, {}, "./app")


def test_theta_rejects_invalid_threads():
    with pytest.raises(LaunchError):
        build_plan(THETA, 97, {}, "./app")


def test_geopm_requires_report_name():
    with pytest.raises(LaunchError):
        build_plan(GEOPM, 64, {}, "./app")


def test_local_shell_passthrough():
    spec = LaunchSpec(kind="local_shell", exe_template="python3 {exe} --flag")
    plan = build_plan(spec, 1, {"X": "1"}, "app.py")
    assert plan.argv == ("python3", "app.py", "--flag")
    assert plan.env == {"X": "1"}


def test_spec_validation():
    with pytest.raises(LaunchError):
        LaunchSpec(kind="slurm")
    with pytest.raises(LaunchError):
        LaunchSpec(kind="theta_aprun", nodes=0)
    with pytest.raises(LaunchError):
        LaunchSpec(kind="theta_aprun", exe_template="no placeholder")
