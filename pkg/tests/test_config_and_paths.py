import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from evikit.evicore import EVIProblem, Operator, PhiClass, evi_gap_linear
from evikit.linsolve import project_polytope
from evikit.polytope import Polytope
from evikit.solvers import solve_eah

SRC = str(Path(__file__).resolve().parents[1] / "src")


def test_central_cut_ellipsoid_also_verifies():
    seg = Polytope(A=[[1.0], [-1.0]], b=[1.0, 1.0], name="segment")
    prob = EVIProblem(polytope=seg, operator=Operator.sign(seg),
                      phi=PhiClass(variant="linear"), epsilon=0.01, name="sign")
    rep = solve_eah(prob, deep_cuts=False)
    assert rep.gap_linear_raw <= 0.01 + 1e-9
    assert rep.config_echo["deep_cuts"] is False
    deep = solve_eah(prob, deep_cuts=True)
    assert deep.iterations <= rep.iterations  # deep cuts never lose ground
    recheck = evi_gap_linear(prob, rep.solution)
    assert abs(recheck.raw - rep.gap_linear_raw) <= 1e-9


def test_projection_with_equality_rows():
    # project onto the slice {x + y = 1} of the unit square
    A = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
    b = np.array([1.0, 1.0, 0.0, 0.0, 1.0])
    senses = ["<="] * 4 + ["="]
    z = project_polytope(np.array([0.9, 0.8]), A, b, senses=senses)
    # analytic projection onto the line segment
    p = np.array([0.9, 0.8])
    want = p - (p.sum() - 1.0) / 2.0 * np.ones(2)
    np.testing.assert_allclose(z, want, atol=1e-8)


def test_projection_large_instance_dual_path():
    # a 700-gon approximation of the unit disc exceeds the active-set size
    # threshold and takes the dual coordinate-ascent route
    angles = np.linspace(0.0, 2.0 * np.pi, 700, endpoint=False)
    A = np.column_stack([np.cos(angles), np.sin(angles)])
    b = np.ones(700)
    z = project_polytope(np.array([2.0, 0.0]), A, b)
    np.testing.assert_allclose(z, [1.0, 0.0], atol=1e-5)
    assert np.max(A @ z - b) <= 1e-9 * 2


def test_tolerance_scale_environment_knob():
    code = (
        "from evikit.config import ToleranceConfig; "
        "c = ToleranceConfig.default(); print(repr(c.feas), repr(c.proj))"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True,
        env={"PYTHONPATH": SRC, "EVIKIT_TOL_SCALE": "100", "PATH": "/usr/bin:/bin"})
    feas, proj = out.stdout.split()
    assert float(feas) == pytest.approx(1e-7)
    assert float(proj) == pytest.approx(1e-5)


def test_kernel_backend_env_forcing():
    code = "from evikit import _kernels; print(_kernels.BACKEND)"
    for forced in ("python", "auto"):
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True,
            env={"PYTHONPATH": SRC, "EVIKIT_KERNEL": forced, "PATH": "/usr/bin:/bin"})
        backend = out.stdout.strip()
        if forced == "python":
            assert backend == "python"
        else:
            assert backend in ("c", "python")
