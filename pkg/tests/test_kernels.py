import subprocess
import sys

import numpy as np
import pytest

from dskg import kernels
from dskg.errors import StepSizeUnderflow

ARGS = (3, 0.5, 3.0, 1.0, 3.25, 0.0, 1e-10)


def test_python_backend_always_available():
    assert "python" in kernels.available_backends()


@pytest.mark.skipif(len(kernels.available_backends()) < 2, reason="compiled core not built")
def test_backends_agree():
    mu2 = np.array([0.0, 1.0, 37.0, 400.0, 2500.0])
    times = np.linspace(1.0, 4.0, 13)
    a = kernels.propagate_steps(mu2, times, *ARGS, backend="compiled")
    b = kernels.propagate_steps(mu2, times, *ARGS, backend="python")
    assert a.shape == b.shape == (mu2.size, times.size - 1, 4)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-13)


def test_thread_count_does_not_change_results(monkeypatch):
    mu2 = np.linspace(0.0, 300.0, 17)
    times = np.linspace(1.0, 2.0, 5)
    monkeypatch.setenv("DSKG_THREADS", "1")
    one = kernels.propagate_steps(mu2, times, *ARGS)
    monkeypatch.setenv("DSKG_THREADS", "4")
    assert kernels.thread_count() == 4
    four = kernels.propagate_steps(mu2, times, *ARGS)
    assert np.array_equal(one, four)


def test_thread_count_parsing(monkeypatch):
    monkeypatch.setenv("DSKG_THREADS", "0")
    assert kernels.thread_count() == 1
    monkeypatch.setenv("DSKG_THREADS", "junk")
    assert kernels.thread_count() == 1


def test_backend_env_selects_fallback():
    code = "from dskg import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"DSKG_BACKEND": "python", "PATH": ""},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    bad = subprocess.run([sys.executable, "-c", code], env={"DSKG_BACKEND": "fortran", "PATH": ""},
                         capture_output=True, text=True)
    assert bad.returncode != 0 and "DSKG_BACKEND" in bad.stderr


@pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="compiled core not built")
def test_step_budget_exhaustion_compiled():
    with pytest.raises(StepSizeUnderflow):
        kernels.propagate_steps(np.array([1e16]), np.array([1.0, 2.0]), *ARGS[:-1], 1e-12,
                                backend="compiled")


def test_step_budget_exhaustion_python(monkeypatch):
    from dskg import _dopri

    monkeypatch.setattr(_dopri, "MAX_STEPS", 200)
    with pytest.raises(StepSizeUnderflow):
        kernels.propagate_steps(np.array([1e8]), np.array([1.0, 2.0]), *ARGS, backend="python")
