"""Cross-checks between the compiled kernels and the pure-NumPy fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from nxbar import _backend, _kernels_py

compiled = pytest.importorskip("nxbar._kernels", reason="compiled kernels not built")


def test_active_backend_reported():
    assert _backend.backend_name() in ("compiled", "python")


def test_env_override_selects_python_backend():
    out = subprocess.run(
        [sys.executable, "-c", "from nxbar import _backend; print(_backend.backend_name())"],
        env={**os.environ, "NXBAR_BACKEND": "python"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


class TestQuantizeParity:
    def test_sse_value_identical_semantics(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            w = rng.standard_normal(rng.integers(1, 40))
            a1 = float(rng.normal())
            d = float(rng.random())
            n = int(rng.integers(1, 9))
            a = compiled.sse_value(w, a1, d, n)
            b = _kernels_py.sse_value(w, a1, d, n)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-15)

    def test_assignment_identical(self):
        rng = np.random.default_rng(1)
        w = rng.standard_normal((6, 7))
        np.testing.assert_array_equal(
            compiled.assign_levels(w, -1.0, 0.4, 5), _kernels_py.assign_levels(w, -1.0, 0.4, 5)
        )
        np.testing.assert_array_equal(
            compiled.assign_levels(w, 0.0, 0.0, 3), _kernels_py.assign_levels(w, 0.0, 0.0, 3)
        )

    def test_fit_reaches_equal_quality(self):
        rng = np.random.default_rng(2)
        for n_states in (2, 4, 8):
            for _ in range(10):
                w = rng.standard_normal(16)
                _, _, sse_c, _ = compiled.quantize_fit(w, n_states)
                _, _, sse_p, _ = _kernels_py.quantize_fit(w, n_states)
                assert sse_c == pytest.approx(sse_p, rel=1e-7, abs=1e-10)

    def test_fit_special_cases_identical(self):
        w = np.full(9, 3.25)
        assert compiled.quantize_fit(w, 4) == _kernels_py.quantize_fit(w, 4)
        w = np.array([1.0, 5.0, 9.0])
        a1c, dc, sc, _ = compiled.quantize_fit(w, 1)
        a1p, dp, sp, _ = _kernels_py.quantize_fit(w, 1)
        assert (a1c, dc) == (a1p, dp)
        assert sc == pytest.approx(sp, rel=1e-12)


class TestTrialParity:
    def test_rmse_identical_on_shared_fit(self):
        # same (a1, d) into both kernels: only summation order may differ
        rng = np.random.default_rng(3)
        trials, m, n, n_states = 20, 8, 8, 4
        w = rng.standard_normal((trials, m * n))
        x = rng.random((trials, n))
        tiles = (m // 4) * (n // 4)
        sys_z = rng.standard_normal((trials, tiles, n_states))
        cell_z = rng.standard_normal((trials, tiles, 16, n_states))
        a1, d, _ = compiled.quantize_fit_batch(w, n_states)
        args = (w, x, a1, d, sys_z, cell_z, m, n, 4, 4, n_states,
                [0.0, 50.0, 120.0], [0.0, 80.0, 40.0], 9402.0, 9919.5, 5e-4, 0.0)
        a = compiled.mvm_rmse_multi(*args)
        b = _kernels_py.mvm_rmse_multi(*args)
        np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-14)

    def test_rmse_close_on_independent_fits(self):
        rng = np.random.default_rng(4)
        trials, m, n, n_states = 30, 4, 4, 4
        w = rng.standard_normal((trials, m * n))
        x = rng.random((trials, n))
        a1c, dc, _ = compiled.quantize_fit_batch(w, n_states)
        a1p, dp, _ = _kernels_py.quantize_fit_batch(w, n_states)
        common = (m, n, 4, 4, n_states, [0.0], [0.0], 9402.0, 9919.5, 5e-4, 0.0)
        a = compiled.mvm_rmse_multi(w, x, a1c, dc, None, None, *common)
        b = _kernels_py.mvm_rmse_multi(w, x, a1p, dp, None, None, *common)
        np.testing.assert_allclose(a, b, rtol=2e-5, atol=1e-7)

    def test_noise_free_path_accepts_none_arrays(self):
        rng = np.random.default_rng(5)
        w = rng.standard_normal((5, 16))
        x = rng.random((5, 4))
        a1, d, _ = compiled.quantize_fit_batch(w, 4)
        out = compiled.mvm_rmse_multi(w, x, a1, d, None, None, 4, 4, 4, 4, 4,
                                      [0.0], [0.0], 9402.0, 9919.5, 5e-4, 0.0)
        assert out.shape == (1, 5)

    def test_shape_validation(self):
        rng = np.random.default_rng(6)
        w = rng.standard_normal((2, 16))
        x = rng.random((2, 4))
        a1, d, _ = compiled.quantize_fit_batch(w, 4)
        with pytest.raises(ValueError):
            compiled.mvm_rmse_multi(w, x, a1, d, None, None, 5, 4, 4, 4, 4,
                                    [0.0], [0.0], 9402.0, 9919.5, 5e-4, 0.0)
        bad_sys = rng.standard_normal((2, 1, 3))
        cell = rng.standard_normal((2, 1, 16, 4))
        with pytest.raises(ValueError):
            compiled.mvm_rmse_multi(w, x, a1, d, bad_sys, cell, 4, 4, 4, 4, 4,
                                    [0.0], [0.0], 9402.0, 9919.5, 5e-4, 0.0)
