import numpy as np
import pytest

from gaplesswalk import _kernels_py, kernels

PI = np.pi


def _cases(n=200, seed=3):
    rng = np.random.default_rng(seed)
    return rng.uniform(-PI, PI, n), rng.uniform(-PI, PI, n)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
def test_compiled_and_fallback_agree():
    from gaplesswalk import _kernels

    t1, t2 = _cases()
    wc, gc = _kernels.winding_and_gap(t1, t2, 1024)
    wp, gp = _kernels_py.winding_and_gap(t1, t2, 1024)
    assert np.allclose(wc, wp, atol=1e-12)
    assert np.allclose(gc, gp, atol=1e-12)
    lo = np.array([-3.0, -1.0, 0.5])
    hi = np.array([-1.5, 0.2, 2.5])
    assert _kernels.arc_angle_sum(0.4, -1.1, lo, hi, 500) == pytest.approx(
        _kernels_py.arc_angle_sum(0.4, -1.1, lo, hi, 500), abs=1e-12
    )


def test_fallback_matches_dense_grid():
    # brute-force winding with unwrapped phases on a much finer grid
    t1, t2 = 0.7, -0.3
    w, _ = _kernels_py.winding_and_gap(np.array([t1]), np.array([t2]), 4096)
    k = np.linspace(-PI, PI, 1_000_001)
    from gaplesswalk.walk_core import bloch_components

    _, d2, d3 = bloch_components(t1, t2, k)
    phase = np.unwrap(np.arctan2(d3, d2))
    assert w[0] == pytest.approx((phase[-1] - phase[0]) / (2 * PI), abs=1e-9)


def test_flat_band_min_gap():
    w, g = kernels.winding_and_gap(np.array([PI / 2]), np.array([PI / 2]), 512)
    assert w[0] == pytest.approx(-1.0, abs=1e-12)
    assert g[0] == pytest.approx(PI / 2)


def test_full_arc_equals_winding():
    t1, t2 = 1.0, 0.2
    total = kernels.arc_angle_sum(t1, t2, np.array([-PI]), np.array([PI]), 4096)
    w, _ = kernels.winding_and_gap(np.array([t1]), np.array([t2]), 4096)
    assert total / (2 * PI) == pytest.approx(w[0], abs=1e-9)
