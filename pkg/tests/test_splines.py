import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsem.errors import InvalidArgumentError, OutOfDomainError
from hetsem.splines import basis_matrix, build_basis, evaluate_basis, rescale_to_unit


def cox_de_boor_reference(z, k, i, t):
    """Naive recursive B-spline basis, independent of the package implementation."""
    if k == 0:
        # closed right end on the final nonempty interval
        if t[i] <= z < t[i + 1]:
            return 1.0
        if z == t[-1] and t[i] < t[i + 1] == t[-1]:
            return 1.0
        return 0.0
    c1 = c2 = 0.0
    if t[i + k] > t[i]:
        c1 = (z - t[i]) / (t[i + k] - t[i]) * cox_de_boor_reference(z, k - 1, i, t)
    if t[i + k + 1] > t[i + 1]:
        c2 = (t[i + k + 1] - z) / (t[i + k + 1] - t[i + 1]) * cox_de_boor_reference(z, k - 1, i + 1, t)
    return c1 + c2


def test_build_basis_knot_layout_k10():
    spec = build_basis(10, 0.0, 1.0)
    kv = spec.knot_vector
    assert kv.shape == (14,)
    assert np.all(kv[:4] == 0.0) and np.all(kv[-4:] == 1.0)
    interior = kv[4:-4]
    assert interior.shape == (6,)
    assert np.allclose(np.diff(interior), interior[0], atol=1e-15)


def test_build_basis_minimal_is_single_bezier_segment():
    spec = build_basis(4, 0.0, 1.0)
    assert np.all(np.isin(spec.knot_vector, (0.0, 1.0)))
    assert spec.segment_count == 1


@pytest.mark.parametrize("bad_k", [3, 2, 0, -1])
def test_build_basis_rejects_small_count(bad_k):
    with pytest.raises(InvalidArgumentError):
        build_basis(bad_k, 0.0, 1.0)


def test_build_basis_rejects_degenerate_domain():
    with pytest.raises(InvalidArgumentError):
        build_basis(10, 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        build_basis(10, 2.0, -1.0)


def test_bezier_midpoint_value():
    spec = build_basis(4, 0.0, 1.0)
    assert np.allclose(evaluate_basis(spec, 0.5), [0.125, 0.375, 0.375, 0.125])


def test_clamped_end_values():
    spec = build_basis(10, 0.0, 1.0)
    left = evaluate_basis(spec, 0.0)
    right = evaluate_basis(spec, 1.0)
    assert left[0] == 1.0 and np.all(left[1:] == 0.0)
    assert right[-1] == 1.0 and np.all(right[:-1] == 0.0)


def test_matches_recursive_oracle():
    spec = build_basis(7, 0.0, 1.0)
    t = spec.knot_vector
    for z in np.linspace(0.0, 1.0, 37):
        ref = [cox_de_boor_reference(z, 3, i, t) for i in range(7)]
        assert np.allclose(evaluate_basis(spec, z), ref, atol=1e-12)


def test_partition_of_unity_fine_grid():
    spec = build_basis(10, -1.0, 1.0)
    z = np.linspace(-1.0, 1.0, 1000)
    sums = basis_matrix(spec, z).sum(axis=1)
    assert np.abs(sums - 1.0).max() < 1e-10


def test_local_support_and_nonnegativity():
    spec = build_basis(12, 0.0, 2.0)
    vals = basis_matrix(spec, np.linspace(0.0, 2.0, 501))
    assert (vals >= 0.0).all()
    assert ((vals > 0.0).sum(axis=1) <= 4).all()


def test_continuity_proxy_on_fine_grid():
    spec = build_basis(10, 0.0, 1.0)
    z = np.linspace(0.0, 1.0, 2001)
    vals = basis_matrix(spec, z)
    dz = z[1] - z[0]
    # C^2 smooth => |jump| bounded by max|phi'| * dz; 30 is a generous bound here
    assert np.abs(np.diff(vals, axis=0)).max() < 30.0 * dz


def test_out_of_domain_clamps_by_default_and_raises_in_strict_mode():
    spec = build_basis(10, 0.0, 1.0)
    assert np.allclose(evaluate_basis(spec, -0.5), evaluate_basis(spec, 0.0))
    assert np.allclose(evaluate_basis(spec, 1.5), evaluate_basis(spec, 1.0))
    with pytest.raises(OutOfDomainError):
        evaluate_basis(spec, 1.5, strict=True)


@settings(max_examples=60, deadline=None)
@given(
    k=st.integers(min_value=4, max_value=15),
    u=st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
)
def test_partition_of_unity_property(k, u):
    spec = build_basis(k, 0.0, 1.0)
    vals = evaluate_basis(spec, u)
    assert abs(vals.sum() - 1.0) < 1e-10
    assert (vals >= 0.0).all()


def test_rescale_to_unit_roundtrip():
    z = np.array([-1.0, 0.0, 0.25, 1.0])
    u = rescale_to_unit(z, -1.0, 1.0)
    assert np.allclose(u, [0.0, 0.5, 0.625, 1.0])
    with pytest.raises(InvalidArgumentError):
        rescale_to_unit(z, 1.0, 1.0)
