import math

import numpy as np
import pytest

from conftest import jacobi_eig, rng_for
from riemmean.core import (
    MetricConstants,
    minimal_rotation_logs,
    rcx_from_constants,
    rotation_angles,
    rotation_exp,
    rotation_log,
    so_norm_from_identity,
    sym_eig,
)
from riemmean.errors import CutLocusError, InvalidInputError


def test_rcx_unit_sphere():
    assert rcx_from_constants(math.pi, 1.0) == pytest.approx(math.pi / 2, abs=1e-15)


def test_rcx_hadamard_rule():
    assert rcx_from_constants(math.inf, -1.0) == math.inf
    assert rcx_from_constants(math.inf, 0.0) == math.inf


def test_rcx_scaled_rotation_group():
    # r_inj = sqrt(k) pi and curvature bound 1/(4k) give r_cx = sqrt(k) pi / 2
    for k in (0.25, 1.0, 4.0):
        got = rcx_from_constants(math.sqrt(k) * math.pi, 0.25 / k)
        assert got == pytest.approx(math.sqrt(k) * math.pi / 2, abs=1e-14)


def test_rcx_monotonicity():
    rng = rng_for(10)
    for _ in range(200):
        r1, r2 = sorted(rng.uniform(0.1, 10.0, size=2))
        d1, d2 = sorted(rng.uniform(-1.0, 4.0, size=2))
        assert rcx_from_constants(r1, d1) <= rcx_from_constants(r2, d1)
        assert rcx_from_constants(r1, d2) <= rcx_from_constants(r1, d1)


def test_rcx_negative_injectivity_rejected():
    with pytest.raises(InvalidInputError):
        rcx_from_constants(-1.0, 1.0)


def test_metric_constants_consistency_enforced():
    with pytest.raises(InvalidInputError):
        MetricConstants(math.pi, 1.0, 1.0)
    c = MetricConstants.from_bounds(math.pi, 1.0)
    assert c.r_cx == pytest.approx(math.pi / 2)


def test_sym_eig_diagonal_reorder():
    U, lam = sym_eig(np.diag([1.0, 4.0]))
    assert np.allclose(lam, [4.0, 1.0])
    assert np.linalg.det(U) == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs((U * lam) @ U.T - np.diag([1.0, 4.0]))) < 1e-12


def test_sym_eig_identity():
    U, lam = sym_eig(np.eye(3))
    assert np.allclose(lam, [1.0, 1.0, 1.0])
    assert np.max(np.abs(U.T @ U - np.eye(3))) < 1e-12


def test_sym_eig_rejects_nonsymmetric():
    with pytest.raises(InvalidInputError):
        sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("m", [2, 3, 4])
def test_sym_eig_random_reconstruction_against_jacobi(m):
    rng = rng_for(20 + m)
    for _ in range(1000):
        A = rng.standard_normal((m, m))
        S = 0.5 * (A + A.T)
        U, lam = sym_eig(S)
        assert np.max(np.abs((U * lam) @ U.T - S)) < 1e-10
        assert np.max(np.abs(U.T @ U - np.eye(m))) < 1e-12
        assert np.linalg.det(U) == pytest.approx(1.0, abs=1e-10)
        assert np.all(np.diff(lam) <= 1e-12)
        # independent oracle: cyclic Jacobi sweeps
        _, lam_oracle = jacobi_eig(S)
        assert np.max(np.abs(lam - lam_oracle)) < 1e-10


def test_rotation_exp_log_roundtrip():
    rng = rng_for(30)
    for _ in range(500):
        n = int(rng.integers(2, 6))
        X = rng.standard_normal((n, n))
        X = 0.5 * (X - X.T)
        R = rotation_exp(X)
        assert np.max(np.abs(R.T @ R - np.eye(n))) < 1e-12
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-10)
        if max(rotation_angles(R)) < math.pi - 1e-6:
            # principal log of exp(X) recovers X when no angle reaches pi
            if so_norm_from_identity(R) >= math.sqrt(0.5) * float(
                np.sqrt(np.tensordot(X, X))
            ) - 1e-9:
                assert np.max(np.abs(rotation_log(R) - X)) < 1e-8


def test_rotation_angles_small_angle_precision():
    # arccos alone would only resolve ~1e-8 here
    X = np.array([[0.0, -1e-12], [1e-12, 0.0]])
    R = rotation_exp(X)
    assert rotation_angles(R)[0] == pytest.approx(1e-12, rel=1e-3)


def test_rotation_log_raises_at_pi():
    R = np.diag([-1.0, -1.0, 1.0])
    with pytest.raises(CutLocusError):
        rotation_log(R)


def test_minimal_rotation_logs_at_pi_block():
    R = np.diag([-1.0, -1.0, 1.0])
    logs = minimal_rotation_logs(R)
    assert len(logs) == 2
    for X in logs:
        assert np.max(np.abs(rotation_exp(X) - R)) < 1e-12
        assert np.sqrt(0.5 * np.tensordot(X, X)) == pytest.approx(math.pi, abs=1e-12)
    assert np.max(np.abs(logs[0] + logs[1])) < 1e-12


def test_minimal_rotation_logs_continuum_refused():
    with pytest.raises(CutLocusError):
        minimal_rotation_logs(-np.eye(4))


def test_so_norm_from_identity_quarter_turn():
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert so_norm_from_identity(R) == pytest.approx(math.pi / 2, abs=1e-14)
    assert so_norm_from_identity(-np.eye(2)) == pytest.approx(math.pi, abs=1e-14)
