import numpy as np
import pytest

from hyperreal import matcore
from hyperreal.exceptions import DimensionMismatchError, NotHermitianError, SingularShiftError
from hyperreal.matcore import Definiteness, HermitianMatrix, Isometry


def test_hermitian_matrix_symmetrizes():
    H = HermitianMatrix([[1.0, 2.0], [0.0, 1.0]])
    assert np.allclose(H.entries, [[1.0, 1.0], [1.0, 1.0]])


def test_strict_hermitian_rejects_asymmetric_input():
    with pytest.raises(NotHermitianError):
        HermitianMatrix([[1.0, 2.0], [0.0, 1.0]], strict=True)


def test_non_square_is_rejected():
    with pytest.raises(DimensionMismatchError):
        matcore.as_square(np.ones((2, 3)))


@pytest.mark.parametrize(
    "M, expected",
    [
        (np.diag([1.0, 2.0]), Definiteness.POSITIVE_DEFINITE),
        (np.diag([0.0, 2.0]), Definiteness.POSITIVE_SEMIDEFINITE),
        (np.diag([-1.0, 2.0]), Definiteness.INDEFINITE),
        (np.diag([-1.0, 0.0]), Definiteness.NEGATIVE_SEMIDEFINITE),
        (np.diag([-1.0, -2.0]), Definiteness.NEGATIVE_DEFINITE),
    ],
)
def test_psd_classify(M, expected):
    assert matcore.psd_classify(M) is expected


def test_inertia_counts():
    assert matcore.inertia(np.diag([3.0, -1.0, 0.0, 2.0])) == (2, 1, 1)


def test_spectral_norm_and_radius():
    M = np.array([[0.0, 2.0], [0.0, 0.0]])
    assert matcore.spectral_norm(M) == pytest.approx(2.0)
    assert matcore.spectral_radius(M) == pytest.approx(0.0)


def test_cayley_is_involutive(rng):
    for _ in range(200):
        n = int(rng.integers(1, 6))
        M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        if np.min(np.abs(np.linalg.eigvals(M) + 1.0)) < 0.05:
            continue
        back = matcore.cayley(matcore.cayley(M))
        assert np.max(np.abs(back - M)) <= 1e-9 * max(1.0, matcore.spectral_norm(M))


def test_cayley_rejects_minus_one():
    with pytest.raises(SingularShiftError):
        matcore.cayley(np.diag([-1.0, 2.0]))


def test_cayley_maps_contractions_to_positive_hermitian_part(rng):
    for _ in range(50):
        Z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        K = 0.9 * Z / matcore.spectral_norm(Z)
        assert matcore.is_pd(matcore.hermitian_part(matcore.cayley(K)))


def test_hermitian_sqrt(rng):
    H = matcore.random_pd(4, rng)
    root = matcore.hermitian_sqrt(H)
    assert np.allclose(root @ root, H)
    assert np.allclose(matcore.hermitian_sqrt(H, inverse=True) @ root, np.eye(4))


def test_random_isometry_is_isometric(rng):
    iso = matcore.random_isometry(3, 4, rng)
    Y = iso.entries
    assert Y.shape == (12, 3)
    assert np.allclose(Y.conj().T @ Y, np.eye(3))
    assert len(iso.blocks()) == 4


def test_isometry_rejects_non_orthonormal_columns():
    with pytest.raises(DimensionMismatchError):
        Isometry(np.ones((4, 2)))


def test_convex_combine_of_identities_is_identity(rng):
    iso = matcore.random_isometry(3, 2, rng)
    out = matcore.convex_combine([np.eye(3), np.eye(3)], iso)
    assert np.allclose(out, np.eye(3))


def test_cayley_of_inverse_is_negated(rng):
    for _ in range(100):
        n = int(rng.integers(1, 5))
        M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        w = np.linalg.eigvals(M)
        if np.min(np.abs(w + 1.0)) < 0.05 or np.min(np.abs(w)) < 0.05:
            continue
        got = matcore.cayley(np.linalg.inv(M))
        assert np.max(np.abs(got + matcore.cayley(M))) <= 1e-8 * max(1.0, matcore.spectral_norm(got))
