import math

import numpy as np
import pytest

from weyl_atlas import classd as cd


def test_basis_entry_golden_value():
    d, h = cd.raw_entries(6)
    expected = (math.sqrt(2) + math.sqrt(3) + math.sqrt(5)) % 1 - 0.5
    assert d[0, 0, 0].real == pytest.approx(-0.1176677, abs=1e-6)
    assert d[0, 0, 0].real == expected
    assert np.all(np.abs(d.real) <= 0.5) and np.all(np.abs(h.imag) <= 0.5)


def test_basis_block_structure():
    B = cd.basis_matrices(6)
    assert B.H.shape == (8, 12, 12)
    for Hn in B.H:
        D = Hn[:6, 6:]
        H0 = Hn[:6, :6]
        assert np.all(np.diag(D) == 0)
        np.testing.assert_array_equal(D, -D.T)
        assert np.max(np.abs(H0 - H0.conj().T)) < 1e-15
        cd.check_bdg_structure(Hn)


def test_basis_is_deterministic():
    a = cd.raw_entries(4)
    b = cd.raw_entries(4)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_basis_rejects_bad_size():
    with pytest.raises(ValueError):
        cd.basis_matrices(0)


def test_hamiltonian_term_selection():
    B = cd.basis_matrices(6)
    np.testing.assert_array_equal(cd.bdg_hamiltonian(6, [0, 0, 0]), B.H[0])
    np.testing.assert_allclose(cd.bdg_hamiltonian(6, [np.pi / 2, 0, 0]), B.H[4], atol=1e-15)
    np.testing.assert_allclose(cd.bdg_hamiltonian(6, [0, 0, np.pi / 2]), B.H[1], atol=1e-15)


def test_shift_by_pi_negates(rng):
    for ang in rng.uniform(-np.pi, np.pi, (20, 3)):
        H = cd.bdg_hamiltonian(6, ang)
        for axis in range(3):
            shifted = ang + np.pi * np.eye(3)[axis]
            assert np.max(np.abs(cd.bdg_hamiltonian(6, shifted) + H)) < 1e-13


def test_majorana_form_contract(rng):
    B = cd.basis_matrices(6)
    A = cd.majorana_form(B.H[0])
    assert np.max(np.abs(A + A.T)) < 1e-12
    for ang in rng.uniform(-np.pi, np.pi, (10, 3)):
        H = cd.bdg_hamiltonian(6, ang)
        A = cd.majorana_form(H)
        assert cd.pfaffian(A) ** 2 == pytest.approx(np.linalg.det(H).real, rel=1e-8)
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(1j * A)), np.linalg.eigvalsh(H), atol=1e-12)


def test_majorana_batch_matches_direct(rng):
    ang = rng.uniform(-np.pi, np.pi, (5, 3))
    Ab = cd.majorana_batch(6, ang)
    for a, A in zip(ang, Ab):
        np.testing.assert_allclose(A, cd.majorana_form(cd.bdg_hamiltonian(6, a)), atol=1e-13)


def test_toy_majorana_form():
    eps = 0.7
    A = cd.majorana_form(np.diag([eps, -eps]).astype(complex))
    assert abs(A[0, 1]) == pytest.approx(eps) and A[0, 1] == -A[1, 0]
    assert abs(cd.pfaffian(A)) == pytest.approx(eps)
    # odd n_s: Pf^2 = -det(H)
    assert cd.pfaffian(A) ** 2 == pytest.approx(-np.linalg.det(np.diag([eps, -eps])))


def test_majorana_form_rejects_non_bdg():
    H = np.diag([1.0, 2.0]).astype(complex)
    with pytest.raises(ValueError, match="not class D"):
        cd.majorana_form(H)


def test_pfaffian_examples():
    assert cd.pfaffian(np.array([[0, 1.7], [-1.7, 0]])) == pytest.approx(1.7)
    a, b, c, d, e, f = 0.3, -1.2, 2.0, 0.5, 0.8, -0.9
    A = np.array([[0, a, b, c], [-a, 0, d, e], [-b, -d, 0, f], [-c, -e, -f, 0]])
    assert cd.pfaffian(A) == pytest.approx(a * f - b * e + c * d)
    with pytest.raises(ValueError):
        cd.pfaffian(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        cd.pfaffian(np.ones((2, 2)))


def test_pfaffian_squared_random(rng):
    for _ in range(100):
        M = rng.standard_normal((12, 12))
        A = M - M.T
        assert cd.pfaffian(A) ** 2 == pytest.approx(np.linalg.det(A), rel=1e-8)


def test_pfaffian_orthogonal_covariance(rng):
    for _ in range(50):
        M = rng.standard_normal((8, 8))
        A = M - M.T
        Q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
        lhs = cd.pfaffian(Q @ A @ Q.T)
        assert lhs == pytest.approx(np.linalg.det(Q) * cd.pfaffian(A), rel=1e-8)


def test_spectrum_symmetric(rng):
    for ang in rng.uniform(-np.pi, np.pi, (100, 3)):
        E = np.linalg.eigvalsh(cd.bdg_hamiltonian(6, ang))
        np.testing.assert_allclose(E, -E[::-1], atol=1e-10)


def test_determinant_never_negative(rng):
    ang = rng.uniform(-np.pi, np.pi, (200, 3))
    det = np.linalg.det(cd.bdg_hamiltonian(6, ang)).real
    scale = np.max(np.abs(det))
    assert np.all(det >= -1e-8 * scale)


def test_crossing_counts_even_and_periodic(rng):
    for a, b in rng.uniform(-np.pi, np.pi, (20, 2)):
        det = cd.zero_crossing_detail(6, a, b, 200)
        assert det.count % 2 == 0
        assert det.count == 2 * det.half_count
        assert det.count % 4 == 0


def test_crossing_count_origin_shift_by_pi(rng):
    for a, b in rng.uniform(-1, 0.5, (10, 2)):
        assert cd.zero_crossing_count(6, a, b, 200) == cd.zero_crossing_count(6, a, b, 200, origin=np.pi)


def test_crossing_count_needs_samples():
    with pytest.raises(ValueError):
        cd.zero_crossing_count(6, 0.1, 0.2, 8)


def test_resolution_doubling_changes_few_cells():
    r200 = cd.phase_raster(resolution=(50, 50), n_gamma=200).counts
    r400 = cd.phase_raster(resolution=(50, 50), n_gamma=400).counts
    assert np.mean(r200 != r400) < 0.01


def test_counter_matches_scalar_count():
    counter = cd.CrossingCounter(6, 64)
    ab = np.array([[0.1, -0.3], [-0.7, 0.2]])
    assert list(counter(ab)) == [cd.zero_crossing_count(6, a, b, 64) for a, b in ab]


def test_degeneracy_surface():
    pts = cd.degeneracy_surface(6, 24)
    assert len(pts) > 0
    g = pts[:, 2]
    # gamma -> gamma + pi maps the cloud onto itself (grid shift of 12 samples)
    key = {tuple(np.round(p, 9)) for p in pts}
    shifted = np.mod(pts + [0, 0, np.pi] + np.pi, 2 * np.pi) - np.pi
    assert {tuple(np.round(p, 9)) for p in shifted} == key
    assert np.all((g >= -np.pi) & (g < np.pi))
    with pytest.raises(ValueError):
        cd.degeneracy_surface(6, 8)


def test_gapped_constant_model_has_no_surface():
    A0 = cd.majorana_form(cd.bdg_block(np.diag([1.0, 2.0]).astype(complex), np.zeros((2, 2))))

    def constant(ang):
        return np.broadcast_to(A0, ang.shape[:-1] + A0.shape)

    assert len(cd.degeneracy_surface(2, 16, model=constant)) == 0
