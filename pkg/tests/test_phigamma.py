import random

import pytest

from selmerheight.complexes import VerificationError, cohomology, tensor
from selmerheight.linalg import LinAlgError, Matrix, Ring
from selmerheight.phigamma import (
    DualityTarget,
    PhiGammaModule,
    bockstein,
    duality_pairing,
    enumerate_cohomology_dims,
    euler_characteristic,
    herr_as_total,
    herr_complex,
    herr_cup,
    herr_cup_via_total,
    isoclinic_decompose,
    isoclinic_dual_system,
    iwasawa_complex,
)

Q = Ring.rationals()
F5 = Ring.prime_field(5)
F7 = Ring.prime_field(7)


def mod(ring, phi, gamma, psi=None, log_chi=None):
    to_m = lambda M: Matrix(ring, [[ring.coerce(x) for x in row] for row in M])
    return PhiGammaModule(ring, to_m(phi), to_m(gamma),
                          psi=None if psi is None else to_m(psi),
                          log_chi=log_chi)


def h_dims(D):
    C = herr_complex(D)
    return tuple(cohomology(C, n).rank for n in (0, 1, 2))


def test_pinned_cohomology_dimensions():
    # trivial rank one over Q: 1, 2, 1
    assert h_dims(mod(Q, [[1]], [[1]])) == (1, 2, 1)
    # phi = 2, gamma = 3 over Q: everything dies
    assert h_dims(mod(Q, [[2]], [[3]])) == (0, 0, 0)
    # rank two over F5 with a unipotent phi and gamma = id; pinned from the
    # enumeration oracle (h0 = dim ker(phi-1), h1 = 2 + dim ker(phi-1)
    # - rank(phi-1) - rank(phi-1) = 2, h2 = 2 - rank(phi-1))
    D = mod(F5, [[1, 1], [0, 1]], [[1, 0], [0, 1]])
    assert h_dims(D) == (1, 2, 1)
    assert enumerate_cohomology_dims(D) == {0: 1, 1: 2, 2: 1}


def test_commutation_and_psi_invariants():
    with pytest.raises(VerificationError):
        mod(F5, [[1, 1], [0, 1]], [[1, 0], [1, 1]])   # phi gamma != gamma phi
    with pytest.raises(VerificationError):
        mod(Q, [[2]], [[1]], psi=[[1]])               # psi phi != id
    assert mod(Q, [[2]], [[3]]).psi is None


def test_herr_complex_equals_total_construction():
    rng = random.Random(7)
    for ring in (Q, F5):
        for rank in (1, 2, 3):
            D = PhiGammaModule.random(ring, rank, rng)
            assert herr_complex(D) == herr_as_total(D).complex


def test_enumeration_oracle_matches_linear_algebra():
    rng = random.Random(11)
    for rank in (1, 2):
        for _ in range(6):
            D = PhiGammaModule.random(F5, rank, rng)
            dims = enumerate_cohomology_dims(D)
            assert dims == {n: cohomology(herr_complex(D), n).rank
                            for n in (0, 1, 2)}
    with pytest.raises(LinAlgError):
        enumerate_cohomology_dims(PhiGammaModule.trivial(Q, 1))


def test_euler_characteristic_is_zero_with_scope_note():
    rng = random.Random(3)
    for rank in (1, 2):
        rep = euler_characteristic(PhiGammaModule.random(F5, rank, rng))
        assert rep["chi"] == 0
        assert "does not apply" in rep["note"]


def test_cup_pinned_values_trivial_module():
    # trivial rank-one module over F5: (1,0) cup (0,1) in bidegree (1,1) = -1
    D = PhiGammaModule.trivial(F5, 1)
    p = Matrix.identity(F5, 1)
    cup = herr_cup(D, D, p, D)
    tv = tensor(herr_complex(D), herr_complex(D))
    v = tv.pure_tensor(1, 1, [1, 0], [0, 1])
    assert cup.apply(2, v) == (4,)
    # and the symmetric one: (0,1) cup (1,0) = +1 (the current slot hits
    # gamma of the previous slot)
    v = tv.pure_tensor(1, 1, [0, 1], [1, 0])
    assert cup.apply(2, v) == (1,)


def test_cup_six_components_rank_one():
    # rank one, phi = 2, gamma = 3 over F5; the product module carries
    # phi = 4, gamma = 9 = 4 so the multiplication pairing is equivariant
    D = mod(F5, [[2]], [[3]])
    D3 = mod(F5, [[4]], [[4]])
    p = Matrix.identity(F5, 1)
    cup = herr_cup(D, D, p, D3)
    tv = tensor(herr_complex(D), herr_complex(D))
    # (0,0): x0 y0
    assert cup.apply(0, tv.pure_tensor(0, 0, [1], [1])) == (1,)
    # (0,1): x0 (x) (y0, y1) -> (x0 y0, x0 y1), no twist
    assert cup.apply(1, tv.pure_tensor(0, 1, [1], [1, 0])) == (1, 0)
    assert cup.apply(1, tv.pure_tensor(0, 1, [1], [0, 1])) == (0, 1)
    # (1,0): (x0, x1) (x) y0 -> (x0 phi(y0), x1 gamma(y0))
    assert cup.apply(1, tv.pure_tensor(1, 0, [1, 0], [1])) == (2, 0)
    assert cup.apply(1, tv.pure_tensor(1, 0, [0, 1], [1])) == (0, 3)
    # (1,1): x1 gamma(y0) - x0 phi(y1)
    assert cup.apply(2, tv.pure_tensor(1, 1, [0, 1], [1, 0])) == (3,)
    assert cup.apply(2, tv.pure_tensor(1, 1, [1, 0], [0, 1])) == ((-2) % 5,)
    # (0,2): untwisted
    assert cup.apply(2, tv.pure_tensor(0, 2, [1], [1])) == (1,)
    # (2,0): x1 gamma(phi(y0)) = 6 = 1 mod 5
    assert cup.apply(2, tv.pure_tensor(2, 0, [1], [1])) == (1,)


def test_cup_matches_total_complex_construction():
    rng = random.Random(23)
    for ring in (F5, Q):
        for _ in range(5):
            r1, r2 = rng.choice([(1, 1), (1, 2), (2, 1), (2, 2)])
            D1 = PhiGammaModule.random(ring, r1, rng)
            D2 = PhiGammaModule.random(ring, r2, rng)
            D3 = D1.tensor_with(D2)
            p = Matrix.identity(ring, r1 * r2)
            assert herr_cup(D1, D2, p, D3) == herr_cup_via_total(D1, D2, p, D3)


def test_cup_rejects_non_equivariant_pairing():
    D1 = mod(F5, [[2]], [[3]])
    D3 = mod(F5, [[4]], [[4]])
    bad = Matrix(F5, [[1]])
    with pytest.raises(VerificationError):
        herr_cup(D1, D1, bad, mod(F5, [[1]], [[1]]))
    with pytest.raises(LinAlgError):
        herr_cup(D1, D1, Matrix.zero(F5, 2, 1), D3)


def test_duality_pairing_trivial_module():
    D = PhiGammaModule.trivial(F5, 1)
    target = DualityTarget.standard(D)
    pm = duality_pairing(D, D, Matrix.identity(F5, 1), target)
    # degree 0 x 2 and 2 x 0 are perfect 1x1 pairings
    assert pm[0].nrows == pm[0].ncols == 1 and pm[0].rows[0][0] != 0
    assert pm[2].rows[0][0] != 0
    # degree 1: the standard symplectic shape, nondegenerate
    assert pm[1].nrows == pm[1].ncols == 2
    assert pm[1].is_invertible()
    # the middle pairing is skew on an isoclinic module
    assert (pm[1] + pm[1].transpose()).is_zero()


def test_duality_rejects_degenerate_module_pairing():
    D = PhiGammaModule.trivial(F5, 1)
    target = DualityTarget.standard(D)
    with pytest.raises(VerificationError):
        duality_pairing(D, D, Matrix.zero(F5, 1, 1), target)


def test_iwasawa_complex():
    D = mod(F5, [[2]], [[3]], psi=[[3]])  # 3 * 2 = 6 = 1 mod 5
    C = iwasawa_complex(D)
    assert C.degrees() == [1, 2]
    assert C.d(1) == Matrix(F5, [[(3 - 1) % 5]])
    with pytest.raises(LinAlgError):
        iwasawa_complex(mod(F5, [[2]], [[3]]))


def test_bockstein_pinned_rank_one():
    # gamma = id, log_chi = 1 over Q: beta(x in degree 0) = (0, -x)
    D = PhiGammaModule.trivial(Q, 1, log_chi=1)
    way1, way2 = bockstein(D)
    assert way1 == way2
    assert way1.apply(0, [1]) == (0, -1)
    assert way1.apply(1, [1, 0]) == (-1,)
    assert way1.apply(1, [0, 1]) == (0,)
    # log_chi = 0 kills it
    z1, z2 = bockstein(PhiGammaModule.trivial(Q, 1, log_chi=0))
    assert all(z1.comp(n).is_zero() for n in (0, 1))
    assert z1 == z2


def test_bockstein_two_ways_and_square_zero():
    rng = random.Random(41)
    for ring in (F7, Q):
        for rank in (1, 2, 3):
            D = PhiGammaModule.random(ring, rank, rng,
                                      log_chi=ring.random_unit(rng))
            way1, way2 = bockstein(D)  # raises unless the two ways agree
            assert way1 == way2
            assert (way1.comp(1) * way1.comp(0)).is_zero()


def test_isoclinic_decomposition():
    D = PhiGammaModule.trivial(F5, 2, log_chi=2)
    dec = isoclinic_decompose(D)
    assert dec.i_full.is_invertible()
    # recover the projections from the inverse: pr_f . i_f = id, pr_f . i_c = 0
    inv = dec.i_full.inverse()
    pr_f = inv.submatrix(range(D.rank), range(dec.h1.rank))
    assert pr_f * dec.i_f == Matrix.identity(F5, 2)
    assert (pr_f * dec.i_c).is_zero()
    with pytest.raises(VerificationError):
        isoclinic_decompose(PhiGammaModule.trivial(F5, 2, log_chi=0))
    with pytest.raises(VerificationError):
        isoclinic_decompose(mod(F5, [[2]], [[1]], log_chi=1))


def test_isoclinic_dual_system_closed_form():
    ring = F5
    L = ring.coerce(3)
    D = PhiGammaModule.trivial(ring, 2, log_chi=L)
    dual = PhiGammaModule.trivial(ring, 2, log_chi=L)
    r = D.rank
    # dot-product evaluation pairing into the trivial rank-one twist
    ev = Matrix(ring, [[1 if x == a else 0
                        for x in range(r) for a in range(r)]], 1, r * r)
    target = DualityTarget.standard(PhiGammaModule.trivial(ring, 1))
    out = isoclinic_dual_system(D, dual, ev, target)
    h1 = cohomology(herr_complex(dual), 1)
    Linv = ring.inv(L)
    cols = []
    for k in range(2 * r):
        alpha = [Linv if i == k else 0 for i in range(r)]
        beta = [(-1) % 5 if i + r == k else 0 for i in range(r)]
        cols.append(list(h1.classify(alpha + beta)))
    expected = Matrix.from_cols(ring, cols, nrows=h1.rank)
    assert out["i_dual"] == expected


def test_json_roundtrip():
    D = mod(F5, [[2, 1], [0, 2]], [[3, 0], [0, 3]], log_chi=4)
    E = PhiGammaModule.from_json(D.to_json())
    assert E.phi == D.phi and E.gamma == D.gamma and E.log_chi == D.log_chi
    D2 = mod(Q, [[1]], [[3]], psi=[[1]], log_chi=2)
    E2 = PhiGammaModule.from_json(D2.to_json())
    assert E2.phi == D2.phi and E2.psi == D2.psi and E2.log_chi == D2.log_chi
