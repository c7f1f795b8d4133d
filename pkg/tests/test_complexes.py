import random

import pytest

from selmerheight.complexes import (
    Complex,
    VerificationError,
    cohomology,
    cone,
    cone_functorial_map,
    cone_map_homotopy,
    direct_sum,
    homotopy_boundary,
    homotopy_defect,
    identity_map,
    induced_map_on_cohomology,
    random_chain_map,
    random_complex,
    random_graded_map,
    second_order_defect,
    solve_homotopy,
    solve_second_order,
    tensor,
    tensor_chain_maps,
    tensor_homotopy_first,
    transposition_s12,
    truncate_chain_map,
    truncate_ge,
    verify_chain_map,
    verify_homotopy,
    zero_map,
)
from selmerheight.linalg import Matrix, Ring

Q = Ring.rationals()
F5 = Ring.prime_field(5)


def test_d_squared_checked():
    # d(0) then d(1) with nonzero composite must be rejected, and the error
    # must carry the offending degree
    d0 = Matrix(Q, [[1], [0]])
    d1 = Matrix(Q, [[1, 0]])
    with pytest.raises(VerificationError) as exc:
        Complex(Q, {0: 1, 1: 2, 2: 1}, {0: d0, 1: d1})
    assert exc.value.degree == 0


def test_shift_signs():
    rng = random.Random(7)
    C = random_complex(F5, rng)
    D = C.shift(1)
    for n in C.degrees():
        assert D.term(n - 1) == C.term(n)
        assert D.d(n - 1) == C.d(n).scale(F5.coerce(-1))
    assert C.shift(2).d(0) == C.d(2)


def test_random_complex_has_prescribed_cohomology():
    for ring in (Q, F5):
        rng = random.Random(11)
        for _ in range(10):
            s = rng.randint(1, 4)
            C = random_complex(ring, rng, 0, 2, spheres=s, disks=rng.randint(0, 3))
            total = sum(cohomology(C, n).rank for n in range(-1, 5))
            assert total == s


def test_identity_and_composition():
    rng = random.Random(3)
    C = random_complex(Q, rng)
    D = random_complex(Q, rng)
    f = random_chain_map(C, D, rng)
    verify_chain_map(f)
    assert identity_map(C).then(f) == f
    assert f.then(identity_map(D)) == f
    g = random_chain_map(D, random_complex(Q, rng), rng)
    verify_chain_map(f.then(g))


def test_homotopy_and_shift_sign_rule():
    rng = random.Random(5)
    C = random_complex(F5, rng)
    D = random_complex(F5, rng)
    f = random_chain_map(C, D, rng)
    h = random_graded_map(C, D, -1, rng)
    g = f + homotopy_boundary(h)
    verify_chain_map(g)
    verify_homotopy(h, f, g)
    # shifting a homotopy picks up (-1)^m
    verify_homotopy(h.shift(1), f.shift(1), g.shift(1))
    verify_homotopy(h.shift(2), f.shift(2), g.shift(2))


def test_cone_of_identity_is_acyclic():
    rng = random.Random(9)
    for ring in (Q, F5):
        C = random_complex(ring, rng)
        cv = cone(identity_map(C))
        for n in range(C.min_deg - 2, C.max_deg + 2):
            assert cohomology(cv.complex, n).rank == 0


def test_cone_triangle_maps():
    rng = random.Random(13)
    A = random_complex(Q, rng)
    B = random_complex(Q, rng)
    f = random_chain_map(A, B, rng)
    cv = cone(f)
    inc = cv.inclusion_of_target()
    proj = cv.projection_to_shifted_source()
    verify_chain_map(inc)
    verify_chain_map(proj)
    assert inc.then(proj).is_zero()


def test_cone_functorial_map_and_homotopy():
    rng = random.Random(17)
    # force disks so the differentials (and all boundary terms) are nonzero
    A = random_complex(F5, rng, 0, 2, spheres=2, disks=3)
    B = random_complex(F5, rng, 0, 2, spheres=2, disks=3)
    f = random_chain_map(A, B, rng)
    cv1 = cone(f)
    cv2 = cone(f)
    # alpha2 = id + (d s + s d) is homotopic to id; the square
    # alpha2 . f = f . id commutes up to h = s f
    s = random_graded_map(B, B, -1, rng)
    alpha1 = identity_map(A)
    alpha2 = identity_map(B) + homotopy_boundary(s)
    h = f.then(s)
    c1 = cone_functorial_map(cv1, cv2, alpha1, alpha2, h)
    verify_chain_map(c1)
    # a second square: beta_i = alpha_i + homotopy boundaries
    k1 = random_graded_map(A, A, -1, rng)
    k2 = random_graded_map(B, B, -1, rng)
    beta1 = alpha1 + homotopy_boundary(k1)
    beta2 = alpha2 + homotopy_boundary(k2)
    hp = h + f.then(k2) - k1.then(f)
    c2 = cone_functorial_map(cv1, cv2, beta1, beta2, hp)
    H = solve_second_order(hp + k1.then(f), h + f.then(k2))
    assert H is not None
    kc = cone_map_homotopy(cv1, cv2, k1, k2, H)
    verify_homotopy(kc, c1, c2)


def test_direct_sum_blocks():
    rng = random.Random(19)
    A = random_complex(Q, rng)
    B = random_complex(Q, rng)
    ds = direct_sum([A, B])
    for i in range(2):
        verify_chain_map(ds.inject(i))
        verify_chain_map(ds.project(i))
        assert ds.inject(i).then(ds.project(i)) == identity_map(ds.summands[i])
    assert ds.inject(0).then(ds.project(1)).is_zero()
    for n in ds.complex.degrees():
        assert ds.complex.term(n) == A.term(n) + B.term(n)


def test_tensor_leibniz_on_pure_tensors():
    rng = random.Random(23)
    A = random_complex(F5, rng)
    B = random_complex(F5, rng)
    tv = tensor(A, B)
    for i in A.degrees():
        for j in B.degrees():
            x = A.random_element(i, rng)
            y = B.random_element(j, rng)
            lhs = tv.complex.d(i + j).apply(tv.pure_tensor(i, j, x, y))
            rhs = [F5.zero] * tv.complex.term(i + j + 1)
            if A.term(i + 1):
                for p, v in enumerate(tv.pure_tensor(i + 1, j, A.d(i).apply(x), y)):
                    rhs[p] = F5.add(rhs[p], v)
            if B.term(j + 1):
                sgn = F5.coerce((-1) ** i)
                for p, v in enumerate(tv.pure_tensor(i, j + 1, x, B.d(j).apply(y))):
                    rhs[p] = F5.add(rhs[p], F5.mul(sgn, v))
            assert list(lhs) == rhs


def test_tensor_of_chain_maps_and_homotopy():
    rng = random.Random(29)
    A1 = random_complex(F5, rng)
    A2 = random_complex(F5, rng)
    B1 = random_complex(F5, rng)
    B2 = random_complex(F5, rng)
    f1 = random_chain_map(A1, A2, rng)
    g1 = random_chain_map(B1, B2, rng)
    tv_src = tensor(A1, B1)
    tv_dst = tensor(A2, B2)
    F = tensor_chain_maps(tv_src, tv_dst, f1, g1)
    verify_chain_map(F)
    # homotope each factor, form (h (x) k)_1 and verify it is a homotopy
    h = random_graded_map(A1, A2, -1, rng)
    k = random_graded_map(B1, B2, -1, rng)
    f2 = f1 + homotopy_boundary(h)
    g2 = g1 + homotopy_boundary(k)
    G = tensor_chain_maps(tv_src, tv_dst, f2, g2)
    H = tensor_homotopy_first(tv_src, tv_dst, h, k, g1, f2)
    verify_homotopy(H, F, G)


def test_transposition_s12():
    rng = random.Random(31)
    A = random_complex(Q, rng)
    B = random_complex(Q, rng)
    tv_ab = tensor(A, B)
    tv_ba = tensor(B, A)
    s = transposition_s12(tv_ab, tv_ba)
    s_back = transposition_s12(tv_ba, tv_ab)
    verify_chain_map(s)
    assert s.then(s_back) == identity_map(tv_ab.complex)
    # on pure tensors: (-1)^{nm} y (x) x
    for i in A.degrees():
        for j in B.degrees():
            x = A.random_element(i, rng)
            y = B.random_element(j, rng)
            lhs = s.apply(i + j, tv_ab.pure_tensor(i, j, x, y))
            sgn = (-1) ** (i * j)
            rhs = [Q.mul(Q.coerce(sgn), v) for v in tv_ba.pure_tensor(j, i, y, x)]
            assert list(lhs) == rhs
    # unsigned variant is not a chain map in general but squares to id
    su = transposition_s12(tv_ab, tv_ba, signed=False)
    su_back = transposition_s12(tv_ba, tv_ab, signed=False)
    assert su.then(su_back) == identity_map(tv_ab.complex)


def test_truncation():
    rng = random.Random(37)
    for ring in (Q, F5):
        C = random_complex(ring, rng, 0, 3, spheres=4, disks=3)
        tv = truncate_ge(C, 2)
        assert cohomology(tv.complex, 1).rank == 0
        for n in (2, 3):
            M = induced_map_on_cohomology(tv.projection, n)
            hq = cohomology(C, n)
            assert M.shape == (cohomology(tv.complex, n).rank, hq.rank)
            assert M.rank() == hq.rank  # iso on H^n for n >= m
        # induced map of an endomorphism commutes with projection
        f = random_chain_map(C, C, rng)
        ft = truncate_chain_map(f, tv, tv)
        assert f.then(tv.projection) == tv.projection.then(ft)


def test_cohomology_known_example():
    # 0 -> R^2 -d-> R -> 0 with d = (1 0): H^0 free of rank 1, H^1 = 0
    C = Complex(Q, {0: 2, 1: 1}, {0: Matrix(Q, [[1, 0]])})
    assert cohomology(C, 0).rank == 1
    assert cohomology(C, 1).rank == 0


def test_solve_homotopy_roundtrip():
    rng = random.Random(41)
    A = random_complex(F5, rng)
    B = random_complex(F5, rng)
    f = random_chain_map(A, B, rng)
    h = random_graded_map(A, B, -1, rng)
    g = f + homotopy_boundary(h)
    h2 = solve_homotopy(f, g)
    assert h2 is not None
    verify_homotopy(h2, f, g)


def test_solve_homotopy_detects_non_homotopic():
    # identity vs zero on a complex with nonzero cohomology
    C = Complex(Q, {0: 1}, {})
    assert solve_homotopy(identity_map(C), zero_map(C, C)) is None


def test_solve_second_order_roundtrip():
    rng = random.Random(43)
    A = random_complex(F5, rng)
    B = random_complex(F5, rng)
    h = random_graded_map(A, B, -1, rng)
    W = random_graded_map(A, B, -2, rng)
    # k = h + (W d - d W) is another graded map with the same boundary
    comps = {}
    for n in set(A.degrees()) | set(B.degrees()):
        comps[n] = W.comp(n + 1) * A.d(n) - B.d(n - 2) * W.comp(n)
    k = h + type(h)(A, B, -1, comps)
    H = solve_second_order(h, k)
    assert H is not None
    assert not second_order_defect(H, h, k)


def test_fault_injection_reports_degree():
    rng = random.Random(47)
    A = random_complex(F5, rng, 0, 2, spheres=2, disks=2)
    B = random_complex(F5, rng, 0, 2, spheres=2, disks=2)
    f = random_chain_map(A, B, rng)
    n0 = min(n for n in A.degrees() if B.term(n) and A.term(n))
    M = f.comp(n0)
    rows = [list(r) for r in M.rows]
    rows[0][0] = F5.add(rows[0][0], F5.one)
    bad = type(f)(A, B, 0, dict(f.comps) | {n0: Matrix(F5, rows, M.nrows, M.ncols)})
    with pytest.raises(VerificationError) as exc:
        verify_chain_map(bad)
    assert exc.value.degree in (n0 - 1, n0)


def test_json_roundtrip():
    rng = random.Random(53)
    C = random_complex(Q, rng)
    D = random_complex(Q, rng)
    assert Complex.from_json(C.to_json()) == C
    f = random_chain_map(C, D, rng)
    from selmerheight.complexes import GradedMap
    assert GradedMap.from_json(C, D, f.to_json()) == f
