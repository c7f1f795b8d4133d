"""Total complexes, cup products on totals and cones, and the P/T/B checkers.

This module implements the product machinery for complexes equipped with an
endomorphism phi:

* ``TotalComplex``: T^n = A^{n-1} (+) A^n with
  d(a_{n-1}, a_n) = (d a_{n-1} + (-1)^n (phi - 1) a_n, d a_n), together with
  the slightly more general "folded" variant where the first summand is a
  subcomplex B embedded in A by ``emb`` and phi - 1 factors as emb . u
  (needed for truncated period-module models, where phi - 1 drops the top
  graded piece);
* ``cup_total`` / ``homotopy_total`` / ``transposition_homotopy_total``: the
  explicit formulas making cup products, homotopies, and transpositions
  descend to totals;
* ``build_E``: E = cone(A (+) B -> C)[-1] with
  d(a, b, c) = (da, db, -f(a) + g(b) - dc);
* ``cup_r_h``, ``homotopy_k``, ``homotopy_s``, ``transposition_E``,
  ``bockstein_E``: products on the E-complexes with their witnesses;
* ``ProductDatum`` / ``TranspositionDatum`` / ``BocksteinDatum`` bundles with
  per-condition checkers (P1-3, T1-7, B1-5), plus random generators that
  build instances with all witnesses either tracked or solved linearly.

Conventions: h: f ~> g means d h + h d = g - f; H: h ~> k means
H d - d H = k - h; degree-(+1) maps Z -> Z[1] are degree-0 GradedMaps into
the shifted complex (so "anticommutes with d" is the plain chain condition).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .complexes import (
    Complex,
    GradedMap,
    VerificationError,
    _solve_graded,
    chain_map_defect,
    homotopy_boundary,
    homotopy_defect,
    identity_map,
    random_chain_map,
    random_complex,
    random_graded_map,
    solve_homotopy,
    tensor,
    TensorView,
    tensor_chain_maps,
    tensor_homotopy_first,
    transposition_s12,
    verify_chain_map,
    verify_homotopy,
    zero_map,
)
from .linalg import LinAlgError, Matrix, Ring


def d_commutator(H: GradedMap) -> GradedMap:
    """d H - H d as a GradedMap of degree H.degree + 1."""
    comps = {}
    for n in set(H.degrees()):
        comps[n] = H.target.d(n + H.degree) * H.comp(n) - H.comp(n + 1) * H.source.d(n)
    return GradedMap(H.source, H.target, H.degree + 1, comps)


def solve_d_commutator(source: Complex, target: Complex, rhs: GradedMap):
    """Solve d H - H d = rhs for H of degree rhs.degree - 1, or None."""
    degree = rhs.degree - 1
    ring = source.ring
    degs = sorted(set(source.degrees()) | set(target.degrees()))
    if not degs:
        return zero_map(source, target, degree)
    lo, hi = min(degs), max(degs)
    minus_one = ring.coerce(-1)
    equations = []
    for n in range(lo - 1, hi + 2):
        R0 = rhs.comp(n)
        if R0.nrows == 0 or R0.ncols == 0:
            continue
        terms = [(target.d(n + degree), n, None),
                 (None, n + 1, source.d(n).scale(minus_one))]
        equations.append((n, R0, terms))
    return _solve_graded(source, target, degree, equations)


# ---------------------------------------------------------------------------
# total complexes
# ---------------------------------------------------------------------------

class TotalComplex:
    """T^n = B^{n-1} (+) A^n for phi - 1 = emb . u, with
    d(b, a) = (d b + (-1)^n u(a), d a).

    The plain case (the usual Tot(A --phi-1--> A)) is B = A, emb = id,
    u = phi - 1; use :func:`total_complex` for that.  ``emb: B -> A`` must be
    a degreewise-injective chain map and ``u: A -> B`` the (unique) chain map
    with emb . u = phi - id.
    """

    def __init__(self, A: Complex, phi: GradedMap, B: Complex | None = None,
                 emb: GradedMap | None = None, u: GradedMap | None = None):
        verify_chain_map(phi, "phi")
        if B is None:
            B = A
            emb = identity_map(A)
            u = phi - identity_map(A)
        else:
            verify_chain_map(emb, "emb")
            if u is None:
                u = solve_through_injection(emb, phi - identity_map(A),
                                            "phi - 1 through emb")
        # emb . u = phi - id, exactly
        if not (u.then(emb) == phi - identity_map(A)):
            raise VerificationError("emb . u = phi - 1", min(A.degrees() or [0]))
        verify_chain_map(u, "u")
        self.A, self.B, self.phi, self.emb, self.u = A, B, phi, emb, u
        ring = A.ring
        terms = {}
        degs = set(A.degrees()) | {n + 1 for n in B.degrees()}
        for n in degs:
            r = B.term(n - 1) + A.term(n)
            if r:
                terms[n] = r
        diffs = {}
        for n in sorted(terms):
            rows = B.term(n) + A.term(n + 1)
            cols = B.term(n - 1) + A.term(n)
            if rows == 0 or cols == 0:
                continue
            sgn = ring.coerce((-1) ** (n % 2))
            top = B.d(n - 1).hstack(u.comp(n).scale(sgn))
            bot = Matrix.zero(ring, A.term(n + 1), B.term(n - 1)).hstack(A.d(n))
            diffs[n] = top.vstack(bot)
        self.complex = Complex(ring, terms, diffs)

    # block embeddings / projections (matrices, per total degree)
    def inject_prev(self, n: int) -> Matrix:
        b, a = self.B.term(n - 1), self.A.term(n)
        ring = self.A.ring
        return Matrix.identity(ring, b).vstack(Matrix.zero(ring, a, b))

    def inject_curr(self, n: int) -> Matrix:
        b, a = self.B.term(n - 1), self.A.term(n)
        ring = self.A.ring
        return Matrix.zero(ring, b, a).vstack(Matrix.identity(ring, a))

    def project_prev(self, n: int) -> Matrix:
        return self.inject_prev(n).transpose()

    def project_curr(self, n: int) -> Matrix:
        return self.inject_curr(n).transpose()

    def total_map(self, other: "TotalComplex", alpha: GradedMap,
                  alpha_prev: GradedMap | None = None) -> GradedMap:
        """T(alpha) for a chain map alpha: A1 -> A2 with alpha phi1 = phi2 alpha."""
        if not (self.phi.then(alpha) == alpha.then(other.phi)):
            raise VerificationError("alpha . phi = phi . alpha", 0)
        if alpha_prev is None:
            alpha_prev = solve_through_injection(
                other.emb, self.emb.then(alpha), "alpha restricted to B")
        comps = {}
        for n in set(self.complex.degrees()) | set(other.complex.degrees()):
            comps[n] = (other.inject_prev(n) * alpha_prev.comp(n - 1) * self.project_prev(n)
                        + other.inject_curr(n) * alpha.comp(n) * self.project_curr(n))
        out = GradedMap(self.complex, other.complex, 0, comps)
        verify_chain_map(out, "total of a phi-equivariant map")
        return out

    def total_homotopy(self, other: "TotalComplex", h: GradedMap,
                       h_prev: GradedMap | None = None) -> GradedMap:
        """h_T(a_n, a_{n+1}) = (h(a_n), h(a_{n+1})) for phi-equivariant h."""
        if not (self.phi.then(h) == h.then(other.phi)):
            raise VerificationError("h . phi = phi . h", 0)
        if h_prev is None:
            h_prev = solve_through_injection(
                other.emb, self.emb.then(h), "h restricted to B")
        comps = {}
        for n in set(self.complex.degrees()) | set(other.complex.degrees()):
            comps[n] = (other.inject_prev(n - 1) * h_prev.comp(n - 1) * self.project_prev(n)
                        + other.inject_curr(n - 1) * h.comp(n) * self.project_curr(n))
        return GradedMap(self.complex, other.complex, -1, comps)


def total_complex(A: Complex, phi: GradedMap) -> TotalComplex:
    """The plain total complex Tot(A --phi-1--> A)."""
    return TotalComplex(A, phi)


def solve_through_injection(emb: GradedMap, target_map: GradedMap, name: str) -> GradedMap:
    """The unique X with emb . X = target_map, for degreewise-injective emb."""
    comps = {}
    for n in target_map.degrees():
        T = target_map.comp(n)
        E = emb.comp(n + target_map.degree)
        if E.ncols == 0:
            if not T.is_zero():
                raise VerificationError(name + " does not factor", n)
            comps[n] = Matrix.zero(emb.source.ring, 0, T.ncols)
            continue
        X = E.solve_matrix(T)
        if X is None or E * X != T:
            raise VerificationError(name + " does not factor", n)
        comps[n] = X
    return GradedMap(target_map.source, emb.source, target_map.degree, comps)


def _solve_block_through(emb_mat: Matrix, rhs: Matrix, name: str, degree) -> Matrix:
    if emb_mat.ncols == 0:
        if not rhs.is_zero():
            raise VerificationError(name + " does not factor", degree)
        return Matrix.zero(emb_mat.ring, 0, rhs.ncols)
    X = emb_mat.solve_matrix(rhs)
    if X is None or emb_mat * X != rhs:
        raise VerificationError(name + " does not factor", degree)
    return X


def _cup_block(cup: GradedMap, tv: TensorView, n: int, m: int) -> Matrix:
    """Component X1^n (x) X2^m -> target of a map on tensor(X1, X2)."""
    ring = cup.ring
    size = tv.A.term(n) * tv.B.term(m)
    if size == 0:
        return Matrix.zero(ring, cup.target.term(n + m + cup.degree), size)
    return cup.comp(n + m) * tv.embed_block(n + m, n)


def cup_total(t1: TotalComplex, t2: TotalComplex, t3: TotalComplex,
              cup: GradedMap, check_equivariance: bool = True) -> GradedMap:
    """(x_{n-1},x_n) cup (y_{m-1},y_m)
    = (x_n cup y_{m-1} + (-1)^m x_{n-1} cup phi_2(y_m), x_n cup y_m).

    ``cup`` is a chain map tensor(A1, A2) -> A3 satisfying
    cup . (phi1 (x) phi2) = phi3 . cup (condition A2).  Mixed terms landing
    in the previous-summand are factored through the embeddings.
    """
    tvA = tensor(t1.A, t2.A)
    verify_chain_map(cup, "cup on tensor")
    if check_equivariance:
        lhs = tensor_chain_maps(tvA, tvA, t1.phi, t2.phi).then(cup)
        rhs = cup.then(t3.phi)
        if lhs != rhs:
            raise VerificationError("A2: cup . (phi1 x phi2) = phi3 . cup",
                                    min(d for d in lhs.degrees()))
    ring = cup.ring
    T12 = tensor(t1.complex, t2.complex)
    comps = {}
    for N in T12.complex.degrees():
        total_piece = None
        for (n, m) in T12.blocks(N):
            proj = T12.project_block(N, n)
            # sub-projections inside T1^n (x) T2^m
            pPB1 = t1.project_prev(n)
            pA1 = t1.project_curr(n)
            pPB2 = t2.project_prev(m)
            pA2 = t2.project_curr(m)
            pieces = []
            # current part: x_n cup y_m into A3^{n+m}
            blk = _cup_block(cup, tvA, n, m)
            if blk.nrows and blk.ncols:
                pieces.append(t3.inject_curr(N) * blk * pA1.kron(pA2))
            # prev part 1: x_n cup y_{m-1}, solved into B3^{n+m-1}
            if t1.A.term(n) and t2.B.term(m - 1):
                rhsM = _cup_block(cup, tvA, n, m - 1) * \
                    Matrix.identity(ring, t1.A.term(n)).kron(t2.emb.comp(m - 1))
                if rhsM.ncols:
                    X = _solve_block_through(t3.emb.comp(N - 1), rhsM,
                                             "cup into previous summand", (n, m - 1))
                    pieces.append(t3.inject_prev(N) * X * pA1.kron(pPB2))
            # prev part 2: (-1)^m x_{n-1} cup phi2(y_m)
            if t1.B.term(n - 1) and t2.A.term(m):
                rhsM = _cup_block(cup, tvA, n - 1, m) * \
                    t1.emb.comp(n - 1).kron(t2.phi.comp(m))
                if rhsM.ncols:
                    X = _solve_block_through(t3.emb.comp(N - 1), rhsM,
                                             "cup into previous summand", (n - 1, m))
                    sgn = ring.coerce((-1) ** (m % 2))
                    pieces.append(t3.inject_prev(N) * X.scale(sgn) * pPB1.kron(pA2))
            for M in pieces:
                M = M * proj
                total_piece = M if total_piece is None else total_piece + M
        if total_piece is not None:
            comps[N] = total_piece
    out = GradedMap(T12.complex, t3.complex, 0, comps)
    verify_chain_map(out, "cup on totals")
    return out


def homotopy_total(t1: TotalComplex, t2: TotalComplex, t3: TotalComplex,
                   h: GradedMap, psi2: GradedMap | None = None) -> GradedMap:
    """h_T = (h(x_n (x) y_{m-1}) + (-1)^m h(x_{n-1} (x) phi_2(y_m)), h(x_n (x) y_m)).

    ``h`` is a degree-(-1) map tensor(A1, A2) -> A3 with
    h . (phi1 (x) phi2) = phi3 . h; h_T is then a homotopy between the totals
    of the two maps h connects.  ``psi2`` defaults to t2.phi (the phi of the
    second tensor factor appearing in the formula).
    """
    tvA = tensor(t1.A, t2.A)
    phi2 = psi2 if psi2 is not None else t2.phi
    lhs = tensor_chain_maps(tvA, tvA, t1.phi, t2.phi).then(h)
    rhs = h.then(t3.phi)
    if lhs != rhs:
        raise VerificationError("h . (phi1 x phi2) = phi3 . h",
                                min(lhs.degrees() or [0]))
    ring = h.ring
    T12 = tensor(t1.complex, t2.complex)
    comps = {}
    for N in T12.complex.degrees():
        total_piece = None
        for (n, m) in T12.blocks(N):
            proj = T12.project_block(N, n)
            pPB1 = t1.project_prev(n)
            pA1 = t1.project_curr(n)
            pPB2 = t2.project_prev(m)
            pA2 = t2.project_curr(m)
            pieces = []
            # current part of degree N-1: h(x_n (x) y_m)
            blk = _cup_block(h, tvA, n, m)
            if blk.nrows and blk.ncols:
                pieces.append(t3.inject_curr(N - 1) * blk * pA1.kron(pA2))
            # prev parts (land in B3^{N-2})
            if t1.A.term(n) and t2.B.term(m - 1):
                rhsM = _cup_block(h, tvA, n, m - 1) * \
                    Matrix.identity(ring, t1.A.term(n)).kron(t2.emb.comp(m - 1))
                if rhsM.ncols:
                    X = _solve_block_through(t3.emb.comp(N - 2), rhsM,
                                             "h into previous summand", (n, m - 1))
                    pieces.append(t3.inject_prev(N - 1) * X * pA1.kron(pPB2))
            if t1.B.term(n - 1) and t2.A.term(m):
                rhsM = _cup_block(h, tvA, n - 1, m) * \
                    t1.emb.comp(n - 1).kron(phi2.comp(m))
                if rhsM.ncols:
                    X = _solve_block_through(t3.emb.comp(N - 2), rhsM,
                                             "h into previous summand", (n - 1, m))
                    sgn = ring.coerce((-1) ** (m % 2))
                    pieces.append(t3.inject_prev(N - 1) * X.scale(sgn) * pPB1.kron(pA2))
            for M in pieces:
                M = M * proj
                total_piece = M if total_piece is None else total_piece + M
        if total_piece is not None:
            comps[N] = total_piece
    return GradedMap(T12.complex, t3.complex, -1, comps)


def transposition_homotopy_total(t1: TotalComplex, t2: TotalComplex,
                                 t3: TotalComplex, t4: TotalComplex,
                                 cup13: GradedMap, cup24: GradedMap,
                                 T1: GradedMap, T2: GradedMap,
                                 T34: GradedMap) -> dict:
    """h_T = (-1)^{n-1} (T34(x_{n-1} cup y_{m-1}), 0).

    Hypotheses (all checked): T1, T2, T34 commute with the phis, and the
    square T34 . cup13 = cup24 . s12 . (T1 (x) T2) commutes strictly.
    Returns the dict with the two total composites and the verified homotopy
    witnessing cup24^T . s12 . (T1 (x) T2) - T34 . cup13^T = d h + h d.
    """
    tvA12 = tensor(t1.A, t2.A)
    tvA21 = tensor(t2.A, t1.A)
    for (T, t, name) in ((T1, t1, "T1"), (T2, t2, "T2")):
        if not (t.phi.then(T) == T.then(t.phi)):
            raise VerificationError(f"{name} . phi = phi . {name}", 0)
    if not (t3.phi.then(T34) == T34.then(t4.phi)):
        raise VerificationError("T34 . phi3 = phi4 . T34", 0)
    square_lhs = cup13.then(T34)
    square_rhs = tensor_chain_maps(tvA12, tvA12, T1, T2) \
        .then(transposition_s12(tvA12, tvA21)).then(cup24)
    if square_lhs != square_rhs:
        raise VerificationError("strict square T34 . cup = cup . s12 . (T1 x T2)",
                                min(square_lhs.degrees() or [0]))
    ring = cup13.ring
    T12 = tensor(t1.complex, t2.complex)
    T21 = tensor(t2.complex, t1.complex)
    # the two total composites
    cup13_T = cup_total(t1, t2, t3, cup13)
    cup24_T = cup_total(t2, t1, t4, cup24)
    T1_total = t1.total_map(t1, T1)
    T2_total = t2.total_map(t2, T2)
    T34_total = t3.total_map(t4, T34)
    route1 = cup13_T.then(T34_total)
    route2 = tensor_chain_maps(T12, T12, T1_total, T2_total) \
        .then(transposition_s12(T12, T21)).then(cup24_T)
    # the homotopy
    comps = {}
    for N in T12.complex.degrees():
        total_piece = None
        for (n, m) in T12.blocks(N):
            if not (t1.B.term(n - 1) and t2.B.term(m - 1)):
                continue
            rhsM = _cup_block(cup13, tvA12, n - 1, m - 1) * \
                t1.emb.comp(n - 1).kron(t2.emb.comp(m - 1))
            rhsM = T34.comp(n + m - 2) * rhsM
            X = _solve_block_through(t4.emb.comp(N - 2), rhsM,
                                     "T34 . cup into previous summand", (n - 1, m - 1))
            sgn = ring.coerce((-1) ** ((n - 1) % 2))
            M = t4.inject_prev(N - 1) * X.scale(sgn) * \
                t1.project_prev(n).kron(t2.project_prev(m)) * T12.project_block(N, n)
            total_piece = M if total_piece is None else total_piece + M
        if total_piece is not None:
            comps[N] = total_piece
    h_T = GradedMap(T12.complex, t4.complex, -1, comps)
    verify_homotopy(h_T, route1, route2, "transposition homotopy on totals")
    return {"cup13_total": cup13_T, "cup24_total": cup24_T,
            "T_totals": (T1_total, T2_total, T34_total),
            "route_T_cup": route1, "route_cup_s12_TT": route2,
            "homotopy": h_T}


# ---------------------------------------------------------------------------
# factor-shifted tensors
# ---------------------------------------------------------------------------

def factor_shift_first(tv_shifted: TensorView, tv_plain: TensorView) -> GradedMap:
    """The chain isomorphism Z1[1] (x) Z2 -> (Z1 (x) Z2)[1] (sign-free)."""
    ring = tv_plain.complex.ring
    target = tv_plain.complex.shift(1)
    comps = {}
    for N in tv_shifted.complex.degrees():
        piece = None
        for (i, j) in tv_shifted.blocks(N):
            # block (i, j) of Z1[1] (x) Z2 is Z1^{i+1} (x) Z2^j,
            # i.e. block (i+1, j) of degree N+1 in the plain tensor
            size = tv_shifted.A.term(i) * tv_shifted.B.term(j)
            M = tv_plain.embed_block(N + 1, i + 1) * Matrix.identity(ring, size) \
                * tv_shifted.project_block(N, i)
            piece = M if piece is None else piece + M
        if piece is not None:
            comps[N] = piece
    out = GradedMap(tv_shifted.complex, target, 0, comps)
    verify_chain_map(out, "first-factor shift identification")
    return out


def factor_shift_second(tv_shifted: TensorView, tv_plain: TensorView) -> GradedMap:
    """The chain isomorphism Z1 (x) Z2[1] -> (Z1 (x) Z2)[1], sign (-1)^i."""
    ring = tv_plain.complex.ring
    target = tv_plain.complex.shift(1)
    comps = {}
    for N in tv_shifted.complex.degrees():
        piece = None
        for (i, j) in tv_shifted.blocks(N):
            size = tv_shifted.A.term(i) * tv_shifted.B.term(j)
            blk = Matrix.identity(ring, size)
            if i % 2:
                blk = blk.scale(ring.coerce(-1))
            M = tv_plain.embed_block(N + 1, i) * blk * tv_shifted.project_block(N, i)
            piece = M if piece is None else piece + M
        if piece is not None:
            comps[N] = piece
    out = GradedMap(tv_shifted.complex, target, 0, comps)
    verify_chain_map(out, "second-factor shift identification")
    return out


# ---------------------------------------------------------------------------
# E-complexes (cones of A (+) B -> C, shifted)
# ---------------------------------------------------------------------------

class EView:
    """E^n = A^n (+) B^n (+) C^{n-1}, d(a,b,c) = (da, db, -f(a) + g(b) - dc)."""

    def __init__(self, f: GradedMap, g: GradedMap):
        verify_chain_map(f, "f: A -> C")
        verify_chain_map(g, "g: B -> C")
        if f.target != g.target:
            raise LinAlgError("f and g must share a target")
        self.f, self.g = f, g
        A, B, C = f.source, g.source, f.target
        self.A, self.B, self.C = A, B, C
        ring = A.ring
        terms = {}
        degs = set(A.degrees()) | set(B.degrees()) | {n + 1 for n in C.degrees()}
        for n in degs:
            r = A.term(n) + B.term(n) + C.term(n - 1)
            if r:
                terms[n] = r
        diffs = {}
        minus_one = ring.coerce(-1)
        for n in sorted(terms):
            rows = A.term(n + 1) + B.term(n + 1) + C.term(n)
            cols = A.term(n) + B.term(n) + C.term(n - 1)
            if rows == 0 or cols == 0:
                continue
            za = Matrix.zero
            row1 = A.d(n).hstack(za(ring, A.term(n + 1), B.term(n))) \
                .hstack(za(ring, A.term(n + 1), C.term(n - 1)))
            row2 = za(ring, B.term(n + 1), A.term(n)).hstack(B.d(n)) \
                .hstack(za(ring, B.term(n + 1), C.term(n - 1)))
            row3 = f.comp(n).scale(minus_one).hstack(g.comp(n)) \
                .hstack(C.d(n - 1).scale(minus_one))
            diffs[n] = row1.vstack(row2).vstack(row3)
        self.complex = Complex(ring, terms, diffs)

    def _sizes(self, n):
        return self.A.term(n), self.B.term(n), self.C.term(n - 1)

    def inject_A(self, n: int) -> Matrix:
        a, b, c = self._sizes(n)
        ring = self.A.ring
        return Matrix.identity(ring, a).vstack(Matrix.zero(ring, b + c, a))

    def inject_B(self, n: int) -> Matrix:
        a, b, c = self._sizes(n)
        ring = self.A.ring
        return Matrix.zero(ring, a, b).vstack(Matrix.identity(ring, b)) \
            .vstack(Matrix.zero(ring, c, b))

    def inject_C(self, n: int) -> Matrix:
        a, b, c = self._sizes(n)
        ring = self.A.ring
        return Matrix.zero(ring, a + b, c).vstack(Matrix.identity(ring, c))

    def project_A(self, n: int) -> Matrix:
        return self.inject_A(n).transpose()

    def project_B(self, n: int) -> Matrix:
        return self.inject_B(n).transpose()

    def project_C(self, n: int) -> Matrix:
        return self.inject_C(n).transpose()

    def projection_to_A(self) -> GradedMap:
        return GradedMap(self.complex, self.A, 0,
                         {n: self.project_A(n) for n in self.complex.degrees()})

    def projection_to_B(self) -> GradedMap:
        return GradedMap(self.complex, self.B, 0,
                         {n: self.project_B(n) for n in self.complex.degrees()})

    def inclusion_of_shifted_C(self) -> GradedMap:
        """C[-1] -> E is a chain map up to the sign built into d_E; exposed raw."""
        return GradedMap(self.C.shift(-1), self.complex, 0,
                         {n: self.inject_C(n) for n in self.complex.degrees()
                          if self.C.term(n - 1)})


def build_E(f: GradedMap, g: GradedMap) -> EView:
    return EView(f, g)


# ---------------------------------------------------------------------------
# product data (P1-3)
# ---------------------------------------------------------------------------

@dataclass
class ProductDatum:
    """The data P1-3: diagrams A_i -f_i-> C_i <-g_i- B_i, cups, h_f, h_g."""

    A: tuple
    B: tuple
    C: tuple
    f: tuple
    g: tuple
    cup_A: GradedMap
    cup_B: GradedMap
    cup_C: GradedMap
    h_f: GradedMap
    h_g: GradedMap
    _tv: dict = field(default_factory=dict, repr=False)
    _E: dict = field(default_factory=dict, repr=False)

    def tv(self, kind: str) -> TensorView:
        if kind not in self._tv:
            triple = {"A": self.A, "B": self.B, "C": self.C}[kind]
            self._tv[kind] = tensor(triple[0], triple[1])
        return self._tv[kind]

    def E(self, i: int) -> EView:
        if i not in self._E:
            self._E[i] = build_E(self.f[i - 1], self.g[i - 1])
        return self._E[i]

    def tvE(self) -> TensorView:
        if "E" not in self._tv:
            self._tv["E"] = tensor(self.E(1).complex, self.E(2).complex)
        return self._tv["E"]

    def check(self) -> dict:
        """Per-condition report for P1-3; values are (ok, failing_degree)."""
        report = {}

        def item(name, defect):
            report[name] = (not defect, min(defect) if defect else None)

        for i in range(3):
            item(f"P1: f_{i + 1} chain map", chain_map_defect(self.f[i]))
            item(f"P1: g_{i + 1} chain map", chain_map_defect(self.g[i]))
        item("P2: cup_A chain map", chain_map_defect(self.cup_A))
        item("P2: cup_B chain map", chain_map_defect(self.cup_B))
        item("P2: cup_C chain map", chain_map_defect(self.cup_C))
        tvA, tvB, tvC = self.tv("A"), self.tv("B"), self.tv("C")
        lhs_f = tensor_chain_maps(tvA, tvC, self.f[0], self.f[1]).then(self.cup_C)
        rhs_f = self.cup_A.then(self.f[2])
        item("P3: h_f homotopy", homotopy_defect(self.h_f, lhs_f, rhs_f))
        lhs_g = tensor_chain_maps(tvB, tvC, self.g[0], self.g[1]).then(self.cup_C)
        rhs_g = self.cup_B.then(self.g[2])
        item("P3: h_g homotopy", homotopy_defect(self.h_g, lhs_g, rhs_g))
        return report

    def require_valid(self):
        report = self.check()
        for name, (ok, deg) in report.items():
            if not ok:
                raise VerificationError(name, deg)

    def to_json(self):
        def triple(t):
            return [c.to_json() for c in t]

        return {"A": triple(self.A), "B": triple(self.B), "C": triple(self.C),
                "f": [m.to_json() for m in self.f],
                "g": [m.to_json() for m in self.g],
                "cup_A": self.cup_A.to_json(), "cup_B": self.cup_B.to_json(),
                "cup_C": self.cup_C.to_json(),
                "h_f": self.h_f.to_json(), "h_g": self.h_g.to_json()}

    @staticmethod
    def from_json(obj) -> "ProductDatum":
        A = tuple(Complex.from_json(c) for c in obj["A"])
        B = tuple(Complex.from_json(c) for c in obj["B"])
        C = tuple(Complex.from_json(c) for c in obj["C"])
        f = tuple(GradedMap.from_json(A[i], C[i], obj["f"][i]) for i in range(3))
        g = tuple(GradedMap.from_json(B[i], C[i], obj["g"][i]) for i in range(3))
        tvA, tvB, tvC = tensor(A[0], A[1]), tensor(B[0], B[1]), tensor(C[0], C[1])
        cup_A = GradedMap.from_json(tvA.complex, A[2], obj["cup_A"])
        cup_B = GradedMap.from_json(tvB.complex, B[2], obj["cup_B"])
        cup_C = GradedMap.from_json(tvC.complex, C[2], obj["cup_C"])
        h_f = GradedMap.from_json(tvA.complex, C[2], obj["h_f"])
        h_g = GradedMap.from_json(tvB.complex, C[2], obj["h_g"])
        return ProductDatum(A, B, C, f, g, cup_A, cup_B, cup_C, h_f, h_g)


def cup_r_h(pd: ProductDatum, r) -> GradedMap:
    """The product E_1 (x) E_2 -> E_3:

    (a,b,c) cup (a',b',c') = (a cup a', b cup b',
    c cup (r f2(a') + (1-r) g2(b')) + (-1)^n ((1-r) f1(a) + r g1(b)) cup c'
    - (h_f(a (x) a') - h_g(b (x) b'))).
    """
    ring = pd.cup_A.ring
    r = ring.coerce(r)
    one_minus_r = ring.sub(ring.one, r)
    E1, E2, E3 = pd.E(1), pd.E(2), pd.E(3)
    tvE = pd.tvE()
    tvA, tvB, tvC = pd.tv("A"), pd.tv("B"), pd.tv("C")
    f1, f2, _ = pd.f
    g1, g2, _ = pd.g
    comps = {}
    for N in tvE.complex.degrees():
        piece = None
        for (n, m) in tvE.blocks(N):
            proj = tvE.project_block(N, n)
            pA1, pB1, pC1 = E1.project_A(n), E1.project_B(n), E1.project_C(n)
            pA2, pB2, pC2 = E2.project_A(m), E2.project_B(m), E2.project_C(m)
            sgn_n = ring.coerce((-1) ** (n % 2))
            parts = []
            # A- and B-parts
            blk = _cup_block(pd.cup_A, tvA, n, m)
            if blk.nrows and blk.ncols:
                parts.append(E3.inject_A(N) * blk * pA1.kron(pA2))
            blk = _cup_block(pd.cup_B, tvB, n, m)
            if blk.nrows and blk.ncols:
                parts.append(E3.inject_B(N) * blk * pB1.kron(pB2))
            # C-part (C_3^{N-1})
            injC = E3.inject_C(N)
            # c cup (r f2(a') + (1-r) g2(b'))
            blk = _cup_block(pd.cup_C, tvC, n - 1, m)
            if blk.nrows and blk.ncols:
                parts.append(injC * blk *
                             pC1.kron(f2.comp(m) * pA2).scale(r))
                parts.append(injC * blk *
                             pC1.kron(g2.comp(m) * pB2).scale(one_minus_r))
            # (-1)^n ((1-r) f1(a) + r g1(b)) cup c'
            blk = _cup_block(pd.cup_C, tvC, n, m - 1)
            if blk.nrows and blk.ncols:
                parts.append(injC * blk *
                             (f1.comp(n) * pA1).kron(pC2)
                             .scale(ring.mul(sgn_n, one_minus_r)))
                parts.append(injC * blk *
                             (g1.comp(n) * pB1).kron(pC2)
                             .scale(ring.mul(sgn_n, r)))
            # -(h_f(a (x) a') - h_g(b (x) b'))
            blk = _cup_block(pd.h_f, tvA, n, m)
            if blk.nrows and blk.ncols:
                parts.append(injC * blk.scale(ring.coerce(-1)) * pA1.kron(pA2))
            blk = _cup_block(pd.h_g, tvB, n, m)
            if blk.nrows and blk.ncols:
                parts.append(injC * blk * pB1.kron(pB2))
            for M in parts:
                M = M * proj
                piece = M if piece is None else piece + M
        if piece is not None:
            comps[N] = piece
    out = GradedMap(tvE.complex, E3.complex, 0, comps)
    verify_chain_map(out, "cup_{r,h} on E-complexes")
    return out


def homotopy_k(pd: ProductDatum, r1, r2) -> GradedMap:
    """k = (0, 0, (-1)^n (r1 - r2) c cup_C c'): cup_{r1,h} ~> cup_{r2,h}."""
    ring = pd.cup_C.ring
    delta = ring.sub(ring.coerce(r1), ring.coerce(r2))
    E1, E2, E3 = pd.E(1), pd.E(2), pd.E(3)
    tvE = pd.tvE()
    tvC = pd.tv("C")
    comps = {}
    for N in tvE.complex.degrees():
        piece = None
        for (n, m) in tvE.blocks(N):
            blk = _cup_block(pd.cup_C, tvC, n - 1, m - 1)
            if blk.nrows == 0 or blk.ncols == 0:
                continue
            sgn = ring.mul(ring.coerce((-1) ** (n % 2)), delta)
            M = E3.inject_C(N - 1) * blk.scale(sgn) * \
                E1.project_C(n).kron(E2.project_C(m)) * tvE.project_block(N, n)
            piece = M if piece is None else piece + M
        if piece is not None:
            comps[N] = piece
    return GradedMap(tvE.complex, E3.complex, -1, comps)


def homotopy_s(pd: ProductDatum, alpha: GradedMap, beta: GradedMap) -> GradedMap:
    """s = (0, 0, alpha(a (x) a') - beta(b (x) b')): cup_{r,h} ~> cup_{r,h'}.

    alpha and beta are second-order homotopies in the d-commutator
    normalization: d alpha - alpha d = h_f' - h_f and likewise for beta
    (i.e. d_commutator(alpha) = h_f' - h_f).
    """
    ring = pd.cup_C.ring
    E1, E2, E3 = pd.E(1), pd.E(2), pd.E(3)
    tvE = pd.tvE()
    tvA, tvB = pd.tv("A"), pd.tv("B")
    comps = {}
    for N in tvE.complex.degrees():
        piece = None
        for (n, m) in tvE.blocks(N):
            parts = []
            blk = _cup_block(alpha, tvA, n, m)
            if blk.nrows and blk.ncols:
                parts.append(E3.inject_C(N - 1) * blk *
                             E1.project_A(n).kron(E2.project_A(m)))
            blk = _cup_block(beta, tvB, n, m)
            if blk.nrows and blk.ncols:
                parts.append(E3.inject_C(N - 1) * blk.scale(ring.coerce(-1)) *
                             E1.project_B(n).kron(E2.project_B(m)))
            for M in parts:
                M = M * tvE.project_block(N, n)
                piece = M if piece is None else piece + M
        if piece is not None:
            comps[N] = piece
    return GradedMap(tvE.complex, E3.complex, -1, comps)


# ---------------------------------------------------------------------------
# transposition data (T1-7)
# ---------------------------------------------------------------------------

@dataclass
class TranspositionDatum:
    """The data T1-7 on top of a ProductDatum and its factor-swapped partner.

    ``pd_swap`` has complexes (A2, A1, A3) etc., cups cup'_Z (T2) and
    homotopies h' (T3).  TZ[i] are the transposition endomorphisms (T1),
    U/V the T4 homotopies, tZ the T5 homotopies, Hf/Hg the T6-7
    second-order homotopies.
    """

    pd: ProductDatum
    pd_swap: ProductDatum
    TA: tuple
    TB: tuple
    TC: tuple
    U: tuple
    V: tuple
    tA: GradedMap
    tB: GradedMap
    tC: GradedMap
    Hf: GradedMap
    Hg: GradedMap

    def check(self) -> dict:
        report = {}

        def item(name, defect):
            report[name] = (not defect, min(defect) if defect else None)

        pd, pds = self.pd, self.pd_swap
        for i in range(3):
            item(f"T1: T_A,{i + 1} chain map", chain_map_defect(self.TA[i]))
            item(f"T1: T_B,{i + 1} chain map", chain_map_defect(self.TB[i]))
            item(f"T1: T_C,{i + 1} chain map", chain_map_defect(self.TC[i]))
        item("T2: cup'_A chain map", chain_map_defect(pds.cup_A))
        item("T2: cup'_B chain map", chain_map_defect(pds.cup_B))
        item("T2: cup'_C chain map", chain_map_defect(pds.cup_C))
        # T3 is P3 of the swapped datum
        sub = pds.check()
        item("T3: h'_f homotopy", {} if sub["P3: h_f homotopy"][0]
             else {sub["P3: h_f homotopy"][1]: 1})
        item("T3: h'_g homotopy", {} if sub["P3: h_g homotopy"][0]
             else {sub["P3: h_g homotopy"][1]: 1})
        for i in range(3):
            lhs = self.TA[i].then(pd.f[i])
            rhs = pd.f[i].then(self.TC[i])
            item(f"T4: U_{i + 1}", homotopy_defect(self.U[i], lhs, rhs))
            lhs = self.TB[i].then(pd.g[i])
            rhs = pd.g[i].then(self.TC[i])
            item(f"T4: V_{i + 1}", homotopy_defect(self.V[i], lhs, rhs))
        for (Z, tz, Ts) in (("A", self.tA, self.TA), ("B", self.tB, self.TB),
                            ("C", self.tC, self.TC)):
            tv12 = pd.tv(Z)
            tv21 = pds.tv(Z)
            cup, cupp = getattr(pd, f"cup_{Z}"), getattr(pds, f"cup_{Z}")
            lhs = tensor_chain_maps(tv12, tv12, Ts[0], Ts[1]) \
                .then(transposition_s12(tv12, tv21)).then(cupp)
            rhs = cup.then(Ts[2])
            item(f"T5: t_{Z}", homotopy_defect(tz, lhs, rhs))
        item("T6: H_f", self._cube_defect("f"))
        item("T7: H_g", self._cube_defect("g"))
        return report

    def _cube_rhs(self, which: str) -> GradedMap:
        """The six-term right-hand side of the T6/T7 identity."""
        pd, pds = self.pd, self.pd_swap
        if which == "f":
            Z, TZ, W, h, hp, tz = "A", self.TA, self.U, pd.h_f, pds.h_f, self.tA
            maps = pd.f
        else:
            Z, TZ, W, h, hp, tz = "B", self.TB, self.V, pd.h_g, pds.h_g, self.tB
            maps = pd.g
        tvZ12 = pd.tv(Z)
        tvZ21 = pds.tv(Z)
        tvC12 = pd.tv("C")
        tvC21 = pds.tv("C")
        s12_Z = transposition_s12(tvZ12, tvZ21)
        s12_C = transposition_s12(tvC12, tvC21)
        m1, m2, m3 = maps
        # (W1 (x) W2)_1: (m1 TZ1) (x) (m2 TZ2) ~> (TC1 m1) (x) (TC2 m2)
        W12 = tensor_homotopy_first(tvZ12, tvC12, W[0], W[1],
                                    TZ[1].then(m2), m1.then(self.TC[0]))
        rhs = (tensor_chain_maps(tvZ12, tvC12, m1, m2).then(self.tC).scale(-1)
               - h.then(self.TC[2])
               + getattr(pd, f"cup_{Z}").then(W[2])
               + tz.then(pds.f[2] if which == "f" else pds.g[2])
               + tensor_chain_maps(tvZ12, tvZ12, TZ[0], TZ[1]).then(s12_Z).then(hp)
               - W12.then(s12_C.then(pds.cup_C)))
        return rhs

    def _cube_defect(self, which: str) -> dict:
        H = self.Hf if which == "f" else self.Hg
        rhs = self._cube_rhs(which)
        lhs = d_commutator(H)
        out = {}
        for n in set(lhs.degrees()) | set(rhs.degrees()):
            M = lhs.comp(n) - rhs.comp(n)
            if not M.is_zero():
                out[n] = M
        return out

    def require_valid(self):
        for name, (ok, deg) in self.check().items():
            if not ok:
                raise VerificationError(name, deg)


def transposition_E(td: TranspositionDatum, r=0) -> dict:
    """The maps T_i: E_i -> E_i and the homotopy of the product square.

    T_i(a,b,c) = (T_A a, T_B b, T_C c + U_i(a) - V_i(b)).  Also solves and
    verifies a homotopy between T_3 . cup_{r,h} and
    cup'_{1-r,h'} . s12 . (T_1 (x) T_2).
    """
    pd, pds = td.pd, td.pd_swap
    ring = pd.cup_A.ring
    Ts = []
    for i in range(3):
        E = pd.E(i + 1)
        comps = {}
        for n in E.complex.degrees():
            M = (E.inject_A(n) * td.TA[i].comp(n) * E.project_A(n)
                 + E.inject_B(n) * td.TB[i].comp(n) * E.project_B(n)
                 + E.inject_C(n) * td.TC[i].comp(n - 1) * E.project_C(n)
                 + E.inject_C(n) * td.U[i].comp(n) * E.project_A(n)
                 - E.inject_C(n) * td.V[i].comp(n) * E.project_B(n))
            comps[n] = M
        T = GradedMap(E.complex, E.complex, 0, comps)
        verify_chain_map(T, f"T_{i + 1} on E")
        Ts.append(T)
    cup1 = cup_r_h(pd, r)
    cup2 = cup_r_h(pds, ring.sub(ring.one, ring.coerce(r)))
    tvE12 = pd.tvE()
    tvE21 = pds.tvE()
    route1 = cup1.then(Ts[2])
    route2 = tensor_chain_maps(tvE12, tvE12, Ts[0], Ts[1]) \
        .then(transposition_s12(tvE12, tvE21)).then(cup2)
    h_square = solve_homotopy(route1, route2)
    if h_square is None:
        raise VerificationError("product transposition square has no homotopy", 0)
    verify_homotopy(h_square, route1, route2, "product transposition square")
    return {"T": tuple(Ts), "cup": cup1, "cup_swapped": cup2,
            "route_T3_cup": route1, "route_cup_s12": route2,
            "square_homotopy": h_square}


# ---------------------------------------------------------------------------
# Bockstein data (B1-5)
# ---------------------------------------------------------------------------

def shifted_cup_first(cup: GradedMap, tv_shifted: TensorView) -> GradedMap:
    """Z1[1] (x) Z2 -> Z3[1] induced by cup (sign-free)."""
    tv_plain = tensor(tv_shifted.A.shift(-1), tv_shifted.B)
    sigma = factor_shift_first(tv_shifted, tv_plain)
    return sigma.then(cup.shift(1).with_endpoints(tv_plain.complex.shift(1),
                                                  cup.target.shift(1)))


def shifted_cup_second(cup: GradedMap, tv_shifted: TensorView) -> GradedMap:
    """Z1 (x) Z2[1] -> Z3[1] induced by cup (sign (-1)^{first degree})."""
    tv_plain = tensor(tv_shifted.A, tv_shifted.B.shift(-1))
    sigma = factor_shift_second(tv_shifted, tv_plain)
    return sigma.then(cup.shift(1).with_endpoints(tv_plain.complex.shift(1),
                                                  cup.target.shift(1)))


@dataclass
class BocksteinDatum:
    """The data B1-5 on top of a ProductDatum.

    beta_Z[i]: Z_i -> Z_i[1] (chain maps into the shift, i = 1, 2);
    u/v: the B2 homotopies; hA/hB/hC: the B3 homotopies; Kf/Kg: the B4-5
    second-order homotopies.
    """

    pd: ProductDatum
    beta_A: tuple
    beta_B: tuple
    beta_C: tuple
    u: tuple
    v: tuple
    hA: GradedMap
    hB: GradedMap
    hC: GradedMap
    Kf: GradedMap
    Kg: GradedMap

    def _b3_pair(self, Z: str):
        """(m_right, m_left) = (cup[1].(id x beta2), cup[1].(beta1 x id))."""
        pd = self.pd
        triple = {"A": pd.A, "B": pd.B, "C": pd.C}[Z]
        betas = {"A": self.beta_A, "B": self.beta_B, "C": self.beta_C}[Z]
        cup = getattr(pd, f"cup_{Z}")
        tv12 = pd.tv(Z)
        tv_s2 = tensor(triple[0], triple[1].shift(1))
        tv_s1 = tensor(triple[0].shift(1), triple[1])
        m_right = tensor_chain_maps(tv12, tv_s2, identity_map(triple[0]), betas[1]) \
            .then(shifted_cup_second(cup, tv_s2))
        m_left = tensor_chain_maps(tv12, tv_s1, betas[0], identity_map(triple[1])) \
            .then(shifted_cup_first(cup, tv_s1))
        return m_right, m_left

    def check(self) -> dict:
        report = {}

        def item(name, defect):
            report[name] = (not defect, min(defect) if defect else None)

        pd = self.pd
        for (Z, betas) in (("A", self.beta_A), ("B", self.beta_B), ("C", self.beta_C)):
            for i in (0, 1):
                item(f"B1: beta_{Z},{i + 1} chain map", chain_map_defect(betas[i]))
        for i in (0, 1):
            lhs = self.beta_A[i].then(pd.f[i].shift(1))
            rhs = pd.f[i].then(self.beta_C[i])
            item(f"B2: u_{i + 1}", homotopy_defect(self.u[i], lhs, rhs))
            lhs = self.beta_B[i].then(pd.g[i].shift(1))
            rhs = pd.g[i].then(self.beta_C[i])
            item(f"B2: v_{i + 1}", homotopy_defect(self.v[i], lhs, rhs))
        for (Z, hZ) in (("A", self.hA), ("B", self.hB), ("C", self.hC)):
            m_right, m_left = self._b3_pair(Z)
            item(f"B3: h_{Z}", homotopy_defect(hZ, m_right, m_left))
        item("B4: K_f", self._square_defect("f"))
        item("B5: K_g", self._square_defect("g"))
        return report

    def _route_pair(self, which: str):
        """The two composite homotopies the B4/B5 second-order datum relates.

        Both run from cup_C[1].(f1 (x) beta_{C,2} f2)-type corner maps; route A
        is h_C . (f1 (x) f2), route B walks around the cube through the
        A-level h_Z and the u-homotopies.
        """
        pd = self.pd
        if which == "f":
            maps, u_pair, h_fg, hZ = pd.f, self.u, pd.h_f, self.hA
            betasZ, Z = self.beta_A, "A"
        else:
            maps, u_pair, h_fg, hZ = pd.g, self.v, pd.h_g, self.hB
            betasZ, Z = self.beta_B, "B"
        triple = {"A": pd.A, "B": pd.B}[Z]
        m1, m2, m3 = maps
        tvZ = pd.tv(Z)
        tvC = pd.tv("C")
        tvC_s1 = tensor(pd.C[0].shift(1), pd.C[1])
        tvC_s2 = tensor(pd.C[0], pd.C[1].shift(1))
        tvZ_s1 = tensor(triple[0].shift(1), triple[1])
        tvZ_s2 = tensor(triple[0], triple[1].shift(1))
        # route A: h_C . (f1 (x) f2)
        routeA = tensor_chain_maps(tvZ, tvC, m1, m2).then(self.hC)
        # route B pieces
        # G1 = cup_C,2-shifted . (0 (x) u2)_1,
        #   (0 (x) u2)_1 (x (x) y) = (-1)^{|x|} f1(x) (x) u2(y)
        zero_h1 = zero_map(triple[0], pd.C[0], -1)
        G1 = tensor_homotopy_first(tvZ, tvC_s2, zero_h1, u_pair[1],
                                   betasZ[1].then(m2.shift(1)), m1) \
            .then(shifted_cup_second(pd.cup_C, tvC_s2))
        # H1 = h_fg[1] . (id (x) beta_{Z,2}) via the second-factor shift
        sigma2 = factor_shift_second(tvZ_s2, tvZ)
        H1 = tensor_chain_maps(tvZ, tvZ_s2, identity_map(triple[0]), betasZ[1]) \
            .then(sigma2).then(h_fg.shift(1))
        # H2 = m3[1] . h_Z
        H2 = hZ.then(m3.shift(1))
        # H3 = -(h_fg[1] . (beta_{Z,1} (x) id))
        sigma1 = factor_shift_first(tvZ_s1, tvZ)
        H3 = tensor_chain_maps(tvZ, tvZ_s1, betasZ[0], identity_map(triple[1])) \
            .then(sigma1).then(h_fg.shift(1)).scale(-1)
        # G2 = cup_C,1-shifted . (u1 (x) 0)_1,
        #   (u1 (x) 0)_1 (x (x) y) = u1(x) (x) f2(y)
        zero_h2 = zero_map(triple[1], pd.C[1], -1)
        G2 = tensor_homotopy_first(tvZ, tvC_s1, u_pair[0], zero_h2,
                                   m2, m1.then(self.beta_C[0])) \
            .then(shifted_cup_first(pd.cup_C, tvC_s1))
        routeB = G1.scale(-1) + H1 + H2 + H3 + G2
        return routeA, routeB

    def _square_defect(self, which: str) -> dict:
        K = self.Kf if which == "f" else self.Kg
        routeA, routeB = self._route_pair(which)
        # K d - d K = routeA - routeB
        lhs = d_commutator(K).scale(-1)
        out = {}
        for n in set(lhs.degrees()) | set(routeA.degrees()) | set(routeB.degrees()):
            M = lhs.comp(n) - (routeA.comp(n) - routeB.comp(n))
            if not M.is_zero():
                out[n] = M
        return out

    def require_valid(self):
        for name, (ok, deg) in self.check().items():
            if not ok:
                raise VerificationError(name, deg)


def bockstein_E(bd: BocksteinDatum, i: int) -> GradedMap:
    """beta_E(a,b,c) = (beta_A a, beta_B b, -beta_C c - u(a) + v(b)): E -> E[1]."""
    pd = bd.pd
    E = pd.E(i)
    ring = E.complex.ring
    bA, bB, bC = bd.beta_A[i - 1], bd.beta_B[i - 1], bd.beta_C[i - 1]
    u, v = bd.u[i - 1], bd.v[i - 1]
    target = E.complex.shift(1)
    comps = {}
    for n in E.complex.degrees():
        # E[1]^n = E^{n+1} = A^{n+1} (+) B^{n+1} (+) C^n
        M = (E.inject_A(n + 1) * bA.comp(n) * E.project_A(n)
             + E.inject_B(n + 1) * bB.comp(n) * E.project_B(n)
             - E.inject_C(n + 1) * bC.comp(n - 1) * E.project_C(n)
             - E.inject_C(n + 1) * u.comp(n) * E.project_A(n)
             + E.inject_C(n + 1) * v.comp(n) * E.project_B(n))
        comps[n] = M
    out = GradedMap(E.complex, target, 0, comps)
    verify_chain_map(out, f"beta_E on E_{i}")
    return out


def bockstein_E_square_witness(bd: BocksteinDatum, r=0) -> dict:
    """Witness for: cup_{r,h}[1] . (beta_{E,1} (x) id) ~ cup_{r,h}[1] . (id (x) beta_{E,2}).

    Solves the homotopy linearly and verifies it.
    """
    pd = bd.pd
    E1, E2 = pd.E(1), pd.E(2)
    tvE = pd.tvE()
    beta1 = bockstein_E(bd, 1)
    beta2 = bockstein_E(bd, 2)
    cup = cup_r_h(pd, r)
    tv_s1 = tensor(E1.complex.shift(1), E2.complex)
    tv_s2 = tensor(E1.complex, E2.complex.shift(1))
    m_left = tensor_chain_maps(tvE, tv_s1, beta1, identity_map(E2.complex)) \
        .then(shifted_cup_first(cup, tv_s1))
    m_right = tensor_chain_maps(tvE, tv_s2, identity_map(E1.complex), beta2) \
        .then(shifted_cup_second(cup, tv_s2))
    h = solve_homotopy(m_right, m_left)
    if h is None:
        raise VerificationError("Bockstein square on E has no homotopy", 0)
    verify_homotopy(h, m_right, m_left, "Bockstein square on E")
    return {"beta_E": (beta1, beta2), "left": m_left, "right": m_right,
            "homotopy": h}


def check_conditions(datum, package: str | None = None) -> dict:
    """Per-condition report for a Product/Transposition/Bockstein datum.

    ``package`` ("P", "T", or "B") is validated against the datum type when
    given.  Returns {condition name: (ok, failing_degree_or_None)}.
    """
    expected = {ProductDatum: "P", TranspositionDatum: "T", BocksteinDatum: "B"}
    kind = expected.get(type(datum))
    if kind is None:
        raise LinAlgError(f"not a checkable datum: {type(datum).__name__}")
    if package is not None and package != kind:
        raise LinAlgError(f"datum carries the {kind}-conditions, not {package}")
    return datum.check()


# ---------------------------------------------------------------------------
# random data generators
# ---------------------------------------------------------------------------

def _perturbed_identity(C: Complex, rng: random.Random) -> tuple:
    """(f, k) with f = id + (d k + k d), so k: id ~> f."""
    k = random_graded_map(C, C, -1, rng, height=2)
    return identity_map(C) + homotopy_boundary(k), k


def random_product_datum(ring: Ring, rng: random.Random,
                         deg_hi: int = 1, max_spheres: int = 2,
                         max_disks: int = 1) -> ProductDatum:
    """A random verified P1-3 datum.

    Built perturbatively: A_i = B_i = C_i as complexes, f_i and g_i homotopic
    to the identity with tracked homotopies, cups differing from a common
    random cup by tracked boundaries, so that h_f and h_g have closed forms.
    """
    C = tuple(random_complex(ring, rng, 0, deg_hi,
                             spheres=rng.randint(1, max_spheres),
                             disks=rng.randint(0, max_disks))
              for _ in range(3))
    tvC = tensor(C[0], C[1])
    cup_C = random_chain_map(tvC.complex, C[2], rng)
    fs, ks = zip(*(_perturbed_identity(C[i], rng) for i in range(3)))
    gs, ls = zip(*(_perturbed_identity(C[i], rng) for i in range(3)))
    wA = random_graded_map(tvC.complex, C[2], -1, rng, height=2)
    wB = random_graded_map(tvC.complex, C[2], -1, rng, height=2)
    cup_A = cup_C + homotopy_boundary(wA)
    cup_B = cup_C + homotopy_boundary(wB)
    idC2 = identity_map(C[1])
    # k-homotopy id (x) id ~> f1 (x) f2, then compose with cup_C; plus f3-side
    h1 = tensor_homotopy_first(tvC, tvC, ks[0], ks[1], idC2, fs[0])
    h_f = h1.then(cup_C).scale(-1) + cup_C.then(ks[2]) + wA.then(fs[2])
    h1g = tensor_homotopy_first(tvC, tvC, ls[0], ls[1], idC2, gs[0])
    h_g = h1g.then(cup_C).scale(-1) + cup_C.then(ls[2]) + wB.then(gs[2])
    pd = ProductDatum(C, C, C, tuple(fs), tuple(gs), cup_A, cup_B, cup_C, h_f, h_g)
    return pd


def swapped_product_datum(pd: ProductDatum, rng: random.Random) -> ProductDatum:
    """A T2-3 partner of pd: cups on swapped factors, witnesses solved."""
    A = (pd.A[1], pd.A[0], pd.A[2])
    B = (pd.B[1], pd.B[0], pd.B[2])
    C = (pd.C[1], pd.C[0], pd.C[2])
    f = (pd.f[1], pd.f[0], pd.f[2])
    g = (pd.g[1], pd.g[0], pd.g[2])
    out_cups = {}
    for Z, triple in (("A", A), ("B", B), ("C", C)):
        tv21 = tensor(triple[0], triple[1])
        tv12 = {"A": pd.tv("A"), "B": pd.tv("B"), "C": pd.tv("C")}[Z]
        s = transposition_s12(tv21, tv12)
        w = random_graded_map(tv21.complex, triple[2], -1, rng, height=2)
        out_cups[Z] = s.then(getattr(pd, f"cup_{Z}")) + homotopy_boundary(w)
    pds = ProductDatum(A, B, C, f, g, out_cups["A"], out_cups["B"], out_cups["C"],
                       zero_map(tensor(A[0], A[1]).complex, C[2], -1),
                       zero_map(tensor(B[0], B[1]).complex, C[2], -1))
    # solve the T3 homotopies
    tvA21, tvB21, tvC21 = pds.tv("A"), pds.tv("B"), pds.tv("C")
    lhs = tensor_chain_maps(tvA21, tvC21, f[0], f[1]).then(pds.cup_C)
    rhs = pds.cup_A.then(f[2])
    h_f = solve_homotopy(lhs, rhs)
    lhs = tensor_chain_maps(tvB21, tvC21, g[0], g[1]).then(pds.cup_C)
    rhs = pds.cup_B.then(g[2])
    h_g = solve_homotopy(lhs, rhs)
    if h_f is None or h_g is None:
        raise VerificationError("swapped-datum homotopy unsolvable", 0)
    pds.h_f, pds.h_g = h_f, h_g
    return pds


def random_transposition_datum(ring: Ring, rng: random.Random,
                               deg_hi: int = 1) -> TranspositionDatum | None:
    """A random verified T1-7 datum (None if a witness solve fails)."""
    pd = random_product_datum(ring, rng, deg_hi=deg_hi, max_disks=1)
    pds = swapped_product_datum(pd, rng)
    TA, TB, TC, U, V = [], [], [], [], []
    for i in range(3):
        TA.append(_perturbed_identity(pd.A[i], rng)[0])
        TB.append(_perturbed_identity(pd.B[i], rng)[0])
        TC.append(_perturbed_identity(pd.C[i], rng)[0])
    for i in range(3):
        Ui = solve_homotopy(TA[i].then(pd.f[i]), pd.f[i].then(TC[i]))
        Vi = solve_homotopy(TB[i].then(pd.g[i]), pd.g[i].then(TC[i]))
        if Ui is None or Vi is None:
            return None
        U.append(Ui)
        V.append(Vi)
    ts = {}
    for Z, Ts in (("A", TA), ("B", TB), ("C", TC)):
        tv12 = pd.tv(Z)
        tv21 = pds.tv(Z)
        lhs = tensor_chain_maps(tv12, tv12, Ts[0], Ts[1]) \
            .then(transposition_s12(tv12, tv21)).then(getattr(pds, f"cup_{Z}"))
        rhs = getattr(pd, f"cup_{Z}").then(Ts[2])
        tz = solve_homotopy(lhs, rhs)
        if tz is None:
            return None
        ts[Z] = tz
    td = TranspositionDatum(pd, pds, tuple(TA), tuple(TB), tuple(TC),
                            tuple(U), tuple(V), ts["A"], ts["B"], ts["C"],
                            zero_map(pd.tv("A").complex, pd.C[2], -2),
                            zero_map(pd.tv("B").complex, pd.C[2], -2))
    Hf = solve_d_commutator(pd.tv("A").complex, pd.C[2], td._cube_rhs("f"))
    Hg = solve_d_commutator(pd.tv("B").complex, pd.C[2], td._cube_rhs("g"))
    if Hf is None or Hg is None:
        return None
    td.Hf, td.Hg = Hf, Hg
    return td


def random_bockstein_datum(ring: Ring, rng: random.Random,
                           deg_hi: int = 1) -> BocksteinDatum | None:
    """A random verified B1-5 datum with null-homotopic beta maps."""
    pd = random_product_datum(ring, rng, deg_hi=deg_hi, max_disks=1)
    betas = {}
    for Z, triple in (("A", pd.A), ("B", pd.B), ("C", pd.C)):
        pair = []
        for i in range(2):
            w = random_graded_map(triple[i], triple[i].shift(1), -1, rng, height=2)
            pair.append(homotopy_boundary(w))
        betas[Z] = tuple(pair)
    u, v = [], []
    for i in range(2):
        lhs = betas["A"][i].then(pd.f[i].shift(1))
        rhs = pd.f[i].then(betas["C"][i])
        ui = solve_homotopy(lhs, rhs)
        lhs = betas["B"][i].then(pd.g[i].shift(1))
        rhs = pd.g[i].then(betas["C"][i])
        vi = solve_homotopy(lhs, rhs)
        if ui is None or vi is None:
            return None
        u.append(ui)
        v.append(vi)
    bd = BocksteinDatum(pd, betas["A"], betas["B"], betas["C"],
                        tuple(u), tuple(v),
                        zero_map(pd.tv("A").complex, pd.A[2].shift(1), -1),
                        zero_map(pd.tv("B").complex, pd.B[2].shift(1), -1),
                        zero_map(pd.tv("C").complex, pd.C[2].shift(1), -1),
                        zero_map(pd.tv("A").complex, pd.C[2].shift(1), -2),
                        zero_map(pd.tv("B").complex, pd.C[2].shift(1), -2))
    for Z, target in (("A", pd.A[2]), ("B", pd.B[2]), ("C", pd.C[2])):
        m_right, m_left = bd._b3_pair(Z)
        hZ = solve_homotopy(m_right, m_left)
        if hZ is None:
            return None
        setattr(bd, f"h{Z}", hZ)
    for which in ("f", "g"):
        routeA, routeB = bd._route_pair(which)
        # K d - d K = routeA - routeB, i.e. d K - K d = routeB - routeA
        K = solve_d_commutator(routeA.source, routeA.target, routeB - routeA)
        if K is None:
            return None
        if which == "f":
            bd.Kf = K
        else:
            bd.Kg = K
    return bd
