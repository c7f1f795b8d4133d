"""Finite-model (phi, gamma)-modules and their cohomology.

A ``PhiGammaModule`` is a finite free module D over an exact ring with two
commuting operators phi and gamma (plus an optional left inverse psi of phi
and a scalar ``log_chi`` modelling log chi(gamma)).  The three-term complex

    D --d0--> D (+) D --d1--> D,
    d0(x) = ((phi-1) x, (gamma-1) x),  d1(x, y) = (gamma-1) x - (phi-1) y,

is the totalization of [D --gamma-1--> D] along phi - 1; its cohomology is
the module's cohomology.  This file implements:

* ``herr_complex`` and the exhaustive enumeration oracle for small prime
  fields;
* ``herr_cup``: the six explicit product components (zero components
  omitted), cross-checkable against the generic total-complex cup;
* ``duality_pairing`` with a frozen trace normalization (chosen generator of
  H^2 of the twist maps to 1);
* ``iwasawa_complex``: [D --psi-1--> D] in degrees 1 and 2;
* ``bockstein`` computed two independent ways — the connecting map of the
  rank-2 extension D~ = D (x) (A.1 + A.X~) with gamma(1) = 1 - log_chi X~,
  and the product -(0, log_chi) cup x — returned together and equal on the
  nose;
* ``isoclinic_decompose`` for phi = gamma = id: H^1 = H^1_f (+) H^1_c with
  i_D(x, y) = cl(-x, log_chi y) and the dual system solved from the pairing
  identity i*(alpha, beta) cup i(x, y) = [beta, x] - [alpha, y].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .complexes import (
    Complex,
    GradedMap,
    Subquotient,
    VerificationError,
    cohomology,
    tensor,
    verify_chain_map,
)
from .linalg import LinAlgError, Matrix, Ring
from .products import TotalComplex, cup_total


class PhiGammaModule:
    """A free module with commuting operators phi and gamma."""

    def __init__(self, ring: Ring, phi: Matrix, gamma: Matrix,
                 psi: Matrix | None = None, log_chi=None):
        if phi.nrows != phi.ncols or gamma.nrows != gamma.ncols \
                or phi.nrows != gamma.nrows:
            raise LinAlgError("phi and gamma must be square of equal size")
        if phi * gamma != gamma * phi:
            raise VerificationError("phi . gamma = gamma . phi", 0)
        if psi is not None and psi * phi != Matrix.identity(ring, phi.nrows):
            raise VerificationError("psi . phi = id", 0)
        self.ring = ring
        self.rank = phi.nrows
        self.phi = phi
        self.gamma = gamma
        self.psi = psi
        self.log_chi = ring.coerce(0 if log_chi is None else log_chi)

    @staticmethod
    def trivial(ring: Ring, rank: int = 1, log_chi=None) -> "PhiGammaModule":
        I = Matrix.identity(ring, rank)
        return PhiGammaModule(ring, I, I, psi=I, log_chi=log_chi)

    def tensor_with(self, other: "PhiGammaModule", log_chi=None) -> "PhiGammaModule":
        """D (x) D' with the diagonal operators (kron order: self first)."""
        return PhiGammaModule(self.ring, self.phi.kron(other.phi),
                              self.gamma.kron(other.gamma),
                              log_chi=self.log_chi if log_chi is None else log_chi)

    @staticmethod
    def random(ring: Ring, rank: int, rng, log_chi=None) -> "PhiGammaModule":
        """A random module: gamma invertible, phi a polynomial in gamma
        (guaranteeing commutation without restricting gamma)."""
        gamma = Matrix.random_invertible(ring, rank, rng)
        phi = Matrix.zero(ring, rank, rank)
        acc = Matrix.identity(ring, rank)
        for _ in range(rank + 1):
            phi = phi + acc.scale(ring.random_element(rng, 3))
            acc = acc * gamma
        return PhiGammaModule(ring, phi, gamma, log_chi=log_chi)

    def to_json(self):
        out = {"ring": self.ring.token(), "rank": self.rank,
               "phi": self.phi.to_json(), "gamma": self.gamma.to_json(),
               "log_chi": self.ring.el_to_json(self.log_chi)}
        if self.psi is not None:
            out["psi"] = self.psi.to_json()
        return out

    @staticmethod
    def from_json(obj) -> "PhiGammaModule":
        ring = Ring.from_token(obj["ring"])
        r = obj["rank"]
        phi = Matrix.from_json(ring, obj["phi"], r, r)
        gamma = Matrix.from_json(ring, obj["gamma"], r, r)
        psi = Matrix.from_json(ring, obj["psi"], r, r) if "psi" in obj else None
        return PhiGammaModule(ring, phi, gamma, psi=psi,
                              log_chi=ring.el_from_json(obj.get("log_chi", 0)))


def _one_minus(M: Matrix) -> Matrix:
    return M - Matrix.identity(M.ring, M.nrows)


def herr_complex(D: PhiGammaModule) -> Complex:
    """D -> D (+) D -> D in degrees 0..2 (the (phi, gamma) cohomology complex).

    Degree-1 coordinates are ordered (previous, current) to match the
    total-complex convention: d0(x) = ((phi-1) x, (gamma-1) x),
    d1(x, y) = (gamma-1) x - (phi-1) y.
    """
    r = D.rank
    if r == 0:
        return Complex(D.ring, {}, {})
    f = _one_minus(D.phi)
    g = _one_minus(D.gamma)
    d0 = f.vstack(g)
    d1 = g.hstack(f.scale(D.ring.coerce(-1)))
    return Complex(D.ring, {0: r, 1: 2 * r, 2: r}, {0: d0, 1: d1})


def herr_as_total(D: PhiGammaModule) -> TotalComplex:
    """The same complex built generically: Tot of [D -> D] along phi - 1."""
    r = D.rank
    C_gamma = Complex(D.ring, {0: r, 1: r}, {0: _one_minus(D.gamma)})
    phi_map = GradedMap(C_gamma, C_gamma, 0, {0: D.phi, 1: D.phi})
    return TotalComplex(C_gamma, phi_map)


def gamma_cup(D1: PhiGammaModule, D2: PhiGammaModule, pairing: Matrix,
              D3: PhiGammaModule) -> GradedMap:
    """The two-term cup x_n (x) y_m -> x_n (x) gamma^n(y_m) (zero for n+m >= 2)
    on the [D --gamma-1--> D] complexes, as a verified chain map."""
    ring = D1.ring
    r1, r2 = D1.rank, D2.rank
    CG = lambda D: Complex(ring, {0: D.rank, 1: D.rank}, {0: _one_minus(D.gamma)})
    tv = tensor(CG(D1), CG(D2))
    I1 = Matrix.identity(ring, r1)
    # degree 0: block (0,0): x (x) y; degree 1: block (0,1): x0 (x) y1 and
    # block (1,0): x1 (x) gamma(y0); degree 2: zero
    c1 = (pairing * tv.project_block(1, 0)
          + pairing * I1.kron(D2.gamma) * tv.project_block(1, 1))
    comps = {0: pairing, 1: c1}
    out = GradedMap(tv.complex, CG(D3), 0, comps)
    verify_chain_map(out, "two-term gamma cup")
    return out


def _check_pairing_equivariance(D1, D2, D3, pairing: Matrix):
    if pairing.nrows != D3.rank or pairing.ncols != D1.rank * D2.rank:
        raise LinAlgError("pairing has the wrong shape")
    if pairing * D1.phi.kron(D2.phi) != D3.phi * pairing:
        raise VerificationError("pairing . (phi x phi) = phi . pairing", 0)
    if pairing * D1.gamma.kron(D2.gamma) != D3.gamma * pairing:
        raise VerificationError("pairing . (gamma x gamma) = gamma . pairing", 0)


def herr_cup(D1: PhiGammaModule, D2: PhiGammaModule, pairing: Matrix,
             D3: PhiGammaModule) -> GradedMap:
    """The product on (phi, gamma) cohomology complexes; the six nonzero
    components are (writing degree-1 elements as (x0, x1) = (prev, curr)):

      (0,0): x0 (x) y0            -> x0 (x) y0
      (0,1): x0 (x) (y0, y1)      -> (x0 (x) y0, x0 (x) y1)
      (1,0): (x0, x1) (x) y0      -> (x0 (x) phi(y0), x1 (x) gamma(y0))
      (1,1): (x0, x1) (x) (y0,y1) -> x1 (x) gamma(y0) - x0 (x) phi(y1)
      (0,2): x0 (x) y1            -> x0 (x) y1
      (2,0): x1 (x) y0            -> x1 (x) gamma(phi(y0))
    """
    _check_pairing_equivariance(D1, D2, D3, pairing)
    ring = D1.ring
    r1, r2 = D1.rank, D2.rank
    minus = ring.coerce(-1)
    H1, H2, H3 = herr_complex(D1), herr_complex(D2), herr_complex(D3)
    tv = tensor(H1, H2)
    I1 = Matrix.identity(ring, r1)
    I2 = Matrix.identity(ring, r2)
    zero12 = Matrix.zero(ring, r1, r1)
    prev1 = I1.hstack(zero12)           # D (+) D -> D, first (previous) slot
    curr1 = zero12.hstack(I1)
    zero22 = Matrix.zero(ring, r2, r2)
    prev2 = I2.hstack(zero22)
    curr2 = zero22.hstack(I2)
    # degree 0: block (0,0)
    c0 = pairing * tv.project_block(0, 0)
    # degree 1: blocks (0,1) and (1,0), target Herr^1(D3) = prev (+) curr
    b01 = (pairing * I1.kron(prev2)).vstack(pairing * I1.kron(curr2))
    b10 = (pairing * prev1.kron(D2.phi)).vstack(pairing * curr1.kron(D2.gamma))
    c1 = b01 * tv.project_block(1, 0) + b10 * tv.project_block(1, 1)
    # degree 2: blocks (0,2), (1,1), (2,0); target Herr^2(D3) = prev slot only
    b02 = pairing
    b11 = pairing * curr1.kron(D2.gamma * prev2) \
        + (pairing * prev1.kron(D2.phi * curr2)).scale(minus)
    b20 = pairing * I1.kron(D2.gamma * D2.phi)
    c2 = (b02 * tv.project_block(2, 0) + b11 * tv.project_block(2, 1)
          + b20 * tv.project_block(2, 2))
    out = GradedMap(tv.complex, H3, 0, {0: c0, 1: c1, 2: c2})
    verify_chain_map(out, "cup on (phi, gamma) complexes")
    return out


def herr_cup_via_total(D1: PhiGammaModule, D2: PhiGammaModule, pairing: Matrix,
                       D3: PhiGammaModule) -> GradedMap:
    """The same product built by the generic total-complex machinery."""
    _check_pairing_equivariance(D1, D2, D3, pairing)
    t1, t2, t3 = herr_as_total(D1), herr_as_total(D2), herr_as_total(D3)
    cup_g = gamma_cup(D1, D2, pairing, D3)
    out = cup_total(t1, t2, t3, cup_g)
    # re-key between the structurally equal complexes
    return out.with_endpoints(tensor(herr_complex(D1), herr_complex(D2)).complex,
                              herr_complex(D3))


def herr_cohomology(D: PhiGammaModule) -> dict:
    C = herr_complex(D)
    return {n: cohomology(C, n) for n in (0, 1, 2)}


def enumerate_cohomology_dims(D: PhiGammaModule) -> dict:
    """Exhaustive enumeration oracle over a prime field: counts cocycles and
    coboundaries element-by-element.  Only for small F_p and rank <= 3."""
    ring = D.ring
    if ring.kind != "Fp":
        raise LinAlgError("enumeration oracle needs a prime field")
    p = ring.modulus
    C = herr_complex(D)

    def all_vectors(k):
        return itertools.product(*[range(p)] * k)

    def log_p(count):
        dim = 0
        while p ** dim < count:
            dim += 1
        if p ** dim != count:
            raise LinAlgError("count is not a p-power")
        return dim

    dims = {}
    for n in (0, 1, 2):
        rk = C.term(n)
        d = C.d(n)
        cocycles = sum(1 for v in all_vectors(rk)
                       if all(x % p == 0 for x in d.apply([ring.coerce(c) for c in v])))
        if n == 0:
            boundaries = 1
        else:
            dprev = C.d(n - 1)
            images = {tuple(int(x) % p for x in
                            dprev.apply([ring.coerce(c) for c in v]))
                      for v in all_vectors(C.term(n - 1))}
            boundaries = len(images)
        dims[n] = log_p(cocycles) - log_p(boundaries)
    return dims


def euler_characteristic(D: PhiGammaModule) -> dict:
    """The model's Euler characteristic (identically 0) with an explicit flag
    that the Robba-ring formula -[K:Q_p] rk(D) is out of scope here."""
    dims = {n: cohomology(herr_complex(D), n).rank for n in (0, 1, 2)}
    chi = dims[0] - dims[1] + dims[2]
    return {
        "h": dims,
        "chi": chi,
        "note": ("finite model: chi = 0 identically (terms D, D+D, D); "
                 "the Robba-ring formula -[K:Q_p]*rank(D) does not apply "
                 "to this model and is not reproduced"),
    }


# ---------------------------------------------------------------------------
# duality
# ---------------------------------------------------------------------------

@dataclass
class DualityTarget:
    """H^2 of the twist module mapped to the ring, normalized so that the
    chosen generator class maps to 1."""

    twist: PhiGammaModule
    h2: Subquotient
    generator: tuple

    @staticmethod
    def standard(twist: PhiGammaModule) -> "DualityTarget":
        C = herr_complex(twist)
        h2 = cohomology(C, 2)
        if h2.rank != 1:
            raise VerificationError("H^2 of the twist has rank 1", 2)
        return DualityTarget(twist, h2, tuple(h2.reps[0]))

    def to_scalar(self, vec):
        coeffs = self.h2.classify(vec)
        return coeffs[0]


def duality_pairing(D: PhiGammaModule, dual: PhiGammaModule, eval_pairing: Matrix,
                    target: DualityTarget) -> dict:
    """Matrices of H^i(D) x H^{2-i}(dual) -> ring on the chosen bases.

    ``eval_pairing``: D (x) dual -> twist, equivariant and perfect on the
    module level (checked when the twist has rank 1).
    """
    _check_pairing_equivariance(D, dual, target.twist, eval_pairing)
    if target.twist.rank == 1 and D.rank == dual.rank:
        # reshape to a square matrix and demand invertibility
        rows = [[eval_pairing.rows[0][i * dual.rank + j] for j in range(dual.rank)]
                for i in range(D.rank)]
        if D.rank and not Matrix(D.ring, rows).is_invertible():
            raise VerificationError("module-level pairing is perfect", 0)
    cup = herr_cup(D, dual, eval_pairing, target.twist)
    tv = tensor(herr_complex(D), herr_complex(dual))
    CD, Cd = herr_complex(D), herr_complex(dual)
    out = {}
    for i in (0, 1, 2):
        hi = cohomology(CD, i)
        hj = cohomology(Cd, 2 - i)
        rows = []
        for a in range(hi.rank):
            x = list(hi.reps[a])
            row = []
            for b in range(hj.rank):
                y = list(hj.reps[b])
                vec = tv.pure_tensor(i, 2 - i, x, y)
                row.append(target.to_scalar(cup.apply(2, vec)))
            rows.append(row)
        out[i] = Matrix(D.ring, rows, nrows=hi.rank, ncols=hj.rank)
    return out


# ---------------------------------------------------------------------------
# Iwasawa complex
# ---------------------------------------------------------------------------

def iwasawa_complex(D: PhiGammaModule) -> Complex:
    """[D --psi-1--> D] in degrees 1 and 2."""
    if D.psi is None:
        raise LinAlgError("psi is not available on this module")
    r = D.rank
    return Complex(D.ring, {1: r, 2: r}, {1: _one_minus(D.psi)})


# ---------------------------------------------------------------------------
# Bockstein, two ways
# ---------------------------------------------------------------------------

def _extension_module(D: PhiGammaModule) -> tuple:
    """D~ = D (x) (A.1 + A.X~) with gamma(1) = 1 - log_chi X~, gamma(X~) = X~,
    phi acting trivially on the second factor.  Returns
    (D~, section s, inclusion theta, projection pr) as module matrices."""
    ring = D.ring
    L = D.log_chi
    # action on basis (1, X~): columns are images
    M_gamma = Matrix(ring, [[ring.one, ring.zero],
                            [ring.neg(L), ring.one]])
    M_phi = Matrix.identity(ring, 2)
    Dt = PhiGammaModule(ring, D.phi.kron(M_phi), D.gamma.kron(M_gamma),
                        log_chi=L)
    r = D.rank
    s_cols = []
    theta_cols = []
    for i in range(r):
        e1 = [ring.zero] * (2 * r)
        e1[2 * i] = ring.one          # e_i (x) 1
        s_cols.append(e1)
        e2 = [ring.zero] * (2 * r)
        e2[2 * i + 1] = ring.one      # e_i (x) X~
        theta_cols.append(e2)
    s = Matrix.from_cols(ring, s_cols, nrows=2 * r)
    theta = Matrix.from_cols(ring, theta_cols, nrows=2 * r)
    pr_rows = []
    for i in range(r):
        row = [ring.zero] * (2 * r)
        row[2 * i] = ring.one
        pr_rows.append(row)
    pr = Matrix(ring, pr_rows, nrows=r, ncols=2 * r)
    return Dt, s, theta, pr


def bockstein(D: PhiGammaModule) -> tuple:
    """The degree-(+1) map on the (phi, gamma) complex, computed two ways.

    Way 1 (connecting map): lift through the non-equivariant section of
    0 -> D -> D~ -> D -> 0, apply d, divide by the X~-direction.
    Way 2 (product): x -> -(0, log_chi) cup x with (0, log_chi) in degree 1
    of the trivial rank-1 module.

    Returns (way1, way2) as GradedMaps into the shifted complex; they agree
    entrywise.
    """
    ring = D.ring
    C = herr_complex(D)
    target = C.shift(1)
    Dt, s, theta, pr = _extension_module(D)
    Ct = herr_complex(Dt)
    slots = {0: 1, 1: 2, 2: 1}
    comps1 = {}
    for n in (0, 1):
        s_n = Matrix.block_diag(ring, [s] * slots[n])
        s_n1 = Matrix.block_diag(ring, [s] * slots[n + 1])
        theta_n1 = Matrix.block_diag(ring, [theta] * slots[n + 1])
        N = Ct.d(n) * s_n - s_n1 * C.d(n)
        X = theta_n1.solve_matrix(N)
        if X is None or theta_n1 * X != N:
            raise VerificationError("connecting-map defect lies in the X~-line", n)
        comps1[n] = X
    way1 = GradedMap(C, target, 0, comps1)
    verify_chain_map(way1, "connecting map anticommutes with d")
    # way 2
    triv = PhiGammaModule.trivial(ring, 1, log_chi=D.log_chi)
    pairing = Matrix.identity(ring, D.rank)   # 1 (x) x -> x
    cup = herr_cup(triv, D, pairing, D)
    tv = tensor(herr_complex(triv), C)
    z = Matrix.from_cols(ring, [[ring.zero, D.log_chi]], nrows=2)  # (0, log_chi)
    comps2 = {}
    for n in (0, 1):
        emb = tv.embed_block(1 + n, 1)
        lift = z.kron(Matrix.identity(ring, C.term(n)))
        comps2[n] = (cup.comp(1 + n) * emb * lift).scale(ring.coerce(-1))
    way2 = GradedMap(C, target, 0, comps2)
    if way1 != way2:
        raise VerificationError("Bockstein two-way agreement", 0)
    return way1, way2


# ---------------------------------------------------------------------------
# isoclinic decomposition
# ---------------------------------------------------------------------------

@dataclass
class IsoclinicDecomposition:
    D: PhiGammaModule
    h1: Subquotient
    i_f: Matrix          # D -> H^1 coordinates of cl(-x, 0)
    i_c: Matrix          # D -> H^1 coordinates of cl(0, log_chi y)
    i_full: Matrix       # (x, y) -> cl(-x, log_chi y)


def isoclinic_decompose(D: PhiGammaModule) -> IsoclinicDecomposition:
    """For phi = gamma = id: H^1 = D (+) D, i_D(x, y) = cl(-x, log_chi y),
    split into the finite part (image of x) and the complementary part."""
    ring = D.ring
    I = Matrix.identity(ring, D.rank)
    if D.phi != I or D.gamma != I:
        raise VerificationError("module is isoclinic (phi = gamma = id)", 0)
    if not ring.is_unit(D.log_chi):
        raise VerificationError("log_chi is a unit (degenerate-logchi)", 1)
    C = herr_complex(D)
    h1 = cohomology(C, 1)
    r = D.rank

    def classes(vecs):
        cols = [list(h1.classify(v)) for v in vecs]
        return Matrix.from_cols(ring, cols, nrows=h1.rank)

    minus = ring.coerce(-1)
    e = lambda k, size: [ring.one if i == k else ring.zero for i in range(size)]
    i_f = classes([[ring.mul(minus, x) for x in e(k, r)] + [ring.zero] * r
                   for k in range(r)])
    i_c = classes([[ring.zero] * r + [ring.mul(D.log_chi, x) for x in e(k, r)]
                   for k in range(r)])
    i_full = i_f.hstack(i_c)
    if not i_full.is_invertible():
        raise VerificationError("isoclinic decomposition is direct", 1)
    return IsoclinicDecomposition(D, h1, i_f, i_c, i_full)


def isoclinic_dual_system(D: PhiGammaModule, dual: PhiGammaModule,
                          eval_pairing: Matrix, target: DualityTarget) -> dict:
    """The dual parametrization i* of H^1(dual) solved from the identity

        i*(alpha, beta) cup i_D(x, y) = [beta, x] - [alpha, y]

    (an exact matrix identity, verified before returning).  Returns the
    matrices of i*, i_D and the H^1 x H^1 cup pairing used."""
    ring = D.ring
    dec = isoclinic_decompose(D)
    dec_dual = isoclinic_decompose(dual)
    pair = duality_pairing(dual, D, _swap_pairing(eval_pairing, dual, D),
                           target)[1]
    # i*(alpha, beta) = cl(L^{-1} alpha, -beta) in the (x-slot, y-slot)
    # coordinates of H^1(dual); solve it instead of hardcoding: find the
    # matrix S with S^T . pair . i_full = [the (beta,x) - (alpha,y) form]
    r, rd = D.rank, dual.rank
    # target bilinear form on (alpha, beta) x (x, y)
    B_rows = []
    ev = lambda a, x: _eval_entry(eval_pairing, ring, a, x, rd, r)
    for ai in range(2 * rd):
        row = []
        for xi in range(2 * r):
            alpha = ai if ai < rd else None
            beta = ai - rd if ai >= rd else None
            x = xi if xi < r else None
            y = xi - r if xi >= r else None
            val = ring.zero
            if beta is not None and x is not None:
                val = ring.add(val, ev(beta, x))
            if alpha is not None and y is not None:
                val = ring.sub(val, ev(alpha, y))
            row.append(val)
        B_rows.append(row)
    B = Matrix(ring, B_rows, nrows=2 * rd, ncols=2 * r)
    # pairing of H^1(dual) x H^1(D) classes: pair[a][b]
    # want S: (alpha,beta)-coords -> H^1(dual) with S^T-composed pairing = B
    M = pair * dec.i_full          # H^1(dual)-class x (x,y)-coords
    # solve S from S^T M = B  <=>  M^T S = B^T
    S = M.transpose().solve_matrix(B.transpose())
    if S is None or M.transpose() * S != B.transpose():
        raise VerificationError("dual isoclinic system is solvable", 1)
    # verify it is the expected closed form cl(L^{-1} alpha, -beta)
    return {"i_dual": S, "i_D": dec.i_full, "h1_pairing": pair,
            "decomposition": dec, "dual_decomposition": dec_dual}


def _swap_pairing(eval_pairing: Matrix, dual, D) -> Matrix:
    """Reorder a pairing matrix on D (x) dual to one on dual (x) D."""
    ring = eval_pairing.ring
    r, rd = D.rank, dual.rank
    rows = []
    for t in range(eval_pairing.nrows):
        row = [None] * (rd * r)
        for a in range(rd):
            for x in range(r):
                row[a * r + x] = eval_pairing.rows[t][x * rd + a]
        rows.append(row)
    return Matrix(ring, rows, nrows=eval_pairing.nrows, ncols=rd * r)


def _eval_entry(eval_pairing: Matrix, ring, a, x, rd, r):
    # eval_pairing is D (x) dual -> rank-1 twist: entry of e_x (x) e_a
    return eval_pairing.rows[0][x * rd + a]
