"""Bounded cochain complexes and the maps between them.

Conventions used throughout the package:

* a ``Complex`` stores ``d(n): term(n) -> term(n+1)`` with d(n+1) d(n) = 0;
* a ``GradedMap`` of degree s has components ``comp(n): term(n) -> term(n+s)``
  indexed by the *source* degree;
* a chain map is a degree-0 GradedMap with d f = f d;
* a homotopy h: f ~> g is a degree-(-1) GradedMap with d h + h d = g - f;
* a second-order homotopy H: h ~> k is degree -2 with H d - d H = k - h;
* the shift C[m] has d_{C[m]} = (-1)^m d; shifting a degree-s map multiplies
  its components by (-1)^{m s}.

Verification helpers raise ``VerificationError`` carrying the first failing
degree, which is what the fault-injection harness inspects.
"""

from __future__ import annotations

import random

from .linalg import LinAlgError, Matrix, Ring, Subquotient


class VerificationError(Exception):
    """An exact identity failed; carries the identity name and degree."""

    def __init__(self, identity: str, degree, detail: str = ""):
        self.identity = identity
        self.degree = degree
        self.detail = detail
        msg = f"{identity} fails at degree {degree}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class Complex:
    """A bounded cochain complex of finite free modules."""

    def __init__(self, ring: Ring, terms: dict, diffs: dict | None = None, check: bool = True):
        self.ring = ring
        self._terms = {int(n): int(r) for n, r in terms.items() if r}
        self._diffs = {}
        diffs = diffs or {}
        for n, M in diffs.items():
            n = int(n)
            if M.shape != (self.term(n + 1), self.term(n)):
                raise LinAlgError(
                    f"differential at degree {n} has shape {M.shape}, "
                    f"expected ({self.term(n + 1)}, {self.term(n)})")
            if not M.is_zero():
                self._diffs[n] = M
        if check:
            self.verify_d_squared()

    def term(self, n: int) -> int:
        return self._terms.get(n, 0)

    def d(self, n: int) -> Matrix:
        M = self._diffs.get(n)
        if M is None:
            return Matrix.zero(self.ring, self.term(n + 1), self.term(n))
        return M

    def degrees(self):
        return sorted(self._terms)

    @property
    def min_deg(self):
        return min(self._terms) if self._terms else 0

    @property
    def max_deg(self):
        return max(self._terms) if self._terms else 0

    def verify_d_squared(self):
        for n in list(self._diffs):
            M = self.d(n + 1) * self.d(n)
            if not M.is_zero():
                raise VerificationError("d squared = 0", n)

    def zero_element(self, n: int):
        return tuple(self.ring.zero for _ in range(self.term(n)))

    def random_element(self, n: int, rng: random.Random, height: int = 5):
        return tuple(self.ring.random_element(rng, height) for _ in range(self.term(n)))

    def random_cocycle(self, n: int, rng: random.Random):
        """A random element of ker d(n) (kernel-generator combination)."""
        gens = self.d(n).kernel_basis()
        out = list(self.zero_element(n))
        for g in gens:
            c = self.ring.random_element(rng)
            for i, x in enumerate(g):
                out[i] = self.ring.add(out[i], self.ring.mul(c, x))
        return tuple(out)

    def shift(self, m: int) -> "Complex":
        terms = {n - m: r for n, r in self._terms.items()}
        sign = self.ring.coerce((-1) ** (m % 2))
        diffs = {n - m: M.scale(sign) for n, M in self._diffs.items()}
        return Complex(self.ring, terms, diffs, check=False)

    def total_rank(self) -> int:
        return sum(self._terms.values())

    def __eq__(self, other):
        return (isinstance(other, Complex) and self.ring == other.ring
                and self._terms == other._terms
                and all(self.d(n) == other.d(n)
                        for n in set(self._diffs) | set(other._diffs)))

    def __repr__(self):
        return f"Complex({self.ring.token()}, " + \
            ", ".join(f"{n}:{r}" for n, r in sorted(self._terms.items())) + ")"

    def to_json(self):
        return {"ring": self.ring.to_json(),
                "terms": {str(n): r for n, r in self._terms.items()},
                "diffs": {str(n): M.to_json() for n, M in self._diffs.items()}}

    @staticmethod
    def from_json(obj) -> "Complex":
        ring = Ring.from_json(obj["ring"])
        terms = {int(n): r for n, r in obj["terms"].items()}
        diffs = {}
        for n, M in obj.get("diffs", {}).items():
            n = int(n)
            nr = terms.get(n + 1, 0)
            nc = terms.get(n, 0)
            diffs[n] = Matrix.from_json(ring, M, nr, nc)
        return Complex(ring, terms, diffs)


def zero_complex(ring: Ring) -> Complex:
    return Complex(ring, {}, {}, check=False)


def single_term_complex(ring: Ring, degree: int, rank: int) -> Complex:
    return Complex(ring, {degree: rank}, {}, check=False)


class GradedMap:
    """A collection of matrices source.term(n) -> target.term(n + degree)."""

    def __init__(self, source: Complex, target: Complex, degree: int, comps: dict):
        self.source = source
        self.target = target
        self.degree = degree
        self.comps = {}
        for n, M in comps.items():
            n = int(n)
            want = (target.term(n + degree), source.term(n))
            if M.shape != want:
                raise LinAlgError(f"component at {n} has shape {M.shape}, expected {want}")
            if not M.is_zero():
                self.comps[n] = M

    def comp(self, n: int) -> Matrix:
        M = self.comps.get(n)
        if M is None:
            return Matrix.zero(self.source.ring,
                               self.target.term(n + self.degree), self.source.term(n))
        return M

    @property
    def ring(self):
        return self.source.ring

    def degrees(self):
        degs = set(self.source._terms) | {n - self.degree for n in self.target._terms}
        return sorted(degs)

    def apply(self, n: int, vec):
        return self.comp(n).apply(vec)

    def is_zero(self):
        return not self.comps

    def __add__(self, other: "GradedMap") -> "GradedMap":
        self._compat(other)
        degs = set(self.comps) | set(other.comps)
        return GradedMap(self.source, self.target, self.degree,
                         {n: self.comp(n) + other.comp(n) for n in degs})

    def __sub__(self, other: "GradedMap") -> "GradedMap":
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "GradedMap":
        return GradedMap(self.source, self.target, self.degree,
                         {n: M.scale(self.ring.coerce(c)) for n, M in self.comps.items()})

    def then(self, other: "GradedMap") -> "GradedMap":
        """Composition other . self (self first)."""
        if other.source is not self.target and other.source != self.target:
            raise LinAlgError("composition target/source mismatch")
        degs = set(self.comps) | {n - self.degree for n in other.comps}
        out = {}
        for n in degs:
            out[n] = other.comp(n + self.degree) * self.comp(n)
        return GradedMap(self.source, other.target, self.degree + other.degree, out)

    def restrict_degrees(self, degs) -> "GradedMap":
        return GradedMap(self.source, self.target, self.degree,
                         {n: M for n, M in self.comps.items() if n in degs})

    def shift(self, m: int) -> "GradedMap":
        """The shifted map C[m] -> D[m]; components get the sign (-1)^{m*degree}."""
        sign = self.ring.coerce((-1) ** ((m * self.degree) % 2))
        return GradedMap(self.source.shift(m), self.target.shift(m), self.degree,
                         {n - m: M.scale(sign) for n, M in self.comps.items()})

    def with_endpoints(self, source: Complex, target: Complex) -> "GradedMap":
        """Reinterpret the same matrices between equal-shaped complexes."""
        return GradedMap(source, target, self.degree, dict(self.comps))

    def _compat(self, other):
        if self.degree != other.degree:
            raise LinAlgError("degree mismatch")

    def __eq__(self, other):
        if not isinstance(other, GradedMap) or self.degree != other.degree:
            return False
        degs = set(self.comps) | set(other.comps)
        return all(self.comp(n) == other.comp(n) for n in degs)

    def __repr__(self):
        return f"GradedMap(deg {self.degree}, comps at {sorted(self.comps)})"

    def to_json(self):
        return {"degree": self.degree,
                "comps": {str(n): M.to_json() for n, M in self.comps.items()}}

    @staticmethod
    def from_json(source: Complex, target: Complex, obj) -> "GradedMap":
        degree = obj["degree"]
        comps = {}
        for n, M in obj.get("comps", {}).items():
            n = int(n)
            comps[n] = Matrix.from_json(source.ring, M,
                                        target.term(n + degree), source.term(n))
        return GradedMap(source, target, degree, comps)


def zero_map(source: Complex, target: Complex, degree: int = 0) -> GradedMap:
    return GradedMap(source, target, degree, {})


def identity_map(C: Complex) -> GradedMap:
    return GradedMap(C, C, 0, {n: Matrix.identity(C.ring, C.term(n)) for n in C.degrees()})


def map_from_blocks(source: Complex, target: Complex, degree: int, blocks: dict) -> GradedMap:
    return GradedMap(source, target, degree, blocks)


# ---------------------------------------------------------------------------
# defects and verification
# ---------------------------------------------------------------------------

def chain_map_defect(f: GradedMap) -> dict:
    """d_T f - (-1)^{deg} f d_S per degree (nonzero entries only).

    For degree-0 maps this is the chain-map condition; it is also used for
    maps into shifted complexes (where the shift sign lives in the target
    differential, so the plain condition d f = f d is the right one).
    """
    out = {}
    for n in f.degrees():
        M = f.target.d(n + f.degree) * f.comp(n) - f.comp(n + 1) * f.source.d(n)
        if not M.is_zero():
            out[n] = M
    return out


def verify_chain_map(f: GradedMap, name: str = "chain map"):
    bad = chain_map_defect(f)
    if bad:
        n = min(bad)
        raise VerificationError(name, n)


def is_chain_map(f: GradedMap) -> bool:
    return not chain_map_defect(f)


def homotopy_defect(h: GradedMap, f: GradedMap, g: GradedMap) -> dict:
    """d h + h d - (g - f) per degree.  h must have degree f.degree - 1."""
    if h.degree != f.degree - 1 or g.degree != f.degree:
        raise LinAlgError("homotopy degree mismatch")
    out = {}
    degs = set(h.degrees()) | set(f.degrees()) | set(g.degrees())
    for n in degs:
        M = (h.target.d(n + h.degree) * h.comp(n)
             + h.comp(n + 1) * h.source.d(n)
             - (g.comp(n) - f.comp(n)))
        if not M.is_zero():
            out[n] = M
    return out


def verify_homotopy(h: GradedMap, f: GradedMap, g: GradedMap, name: str = "homotopy"):
    bad = homotopy_defect(h, f, g)
    if bad:
        raise VerificationError(name, min(bad))


def second_order_defect(H: GradedMap, h: GradedMap, k: GradedMap) -> dict:
    """H d - d H - (k - h) per degree.  H has degree h.degree - 1."""
    if H.degree != h.degree - 1 or k.degree != h.degree:
        raise LinAlgError("second-order degree mismatch")
    out = {}
    degs = set(H.degrees()) | set(h.degrees()) | set(k.degrees())
    for n in degs:
        M = (H.comp(n + 1) * H.source.d(n)
             - H.target.d(n + H.degree) * H.comp(n)
             - (k.comp(n) - h.comp(n)))
        if not M.is_zero():
            out[n] = M
    return out


def verify_second_order(H: GradedMap, h: GradedMap, k: GradedMap,
                        name: str = "second-order homotopy"):
    bad = second_order_defect(H, h, k)
    if bad:
        raise VerificationError(name, min(bad))


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------

class ConeView:
    """cone(f)^n = A^{n+1} (+) B^n with d(a, b) = (-da, f(a) + db).

    Exposes the block embeddings/projections as chain-map-shaped data.
    """

    def __init__(self, f: GradedMap):
        if f.degree != 0:
            raise LinAlgError("cone of a non-degree-0 map")
        self.f = f
        A, B = f.source, f.target
        ring = A.ring
        terms = {}
        degs = set()
        for n in A.degrees():
            degs.add(n - 1)
        for n in B.degrees():
            degs.add(n)
        for n in degs:
            r = A.term(n + 1) + B.term(n)
            if r:
                terms[n] = r
        diffs = {}
        minus_one = ring.coerce(-1)
        for n in sorted(terms):
            a_up, b_up = A.term(n + 2), B.term(n + 1)
            a, b = A.term(n + 1), B.term(n)
            if a_up + b_up == 0 or a + b == 0:
                continue
            top = (A.d(n + 1).scale(minus_one)).hstack(Matrix.zero(ring, a_up, b))
            bot = f.comp(n + 1).hstack(B.d(n))
            diffs[n] = top.vstack(bot)
        self.complex = Complex(ring, terms, diffs)

    def inject_source(self, n: int) -> Matrix:
        """A^{n+1} -> cone^n block inclusion (not a chain map by itself)."""
        A, B = self.f.source, self.f.target
        ring = A.ring
        a, b = A.term(n + 1), B.term(n)
        return Matrix.identity(ring, a).vstack(Matrix.zero(ring, b, a))

    def inject_target(self, n: int) -> Matrix:
        A, B = self.f.source, self.f.target
        ring = A.ring
        a, b = A.term(n + 1), B.term(n)
        return Matrix.zero(ring, a, b).vstack(Matrix.identity(ring, b))

    def project_source(self, n: int) -> Matrix:
        A, B = self.f.source, self.f.target
        a, b = A.term(n + 1), B.term(n)
        return Matrix.identity(A.ring, a).hstack(Matrix.zero(A.ring, a, b))

    def project_target(self, n: int) -> Matrix:
        A, B = self.f.source, self.f.target
        a, b = A.term(n + 1), B.term(n)
        return Matrix.zero(A.ring, b, a).hstack(Matrix.identity(A.ring, b))

    def inclusion_of_target(self) -> GradedMap:
        """B -> cone(f), an honest chain map."""
        return GradedMap(self.f.target, self.complex, 0,
                         {n: self.inject_target(n) for n in self.complex.degrees()})

    def projection_to_shifted_source(self) -> GradedMap:
        """cone(f) -> A[1], an honest chain map."""
        return GradedMap(self.complex, self.f.source.shift(1), 0,
                         {n: self.project_source(n) for n in self.complex.degrees()})


def cone(f: GradedMap) -> ConeView:
    return ConeView(f)


def cone_functorial_map(cv1: ConeView, cv2: ConeView,
                        alpha1: GradedMap, alpha2: GradedMap, h: GradedMap) -> GradedMap:
    """cone(f1) -> cone(f2) from a square commuting up to h.

    Data: f_i: A_i -> B_i, alpha1: A_1 -> A_2, alpha2: B_1 -> B_2,
    h: f_2 alpha1 ~> alpha2 f_1 (d h + h d = alpha2 f_1 - f_2 alpha1).
    Formula: (a_{n+1}, b_n) -> (alpha1(a_{n+1}), alpha2(b_n) + h(a_{n+1})).
    """
    verify_homotopy(h, alpha1.then(cv2.f), cv1.f.then(alpha2), "cone functorial square")
    comps = {}
    for n in set(cv1.complex.degrees()) | set(cv2.complex.degrees()):
        M = (cv2.inject_source(n) * alpha1.comp(n + 1) * cv1.project_source(n)
             + cv2.inject_target(n) * alpha2.comp(n) * cv1.project_target(n)
             + cv2.inject_target(n) * h.comp(n + 1) * cv1.project_source(n))
        comps[n] = M
    out = GradedMap(cv1.complex, cv2.complex, 0, comps)
    verify_chain_map(out, "cone functorial map")
    return out


def cone_map_homotopy(cv1: ConeView, cv2: ConeView,
                      k1: GradedMap, k2: GradedMap, H: GradedMap) -> GradedMap:
    """Homotopy between two functorial cone maps.

    Given c(alpha1, alpha2, h) and c(beta1, beta2, h') with homotopies
    k1: alpha1 ~> beta1, k2: alpha2 ~> beta2 and a second-order homotopy
    H relating f_2 k_1 + h' and k_2 f_1 + h, the formula
    (a_{n+1}, b_n) -> (-k1(a_{n+1}), k2(b_n) + H(a_{n+1}))
    is a homotopy of the cone maps.
    """
    comps = {}
    ring = cv1.complex.ring
    for n in set(cv1.complex.degrees()) | set(cv2.complex.degrees()):
        M = (cv2.inject_source(n - 1) * k1.comp(n + 1).scale(ring.coerce(-1))
             * cv1.project_source(n)
             + cv2.inject_target(n - 1) * k2.comp(n) * cv1.project_target(n)
             + cv2.inject_target(n - 1) * H.comp(n + 1) * cv1.project_source(n))
        comps[n] = M
    return GradedMap(cv1.complex, cv2.complex, -1, comps)


# ---------------------------------------------------------------------------
# direct sums
# ---------------------------------------------------------------------------

class DirectSumView:
    """Finite direct sum of complexes with block embeddings/projections."""

    def __init__(self, summands):
        self.summands = list(summands)
        if not self.summands:
            raise LinAlgError("empty direct sum")
        ring = self.summands[0].ring
        terms = {}
        degs = set()
        for C in self.summands:
            degs.update(C.degrees())
        for n in degs:
            r = sum(C.term(n) for C in self.summands)
            if r:
                terms[n] = r
        diffs = {}
        for n in sorted(degs | {d - 1 for d in degs}):
            if sum(C.term(n) for C in self.summands) and \
               sum(C.term(n + 1) for C in self.summands):
                diffs[n] = Matrix.block_diag(ring, [C.d(n) for C in self.summands])
        self.complex = Complex(ring, terms, diffs)

    def inject(self, i: int) -> GradedMap:
        ring = self.complex.ring
        comps = {}
        for n in self.complex.degrees():
            before = sum(C.term(n) for C in self.summands[:i])
            mine = self.summands[i].term(n)
            after = sum(C.term(n) for C in self.summands[i + 1:])
            comps[n] = Matrix.zero(ring, before, mine) \
                .vstack(Matrix.identity(ring, mine)) \
                .vstack(Matrix.zero(ring, after, mine))
        return GradedMap(self.summands[i], self.complex, 0, comps)

    def project(self, i: int) -> GradedMap:
        ring = self.complex.ring
        comps = {}
        for n in self.complex.degrees():
            before = sum(C.term(n) for C in self.summands[:i])
            mine = self.summands[i].term(n)
            after = sum(C.term(n) for C in self.summands[i + 1:])
            comps[n] = Matrix.zero(ring, mine, before) \
                .hstack(Matrix.identity(ring, mine)) \
                .hstack(Matrix.zero(ring, mine, after))
        return GradedMap(self.complex, self.summands[i], 0, comps)

    def assemble_map(self, target_sum: "DirectSumView", pieces: dict) -> GradedMap:
        """Block map from pieces[(i, j)]: summand_i -> target_sum.summand_j."""
        out = None
        for (i, j), f in pieces.items():
            g = self.project(i).then(f).then(target_sum.inject(j))
            out = g if out is None else out + g
        if out is None:
            deg = 0
            out = zero_map(self.complex, target_sum.complex, deg)
        return out


def direct_sum(summands) -> DirectSumView:
    return DirectSumView(summands)


# ---------------------------------------------------------------------------
# tensor products
# ---------------------------------------------------------------------------

class TensorView:
    """A (x) B with blocks ordered by ascending first-factor degree.

    Within a block A^i (x) B^j the basis order is a_idx * rank(B^j) + b_idx,
    matching ``Matrix.kron``.  d(x (x) y) = dx (x) y + (-1)^i x (x) dy.
    """

    def __init__(self, A: Complex, B: Complex):
        if A.ring != B.ring:
            raise LinAlgError("tensor of complexes over different rings")
        self.A, self.B = A, B
        ring = A.ring
        terms = {}
        self._blocks = {}
        if A._terms and B._terms:
            for n in range(A.min_deg + B.min_deg, A.max_deg + B.max_deg + 1):
                blocks = []
                for i in A.degrees():
                    j = n - i
                    if A.term(i) and B.term(j):
                        blocks.append((i, j))
                if blocks:
                    self._blocks[n] = blocks
                    terms[n] = sum(A.term(i) * B.term(j) for i, j in blocks)
        diffs = {}
        for n in sorted(terms):
            if not terms.get(n + 1) and (n + 1) not in self._blocks:
                continue
            cols = terms[n]
            rows = terms.get(n + 1, 0)
            if rows == 0:
                continue
            M = Matrix.zero(ring, rows, cols)
            acc = [[ring.zero] * cols for _ in range(rows)]
            for (i, j) in self._blocks[n]:
                src = self._offset(n, i)
                # dA (x) id into block (i+1, j)
                if A.term(i + 1) and B.term(j):
                    dst = self._offset(n + 1, i + 1)
                    blk = A.d(i).kron(Matrix.identity(ring, B.term(j)))
                    self._write(acc, blk, dst, src)
                # (-1)^i id (x) dB into block (i, j+1)
                if A.term(i) and B.term(j + 1):
                    dst = self._offset(n + 1, i)
                    blk = Matrix.identity(ring, A.term(i)).kron(B.d(j))
                    if i % 2:
                        blk = blk.scale(ring.coerce(-1))
                    self._write(acc, blk, dst, src)
            diffs[n] = Matrix(ring, acc, rows, cols)
        self.complex = Complex(ring, terms, diffs)

    def _offset(self, n: int, i: int) -> int:
        off = 0
        for (a, b) in self._blocks.get(n, ()):
            if a == i:
                return off
            off += self.A.term(a) * self.B.term(b)
        raise LinAlgError(f"no block ({i}, {n - i}) in tensor degree {n}")

    def has_block(self, n: int, i: int) -> bool:
        return any(a == i for a, _ in self._blocks.get(n, ()))

    @staticmethod
    def _write(acc, blk: Matrix, r0: int, c0: int):
        for r in range(blk.nrows):
            row = blk.rows[r]
            arow = acc[r0 + r]
            for c in range(blk.ncols):
                if row[c]:
                    arow[c0 + c] = row[c]

    def blocks(self, n: int):
        return list(self._blocks.get(n, ()))

    def embed_block(self, n: int, i: int) -> Matrix:
        """A^i (x) B^{n-i} -> (A (x) B)^n column embedding."""
        ring = self.A.ring
        size = self.A.term(i) * self.B.term(n - i)
        total = self.complex.term(n)
        off = self._offset(n, i)
        M = [[ring.zero] * size for _ in range(total)]
        for k in range(size):
            M[off + k][k] = ring.one
        return Matrix(ring, M, total, size)

    def project_block(self, n: int, i: int) -> Matrix:
        return self.embed_block(n, i).transpose()

    def pure_tensor(self, i: int, j: int, x, y):
        """The element x (x) y placed into degree i + j."""
        ring = self.A.ring
        vec = [ring.zero] * (self.A.term(i) * self.B.term(j))
        rb = self.B.term(j)
        for a, xv in enumerate(x):
            if xv == 0:
                continue
            for b, yv in enumerate(y):
                if yv == 0:
                    continue
                vec[a * rb + b] = ring.mul(ring.coerce(xv), ring.coerce(yv))
        return tuple(self.embed_block(i + j, i).apply(vec))


def tensor(A: Complex, B: Complex) -> TensorView:
    return TensorView(A, B)


def tensor_chain_maps(tv_src: TensorView, tv_dst: TensorView,
                      f: GradedMap, g: GradedMap) -> GradedMap:
    """f (x) g for chain maps (degree 0 each, no Koszul signs)."""
    if f.degree or g.degree:
        raise LinAlgError("tensor_chain_maps needs degree-0 maps")
    comps = {}
    for n in tv_src.complex.degrees():
        pieces = None
        for (i, j) in tv_src.blocks(n):
            if not (tv_dst.A.term(i) and tv_dst.B.term(j)):
                continue
            blk = f.comp(i).kron(g.comp(j))
            M = tv_dst.embed_block(n, i) * blk * tv_src.project_block(n, i)
            pieces = M if pieces is None else pieces + M
        if pieces is not None:
            comps[n] = pieces
    return GradedMap(tv_src.complex, tv_dst.complex, 0, comps)


def tensor_homotopy_first(tv_src: TensorView, tv_dst: TensorView,
                          h: GradedMap, k: GradedMap,
                          g1: GradedMap, f2: GradedMap) -> GradedMap:
    """(h (x) k)_1: the standard homotopy f1 (x) g1 ~> f2 (x) g2.

    Formula: (h (x) k)_1 (x_n (x) y_m) = h(x_n) (x) g1(y_m)
    + (-1)^n f2(x_n) (x) k(y_m), where h: f1 ~> f2 and k: g1 ~> g2.
    """
    ring = tv_src.complex.ring
    comps = {}
    for n in tv_src.complex.degrees():
        pieces = None
        for (i, j) in tv_src.blocks(n):
            contributions = []
            # h(x) (x) g1(y) lands in block (i-1, j) of degree n-1
            if tv_dst.A.term(i - 1) and tv_dst.B.term(j):
                blk = h.comp(i).kron(g1.comp(j))
                contributions.append(tv_dst.embed_block(n - 1, i - 1) * blk)
            # (-1)^i f2(x) (x) k(y) lands in block (i, j-1)
            if tv_dst.A.term(i) and tv_dst.B.term(j - 1):
                blk = f2.comp(i).kron(k.comp(j))
                if i % 2:
                    blk = blk.scale(ring.coerce(-1))
                contributions.append(tv_dst.embed_block(n - 1, i) * blk)
            for M in contributions:
                M = M * tv_src.project_block(n, i)
                pieces = M if pieces is None else pieces + M
        if pieces is not None:
            comps[n] = pieces
    return GradedMap(tv_src.complex, tv_dst.complex, -1, comps)


def transposition_s12(tv_ab: TensorView, tv_ba: TensorView, signed: bool = True) -> GradedMap:
    """s12: A (x) B -> B (x) A, x_n (x) y_m -> (-1)^{nm} y_m (x) x_n.

    With ``signed=False`` this is the unsigned swap s12*.
    """
    ring = tv_ab.complex.ring
    comps = {}
    for n in tv_ab.complex.degrees():
        pieces = None
        for (i, j) in tv_ab.blocks(n):
            ra, rb = tv_ab.A.term(i), tv_ab.B.term(j)
            # permutation matrix swapping kron factor order
            M = [[ring.zero] * (ra * rb) for _ in range(rb * ra)]
            sign = ring.one
            if signed and (i * j) % 2:
                sign = ring.coerce(-1)
            for a in range(ra):
                for b in range(rb):
                    M[b * ra + a][a * rb + b] = sign
            blk = Matrix(ring, M, rb * ra, ra * rb)
            piece = tv_ba.embed_block(n, j) * blk * tv_ab.project_block(n, i)
            pieces = piece if pieces is None else pieces + piece
        if pieces is not None:
            comps[n] = pieces
    return GradedMap(tv_ab.complex, tv_ba.complex, 0, comps)


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------

class TruncationView:
    """tau_{>= m}: degree-m term replaced by coker(d^{m-1}), re-presented free.

    Field coefficients only (the cokernel is then free); ``projection`` is
    the canonical chain map C -> tau.
    """

    def __init__(self, C: Complex, m: int):
        if not C.ring.is_field:
            raise LinAlgError("truncation cokernel is only re-presented free over a field")
        self.C, self.m = C, m
        ring = C.ring
        D = C.d(m - 1)
        # basis of the image as reduced rows, to reduce vectors of C^m
        _, rows = D.transpose().row_reduce()
        pivots = []
        for r in rows:
            for c, x in enumerate(r):
                if x != 0:
                    pivots.append(c)
                    break
        pivot_set = set(pivots)
        free_pos = [c for c in range(C.term(m)) if c not in pivot_set]
        t = len(free_pos)
        # Normal form mod the image: reduce each basis vector against the
        # RREF rows (pivot entries 1, zeros in other pivot columns), then
        # read off the free coordinates.
        cols = []
        for c in range(C.term(m)):
            v = [ring.zero] * C.term(m)
            v[c] = ring.one
            for r, pc in zip(rows, pivots):
                coef = v[pc]
                if coef != 0:
                    for i in range(C.term(m)):
                        v[i] = ring.sub(v[i], ring.mul(coef, r[i]))
            cols.append(v)
        NF = Matrix.from_cols(ring, cols, nrows=C.term(m))
        proj = Matrix(ring, [[NF.rows[fp][c] for c in range(C.term(m))] for fp in free_pos],
                      t, C.term(m))
        # section: coker coords -> representative with zeros at pivots
        # Section: e_{free_pos[k]} is already in normal form (its pivot
        # coordinates vanish), so proj . sec = id on the nose.
        sec_cols = []
        for fp in free_pos:
            v = [ring.zero] * C.term(m)
            v[fp] = ring.one
            sec_cols.append(v)
        sec = Matrix.from_cols(ring, sec_cols, nrows=C.term(m)) if sec_cols \
            else Matrix.zero(ring, C.term(m), 0)
        terms = {n: C.term(n) for n in C.degrees() if n > m}
        if t:
            terms[m] = t
        diffs = {n: C.d(n) for n in C.degrees() if n > m and C.term(n + 1)}
        if t and C.term(m + 1):
            diffs[m] = C.d(m) * sec
        self.complex = Complex(C.ring, terms, diffs)
        self._proj_m = proj
        self._sec_m = sec
        comps = {}
        for n in C.degrees():
            if n > m:
                comps[n] = Matrix.identity(ring, C.term(n))
            elif n == m and t:
                comps[n] = proj
        self.projection = GradedMap(C, self.complex, 0, comps)
        verify_chain_map(self.projection, "truncation projection")

    def section_at_m(self) -> Matrix:
        return self._sec_m


def truncate_ge(C: Complex, m: int) -> TruncationView:
    return TruncationView(C, m)


def truncate_chain_map(f: GradedMap, tv_src: TruncationView, tv_dst: TruncationView) -> GradedMap:
    """Induced map tau_{>=m} C -> tau_{>=m} C' of a chain map f."""
    if tv_src.m != tv_dst.m:
        raise LinAlgError("truncation degree mismatch")
    m = tv_src.m
    comps = {}
    for n in tv_src.complex.degrees():
        if n > m:
            comps[n] = f.comp(n)
        else:
            comps[n] = tv_dst._proj_m * f.comp(m) * tv_src.section_at_m()
    out = GradedMap(tv_src.complex, tv_dst.complex, 0, comps)
    verify_chain_map(out, "truncated chain map")
    return out


# ---------------------------------------------------------------------------
# cohomology
# ---------------------------------------------------------------------------

def cohomology(C: Complex, n: int) -> Subquotient:
    """H^n(C) = ker d(n) / im d(n-1) as a Subquotient of C^n."""
    ring = C.ring
    if C.term(n) == 0:
        return Subquotient(ring, 0, [], [])
    kers = C.d(n).kernel_basis()
    ims = [tuple(col) for col in zip(*C.d(n - 1).rows)] if C.term(n - 1) else []
    ims = [v for v in ims if any(x != 0 for x in v)]
    return Subquotient(ring, C.term(n), kers, ims)


def induced_map_on_cohomology(f: GradedMap, n: int,
                              hq_src: Subquotient | None = None,
                              hq_dst: Subquotient | None = None) -> Matrix:
    """Matrix of H^n(f) in the chosen representative bases."""
    hq_src = hq_src or cohomology(f.source, n)
    hq_dst = hq_dst or cohomology(f.target, n + f.degree)
    cols = []
    for rep in hq_src.reps:
        img = f.comp(n).apply(rep)
        cols.append(list(hq_dst.classify(img)))
    return Matrix.from_cols(f.ring, cols, nrows=hq_dst.rank) if cols \
        else Matrix.zero(f.ring, hq_dst.rank, 0)


# ---------------------------------------------------------------------------
# linear solvers for missing witnesses
# ---------------------------------------------------------------------------

def _graded_system(source: Complex, target: Complex, degree: int, equations):
    """Assemble the linear system for an unknown GradedMap X of given degree.

    ``equations`` is a list of (degree n, rhs Matrix, terms) where terms is a
    list of (L: Matrix | None, comp_degree k, R: Matrix | None) contributing
    L * X(k) * R to the equation.  Returns (M, rhs_vec, offsets, comp_degs).
    """
    ring = source.ring
    comp_degs = sorted({k for (_, _, terms) in equations for (_, k, _) in terms
                        if source.term(k) and target.term(k + degree)})
    offsets = {}
    total = 0
    for k in comp_degs:
        offsets[k] = total
        total += target.term(k + degree) * source.term(k)
    rows = []
    rhs = []
    for (_, R0, terms) in equations:
        er, ec = R0.shape
        for i in range(er):
            for j in range(ec):
                row = [ring.zero] * total
                for (L, k, R) in terms:
                    if k not in offsets:
                        continue
                    tr = target.term(k + degree)
                    sc = source.term(k)
                    # coefficient of X(k)[a, b] in entry (i, j):
                    # L[i, a] * R[b, j]  (L, R optional identity)
                    for a in range(tr):
                        la = L.rows[i][a] if L is not None else (ring.one if i == a else ring.zero)
                        if la == 0:
                            continue
                        base = offsets[k] + a * sc
                        for b in range(sc):
                            rb = R.rows[b][j] if R is not None else (ring.one if b == j else ring.zero)
                            if rb == 0:
                                continue
                            row[base + b] = ring.add(row[base + b], ring.mul(la, rb))
                rows.append(row)
                rhs.append(R0.rows[i][j])
    M = Matrix(ring, rows, len(rows), total) if rows else Matrix.zero(ring, 0, total)
    return M, tuple(rhs), offsets, comp_degs


def _vector_to_graded(source, target, degree, sol, offsets, comp_degs):
    ring = source.ring
    comps = {}
    for k in comp_degs:
        tr, sc = target.term(k + degree), source.term(k)
        block = [[sol[offsets[k] + a * sc + b] for b in range(sc)] for a in range(tr)]
        comps[k] = Matrix(ring, block, tr, sc)
    return GradedMap(source, target, degree, comps)


def _solve_graded(source: Complex, target: Complex, degree: int, equations):
    """Solve for a GradedMap X satisfying the equations, or return None."""
    M, rhs, offsets, comp_degs = _graded_system(source, target, degree, equations)
    if M.nrows == 0:
        return GradedMap(source, target, degree, {})
    sol = M.solve(rhs)
    if sol is None:
        return None
    return _vector_to_graded(source, target, degree, sol, offsets, comp_degs)


def solve_homotopy(f: GradedMap, g: GradedMap, forced_zero_degrees=()):
    """Find h with d h + h d = g - f, or None.  f, g: chain maps A -> B.

    ``forced_zero_degrees`` pins h.comp(n) = 0 at the listed source degrees.
    """
    A, B = f.source, f.target
    equations = []
    degs = sorted(set(A.degrees()) | set(B.degrees()))
    if not degs:
        return zero_map(A, B, f.degree - 1)
    lo, hi = min(degs), max(degs)
    deg = f.degree
    for n in range(lo - 1, hi + 2):
        rhs = g.comp(n) - f.comp(n)
        if rhs.nrows == 0 or rhs.ncols == 0:
            continue
        terms = []
        if n not in forced_zero_degrees:
            terms.append((B.d(n + deg - 1), n, None))
        if (n + 1) not in forced_zero_degrees:
            terms.append((None, n + 1, A.d(n)))
        equations.append((n, rhs, terms))
    return _solve_graded(A, B, deg - 1, equations)


# ---------------------------------------------------------------------------
# random instances (used by the fuzz suites and the CLI)
# ---------------------------------------------------------------------------

def random_complex(ring: Ring, rng: random.Random, deg_lo: int = 0, deg_hi: int = 2,
                   spheres: int | None = None, disks: int | None = None) -> Complex:
    """A random bounded complex with controlled cohomology.

    Built as a direct sum of shifted spheres (one generator, zero
    differential) and disks (identity differential R -> R), then conjugated
    degreewise by random invertible matrices.  Cohomology rank at degree n
    equals the number of spheres placed there, which makes these good fuzz
    inputs with known answers.
    """
    if spheres is None:
        spheres = rng.randint(1, 3)
    if disks is None:
        disks = rng.randint(0, 3)
    terms = {n: 0 for n in range(deg_lo, deg_hi + 2)}
    disk_slots = {n: 0 for n in range(deg_lo, deg_hi + 1)}
    for _ in range(spheres):
        terms[rng.randint(deg_lo, deg_hi)] += 1
    for _ in range(disks):
        n = rng.randint(deg_lo, deg_hi)
        disk_slots[n] += 1
        terms[n] += 1
        terms[n + 1] += 1
    terms = {n: r for n, r in terms.items() if r}
    diffs = {}
    for n in sorted(terms):
        rows, cols = terms.get(n + 1, 0), terms[n]
        if rows and cols:
            # disk generators sit at the end of degree n and the start of
            # degree n+1 is irrelevant -- place the identity block in the
            # top-right corner
            k = disk_slots.get(n, 0)
            M = [[ring.zero] * cols for _ in range(rows)]
            for i in range(k):
                M[i][cols - k + i] = ring.one
            diffs[n] = Matrix(ring, M, rows, cols)
    C = Complex(ring, terms, diffs)
    # conjugate by random automorphisms
    U = {n: Matrix.random_invertible(ring, C.term(n), rng) for n in C.degrees()}
    new_diffs = {}
    for n in C.degrees():
        if C.term(n + 1) and C.term(n):
            new_diffs[n] = U[n + 1] * C.d(n) * U[n].inverse()
    return Complex(ring, dict(C._terms), new_diffs)


def random_graded_map(source: Complex, target: Complex, degree: int,
                      rng: random.Random, height: int = 5) -> GradedMap:
    comps = {}
    for n in source.degrees():
        if target.term(n + degree):
            comps[n] = Matrix.random(ring=source.ring, nrows=target.term(n + degree),
                                     ncols=source.term(n), rng=rng, height=height)
    return GradedMap(source, target, degree, comps)


def random_chain_map(source: Complex, target: Complex, rng: random.Random,
                     degree: int = 0) -> GradedMap:
    """A random solution of d f = f d (a random kernel combination)."""
    ring = source.ring
    degs = sorted(set(source.degrees()) | set(t - degree for t in target.degrees()))
    equations = []
    for n in degs:
        rows, cols = target.term(n + degree + 1), source.term(n)
        if rows == 0 or cols == 0:
            continue
        rhs = Matrix.zero(ring, rows, cols)
        minus_one = ring.coerce(-1)
        terms = [(target.d(n + degree), n, None),
                 (None, n + 1, source.d(n).scale(minus_one))]
        equations.append((n, rhs, terms))
    M, _, offsets, comp_degs = _graded_system(source, target, degree, equations)
    total = M.ncols
    sol = [ring.zero] * total
    for v in M.kernel_basis():
        c = ring.random_element(rng)
        for i, x in enumerate(v):
            sol[i] = ring.add(sol[i], ring.mul(c, x))
    return _vector_to_graded(source, target, degree, sol, offsets, comp_degs)


def homotopy_boundary(h: GradedMap) -> GradedMap:
    """d h + h d as a degree-(h.degree + 1) GradedMap."""
    comps = {}
    for n in set(h.degrees()):
        M = h.target.d(n + h.degree) * h.comp(n) + h.comp(n + 1) * h.source.d(n)
        comps[n] = M
    return GradedMap(h.source, h.target, h.degree + 1, comps)


def solve_second_order(h: GradedMap, k: GradedMap):
    """Find H with H d - d H = k - h, or None (h, k homotopies A -> B)."""
    A, B = h.source, h.target
    equations = []
    degs = sorted(set(A.degrees()) | set(B.degrees()))
    if not degs:
        return zero_map(A, B, h.degree - 1)
    lo, hi = min(degs), max(degs)
    deg = h.degree
    minus_one = A.ring.coerce(-1)
    for n in range(lo - 1, hi + 2):
        rhs = k.comp(n) - h.comp(n)
        if rhs.nrows == 0 or rhs.ncols == 0:
            continue
        terms = [(None, n + 1, A.d(n)),
                 (B.d(n + deg - 1).scale(minus_one), n, None)]
        equations.append((n, rhs, terms))
    return _solve_graded(A, B, deg - 1, equations)
