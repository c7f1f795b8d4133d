"""Exact dense linear algebra over Q, F_p and Z/p^m.

Everything downstream (complexes, cones, cup products, Selmer machinery)
reduces to the primitives in this module:

* ``Ring`` -- the three supported coefficient rings.  Elements are plain
  Python objects: ``Fraction`` over Q, ints in ``[0, p^m)`` otherwise.
* ``Matrix`` -- immutable dense matrix acting on column vectors.
* ``solve`` / ``kernel_basis`` -- exact solvers.  Over Z/p^m these go
  through the Howell form, which is the right echelon notion in the
  presence of zero divisors (the row span of the reduced form contains
  every vector of the span supported on a suffix of the columns).
* ``Subquotient`` -- Z/B presented by representatives; over a field a
  basis, over Z/p^m generators with invariant-factor orders obtained
  from an integer Smith normal form.

All arithmetic is exact; there are no floats anywhere in the package.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

_QZERO = Fraction(0)
_QONE = Fraction(1)

try:
    import numpy as _np
except ImportError:  # pragma: no cover - numpy is a hard dependency in practice
    _np = None

# numpy is only an accelerator for F_p elimination; results are identical
# to the generic path (RREF is unique).  Matrices smaller than this just
# use the pure-Python code.
_NUMPY_MIN_CELLS = 4096


class LinAlgError(Exception):
    """Raised on structurally invalid input (shape mismatch, bad ring...)."""


@dataclass(frozen=True)
class Ring:
    """One of Q, F_p, or Z/p^m, with element-level arithmetic helpers."""

    kind: str  # "Q" | "Fp" | "Zpm"
    p: int | None = None
    m: int = 1

    # -- constructors -------------------------------------------------

    @staticmethod
    def rationals() -> "Ring":
        return Ring("Q")

    @staticmethod
    def prime_field(p: int) -> "Ring":
        if p < 2 or not _is_prime(p):
            raise LinAlgError(f"not a prime: {p}")
        return Ring("Fp", p, 1)

    @staticmethod
    def residue_ring(p: int, m: int) -> "Ring":
        if p < 2 or not _is_prime(p):
            raise LinAlgError(f"not a prime: {p}")
        if m < 1:
            raise LinAlgError(f"bad exponent: {m}")
        if m == 1:
            return Ring("Fp", p, 1)
        return Ring("Zpm", p, m)

    @staticmethod
    def from_token(token: str) -> "Ring":
        """Parse ``"Q"``, ``"F5"``, ``"Z5^3"`` style ring tokens."""
        token = token.strip()
        if token == "Q":
            return Ring.rationals()
        if token.startswith("F"):
            return Ring.prime_field(int(token[1:]))
        if token.startswith("Z") and "^" in token:
            base, _, exp = token[1:].partition("^")
            return Ring.residue_ring(int(base), int(exp))
        raise LinAlgError(f"cannot parse ring token {token!r}")

    def token(self) -> str:
        if self.kind == "Q":
            return "Q"
        if self.kind == "Fp":
            return f"F{self.p}"
        return f"Z{self.p}^{self.m}"

    def to_json(self):
        if self.kind == "Q":
            return {"kind": "Q"}
        if self.kind == "Fp":
            return {"kind": "Fp", "p": self.p}
        return {"kind": "Zpm", "p": self.p, "m": self.m}

    @staticmethod
    def from_json(obj) -> "Ring":
        kind = obj["kind"]
        if kind == "Q":
            return Ring.rationals()
        if kind == "Fp":
            return Ring.prime_field(obj["p"])
        if kind == "Zpm":
            return Ring.residue_ring(obj["p"], obj["m"])
        raise LinAlgError(f"unknown ring kind {kind!r}")

    # -- element arithmetic -------------------------------------------

    @property
    def modulus(self) -> int | None:
        return None if self.kind == "Q" else self.p ** self.m

    @property
    def is_field(self) -> bool:
        return self.kind in ("Q", "Fp")

    @property
    def characteristic(self) -> int:
        return 0 if self.kind == "Q" else (self.p if self.kind == "Fp" else self.p ** self.m)

    def coerce(self, x):
        if self.kind == "Q":
            if type(x) is Fraction:
                return x
            if isinstance(x, float):
                raise LinAlgError("floats are not exact; refusing to coerce")
            return Fraction(x)
        if type(x) is int:
            return x % self.modulus
        if isinstance(x, Fraction):
            if x.denominator % self.p == 0:
                raise LinAlgError(f"denominator {x.denominator} not invertible mod {self.modulus}")
            return x.numerator * pow(x.denominator, -1, self.modulus) % self.modulus
        return int(x) % self.modulus

    @property
    def zero(self):
        return _QZERO if self.kind == "Q" else 0

    @property
    def one(self):
        return _QONE if self.kind == "Q" else 1

    def add(self, a, b):
        return (a + b) if self.kind == "Q" else (a + b) % self.modulus

    def sub(self, a, b):
        return (a - b) if self.kind == "Q" else (a - b) % self.modulus

    def mul(self, a, b):
        return (a * b) if self.kind == "Q" else (a * b) % self.modulus

    def neg(self, a):
        return -a if self.kind == "Q" else (-a) % self.modulus

    def is_zero(self, a) -> bool:
        return a == 0

    def val(self, a) -> int:
        """p-adic valuation, capped at m.  Fields: 0 for units, m(=1) for 0."""
        if a == 0:
            return self.m if self.kind != "Q" else 1
        if self.kind in ("Q", "Fp"):
            return 0
        v = 0
        while a % self.p == 0:
            a //= self.p
            v += 1
        return v

    def is_unit(self, a) -> bool:
        if self.kind == "Q":
            return a != 0
        return a % self.p != 0

    def inv(self, a):
        if not self.is_unit(a):
            raise LinAlgError(f"not a unit: {a!r} in {self.token()}")
        if self.kind == "Q":
            return 1 / a
        return pow(a, -1, self.modulus)

    def unit_part_inv(self, a):
        """For a = u * p^v with u a unit, return u^{-1} (fields: a^{-1})."""
        if a == 0:
            raise LinAlgError("zero has no unit part")
        if self.kind in ("Q", "Fp"):
            return self.inv(a)
        v = self.val(a)
        u = (a // self.p ** v) % self.modulus
        return pow(u, -1, self.modulus)

    def pivot_value(self, v: int):
        """Canonical pivot p^v (fields: 1)."""
        if self.kind in ("Q", "Fp"):
            return self.one
        return self.p ** v

    def divide_by_pivot(self, a, v: int):
        """Exact division a / p^v; requires val(a) >= v."""
        if self.kind in ("Q", "Fp"):
            return a
        if a % (self.p ** v) != 0:
            raise LinAlgError("inexact division by pivot")
        return a // self.p ** v

    def random_element(self, rng: random.Random, height: int = 5):
        if self.kind == "Q":
            return Fraction(rng.randint(-height, height), rng.randint(1, height))
        return rng.randrange(self.modulus)

    def random_unit(self, rng: random.Random, height: int = 5):
        while True:
            x = self.random_element(rng, height)
            if self.is_unit(x):
                return x

    def el_to_json(self, a):
        if self.kind == "Q":
            return [a.numerator, a.denominator]
        return int(a)

    def el_from_json(self, obj):
        if self.kind == "Q":
            if isinstance(obj, list):
                return Fraction(obj[0], obj[1])
            return Fraction(obj)
        return int(obj) % self.modulus


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


class Matrix:
    """Immutable dense matrix over a ``Ring``, acting on column vectors."""

    __slots__ = ("ring", "nrows", "ncols", "rows")

    def __init__(self, ring: Ring, rows, nrows=None, ncols=None):
        self.ring = ring
        rows = tuple(tuple(ring.coerce(x) for x in r) for r in rows)
        if rows:
            w = len(rows[0])
            if any(len(r) != w for r in rows):
                raise LinAlgError("ragged rows")
            self.nrows, self.ncols = len(rows), w
        else:
            self.nrows, self.ncols = (nrows or 0), (ncols or 0)
            if self.nrows:
                rows = tuple(() for _ in range(self.nrows))
        self.rows = rows

    # -- constructors -------------------------------------------------

    @staticmethod
    def _raw(ring: Ring, rows, nrows: int, ncols: int) -> "Matrix":
        """Internal: entries already coerced; skips the per-entry check."""
        M = object.__new__(Matrix)
        M.ring = ring
        M.rows = tuple(r if type(r) is tuple else tuple(r) for r in rows)
        M.nrows, M.ncols = nrows, ncols
        return M

    @staticmethod
    def zero(ring: Ring, nrows: int, ncols: int) -> "Matrix":
        z = ring.zero
        return Matrix._raw(ring, [(z,) * ncols] * nrows, nrows, ncols)

    @staticmethod
    def identity(ring: Ring, n: int) -> "Matrix":
        z, o = ring.zero, ring.one
        return Matrix._raw(ring, [tuple(o if i == j else z for j in range(n)) for i in range(n)], n, n)

    @staticmethod
    def from_cols(ring: Ring, cols, ncols=None, nrows=None) -> "Matrix":
        cols = list(cols)
        if not cols:
            return Matrix.zero(ring, nrows or 0, 0)
        n = len(cols[0])
        return Matrix(ring, [[cols[j][i] for j in range(len(cols))] for i in range(n)], n, len(cols))

    @staticmethod
    def diagonal(ring: Ring, entries) -> "Matrix":
        entries = list(entries)
        n = len(entries)
        M = [[ring.zero] * n for _ in range(n)]
        for i, e in enumerate(entries):
            M[i][i] = ring.coerce(e)
        return Matrix(ring, M, n, n)

    def random(ring: Ring, nrows: int, ncols: int, rng: random.Random, height: int = 5) -> "Matrix":
        return Matrix(ring, [[ring.random_element(rng, height) for _ in range(ncols)]
                             for _ in range(nrows)], nrows, ncols)

    random = staticmethod(random)

    @staticmethod
    def random_invertible(ring: Ring, n: int, rng: random.Random, height: int = 5) -> "Matrix":
        while True:
            M = Matrix.random(ring, n, n, rng, height)
            if M.is_invertible():
                return M

    # -- basics --------------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, Matrix) and self.ring == other.ring
                and self.nrows == other.nrows and self.ncols == other.ncols
                and self.rows == other.rows)

    def __hash__(self):
        return hash((self.ring, self.nrows, self.ncols, self.rows))

    def __repr__(self):
        return f"Matrix({self.ring.token()}, {self.nrows}x{self.ncols})"

    def __getitem__(self, ij):
        return self.rows[ij[0]][ij[1]]

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def is_zero(self) -> bool:
        z = self.ring.zero
        return all(x == z for r in self.rows for x in r)

    def transpose(self) -> "Matrix":
        return Matrix._raw(self.ring, list(zip(*self.rows)) if self.rows and self.ncols else [],
                           self.ncols, self.nrows)

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check_same_shape(other)
        add = self.ring.add
        return Matrix._raw(
            self.ring,
            [tuple(add(a, b) for a, b in zip(r1, r2))
             for r1, r2 in zip(self.rows, other.rows)],
            self.nrows, self.ncols)

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + other.scale(self.ring.coerce(-1))

    def __neg__(self) -> "Matrix":
        return self.scale(self.ring.coerce(-1))

    def scale(self, c) -> "Matrix":
        c = self.ring.coerce(c)
        mul = self.ring.mul
        return Matrix._raw(self.ring,
                           [tuple(mul(c, x) if x else x for x in r) for r in self.rows],
                           self.nrows, self.ncols)

    def __mul__(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.nrows:
            raise LinAlgError(f"shape mismatch {self.shape} * {other.shape}")
        ring = self.ring
        if ring != other.ring:
            raise LinAlgError("ring mismatch")
        if ring.kind != "Q" and _np is not None and self.nrows * other.ncols >= 256:
            A = _np.array(self.rows, dtype=_np.int64).reshape(self.nrows, self.ncols)
            B = _np.array(other.rows, dtype=_np.int64).reshape(other.nrows, other.ncols)
            # chunk the contraction so products stay below 2**63
            q = ring.modulus
            C = _np.zeros((self.nrows, other.ncols), dtype=_np.int64)
            step = max(1, (2 ** 62) // max(1, q * q * max(1, self.ncols)))
            if step >= self.ncols:
                C = (A @ B) % q
            else:
                for k0 in range(0, self.ncols, step):
                    C = (C + A[:, k0:k0 + step] @ B[k0:k0 + step, :]) % q
            return Matrix(ring, C.tolist(), self.nrows, other.ncols)
        # row-sparse accumulation: walk only the nonzeros of each left row
        z = ring.zero
        add, mul = ring.add, ring.mul
        orows = other.rows
        nc = other.ncols
        out = []
        for r in self.rows:
            acc = None
            for k, a in enumerate(r):
                if not a:
                    continue
                orow = orows[k]
                if acc is None:
                    acc = [mul(a, b) if b else z for b in orow]
                else:
                    for j, b in enumerate(orow):
                        if b:
                            acc[j] = add(acc[j], mul(a, b))
            out.append(tuple(acc) if acc is not None else (z,) * nc)
        return Matrix._raw(ring, out, self.nrows, other.ncols)

    def apply(self, vec):
        """Matrix times column vector (given and returned as a tuple)."""
        if len(vec) != self.ncols:
            raise LinAlgError("vector length mismatch")
        ring = self.ring
        out = []
        for r in self.rows:
            s = ring.zero
            for a, x in zip(r, vec):
                if a and x:
                    s = ring.add(s, ring.mul(a, ring.coerce(x)))
            out.append(s)
        return tuple(out)

    def hstack(self, other: "Matrix") -> "Matrix":
        if self.nrows != other.nrows:
            raise LinAlgError("row count mismatch in hstack")
        return Matrix._raw(self.ring, [r1 + r2 for r1, r2 in zip(self.rows, other.rows)],
                           self.nrows, self.ncols + other.ncols)

    def vstack(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.ncols:
            raise LinAlgError("column count mismatch in vstack")
        return Matrix._raw(self.ring, list(self.rows) + list(other.rows),
                           self.nrows + other.nrows, self.ncols)

    def kron(self, other: "Matrix") -> "Matrix":
        """Kronecker product; basis order (i, j) -> i * other_dim + j."""
        ring = self.ring
        mul = ring.mul
        out = []
        for r1 in range(self.nrows):
            for r2 in range(other.nrows):
                row = []
                for c1 in range(self.ncols):
                    a = self.rows[r1][c1]
                    if a == 0:
                        row.extend([ring.zero] * other.ncols)
                    else:
                        row.extend(mul(a, b) for b in other.rows[r2])
                out.append(row)
        return Matrix._raw(ring, out, self.nrows * other.nrows, self.ncols * other.ncols)

    @staticmethod
    def block_diag(ring: Ring, blocks) -> "Matrix":
        blocks = list(blocks)
        nr = sum(b.nrows for b in blocks)
        nc = sum(b.ncols for b in blocks)
        M = [[ring.zero] * nc for _ in range(nr)]
        r0 = c0 = 0
        for b in blocks:
            for i in range(b.nrows):
                for j in range(b.ncols):
                    M[r0 + i][c0 + j] = b.rows[i][j]
            r0 += b.nrows
            c0 += b.ncols
        return Matrix._raw(ring, M, nr, nc)

    def submatrix(self, rows, cols) -> "Matrix":
        rows, cols = list(rows), list(cols)
        return Matrix(self.ring, [[self.rows[i][j] for j in cols] for i in rows],
                      len(rows), len(cols))

    def _check_same_shape(self, other):
        if self.shape != other.shape or self.ring != other.ring:
            raise LinAlgError(f"shape/ring mismatch {self.shape} vs {other.shape}")

    # -- elimination-based operations -----------------------------------

    def row_reduce(self):
        """Howell form of the row span (RREF over fields).

        Returns ``(pivots, rows)`` where pivots is a list of
        ``(column, valuation)`` pairs and rows the reduced nonzero rows.
        """
        return _row_reduce(self.ring, [list(r) for r in self.rows], self.ncols)

    def rank(self) -> int:
        if not self.ring.is_field:
            raise LinAlgError("rank is only defined over a field; use row_reduce")
        pivots, _ = self.row_reduce()
        return len(pivots)

    def is_invertible(self) -> bool:
        if self.nrows != self.ncols:
            return False
        pivots, _ = self.row_reduce()
        return len(pivots) == self.nrows and all(v == 0 for _, v in pivots)

    def inverse(self) -> "Matrix":
        X = self.solve_matrix(Matrix.identity(self.ring, self.nrows))
        if X is None or self.nrows != self.ncols:
            raise LinAlgError("matrix is not invertible")
        return X

    def kernel_basis(self):
        """Generators of the right kernel {x : M x = 0}, as row vectors.

        Over a field this is a basis; over Z/p^m a Howell generating set
        (complete: every kernel element is a combination of these).
        """
        ring = self.ring
        n = self.ncols
        if n == 0:
            return []
        # rows of [M^T | I]: the row span is {(Mx, x)}.
        aug = []
        for j in range(n):
            row = [self.rows[i][j] for i in range(self.nrows)]
            row.extend(ring.one if t == j else ring.zero for t in range(n))
            aug.append(row)
        _, rows = _row_reduce(ring, aug, self.nrows + n)
        out = []
        for r in rows:
            if all(x == 0 for x in r[: self.nrows]):
                tail = tuple(r[self.nrows:])
                if any(x != 0 for x in tail):
                    out.append(tail)
        return out

    def solve(self, b):
        """One solution x of M x = b, or None if inconsistent."""
        X = self.solve_matrix(Matrix.from_cols(self.ring, [list(b)]))
        if X is None:
            return None
        return tuple(X.rows[i][0] for i in range(X.nrows))

    def solve_matrix(self, B: "Matrix"):
        """One solution X of M X = B (column-wise), or None."""
        ring = self.ring
        if B.nrows != self.nrows:
            raise LinAlgError("rhs row count mismatch")
        n = self.ncols
        aug = []
        for j in range(n):
            row = [self.rows[i][j] for i in range(self.nrows)]
            row.extend(ring.one if t == j else ring.zero for t in range(n))
            aug.append(row)
        pivots, rows = _row_reduce(ring, aug, self.nrows + n)
        cols = []
        for bcol in range(B.ncols):
            resid = [B.rows[i][bcol] for i in range(self.nrows)]
            acc = [ring.zero] * n
            for (pc, pv), r in zip(pivots, rows):
                if pc >= self.nrows:
                    break
                x = resid[pc]
                if x == 0:
                    continue
                if ring.val(x) < pv:
                    return None
                q = ring.divide_by_pivot(x, pv)
                for i in range(self.nrows):
                    if r[i]:
                        resid[i] = ring.sub(resid[i], ring.mul(q, r[i]))
                for i in range(n):
                    if r[self.nrows + i]:
                        acc[i] = ring.sub(acc[i], ring.mul(q, r[self.nrows + i]))
            if any(x != 0 for x in resid):
                return None
            cols.append([ring.neg(a) for a in acc])
        return Matrix.from_cols(ring, cols, nrows=n) if cols else Matrix.zero(ring, n, 0)

    def column_space_contains(self, b) -> bool:
        return self.solve(b) is not None

    # -- serialization ---------------------------------------------------

    def to_json(self):
        return [[self.ring.el_to_json(x) for x in r] for r in self.rows] \
            if self.ncols else {"nrows": self.nrows, "ncols": self.ncols}

    @staticmethod
    def from_json(ring: Ring, obj, nrows=None, ncols=None) -> "Matrix":
        if isinstance(obj, dict):
            return Matrix.zero(ring, obj["nrows"], obj["ncols"])
        return Matrix(ring, [[ring.el_from_json(x) for x in r] for r in obj], nrows, ncols)


# ---------------------------------------------------------------------------
# row reduction backends
# ---------------------------------------------------------------------------

def _row_reduce(ring: Ring, rows, ncols):
    if ring.kind == "Fp" and _np is not None and len(rows) * max(1, ncols) >= _NUMPY_MIN_CELLS:
        return _row_reduce_fp_numpy(ring, rows, ncols)
    return _row_reduce_generic(ring, rows, ncols)


def _row_reduce_generic(ring: Ring, rows, ncols):
    """Howell form over Z/p^m; plain RREF over Q and F_p.

    Pivots are normalized to p^v (1 over a field); entries above a pivot
    are reduced, and for v > 0 the annihilator multiple p^(m-v) * row is
    fed back in so the form has the Howell property.
    """
    echelon = {}  # pivot column -> (valuation, row)
    queue = [r for r in rows if any(x != 0 for x in r)]
    while queue:
        r = queue.pop()
        c = 0
        while c < ncols:
            if r[c] == 0:
                c += 1
                continue
            if c not in echelon:
                v = ring.val(r[c])
                u = ring.unit_part_inv(r[c])
                r = [ring.mul(u, x) for x in r]
                echelon[c] = (v, r)
                if not ring.is_field and 0 < v:
                    ann = ring.p ** (ring.m - v)
                    extra = [ring.mul(ann, x) for x in r]
                    if any(x != 0 for x in extra):
                        queue.append(extra)
                break
            pv, prow = echelon[c]
            rv = ring.val(r[c])
            if rv < pv:
                # the new row has the better pivot; swap and re-reduce old one
                v = rv
                u = ring.unit_part_inv(r[c])
                r = [ring.mul(u, x) for x in r]
                echelon[c] = (v, r)
                queue.append(prow)
                if not ring.is_field and 0 < v:
                    ann = ring.p ** (ring.m - v)
                    extra = [ring.mul(ann, x) for x in r]
                    if any(x != 0 for x in extra):
                        queue.append(extra)
                break
            q = ring.divide_by_pivot(r[c], pv)
            r = [ring.sub(x, ring.mul(q, y)) for x, y in zip(r, prow)]
            # pivot entry is now zero; continue to the right
        # if r became zero, nothing to do
    # back-substitution: clear above pivots (mod p^v over Z/p^m)
    cols = sorted(echelon)
    for idx, c in enumerate(cols):
        v, r = echelon[c]
        for c2 in cols[idx + 1:]:
            v2, r2 = echelon[c2]
            x = r[c2]
            if x == 0:
                continue
            if ring.is_field:
                q = x
            else:
                # reduce the entry into [0, p^{v2}) -- canonical Howell form
                q = (x // ring.p ** v2) % (ring.modulus // ring.p ** v2)
                if q == 0:
                    continue
            r = [ring.sub(a, ring.mul(q, b)) for a, b in zip(r, r2)]
        echelon[c] = (v, r)
    pivots = [(c, echelon[c][0]) for c in cols]
    return pivots, [echelon[c][1] for c in cols]


def _row_reduce_fp_numpy(ring: Ring, rows, ncols):
    p = ring.p
    A = _np.array(rows, dtype=_np.int64) % p
    nr = A.shape[0]
    piv_cols = []
    r = 0
    for c in range(ncols):
        if r >= nr:
            break
        col = A[r:, c]
        nz = _np.nonzero(col)[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            A[[r, i]] = A[[i, r]]
        A[r] = (A[r] * pow(int(A[r, c]), -1, p)) % p
        mask = _np.nonzero(A[:, c])[0]
        mask = mask[mask != r]
        if mask.size:
            A[mask] = (A[mask] - _np.outer(A[mask, c], A[r])) % p
        piv_cols.append(c)
        r += 1
    pivots = [(c, 0) for c in piv_cols]
    return pivots, [[int(x) for x in A[i]] for i in range(len(piv_cols))]


# ---------------------------------------------------------------------------
# integer Smith normal form (for Z/p^m subquotients)
# ---------------------------------------------------------------------------

def smith_normal_form(M):
    """SNF over Z for a list-of-lists integer matrix.

    Returns ``(diag, V)`` with ``diag`` the invariant factors (d_i | d_{i+1})
    and V the unimodular column transform: if x are coordinates in the old
    generators, y = V^{-1} x diagonalizes the relations.  Row transforms are
    not needed by callers and are dropped.
    """
    M = [list(map(int, r)) for r in M]
    nr = len(M)
    nc = len(M[0]) if nr else 0
    V = [[1 if i == j else 0 for j in range(nc)] for i in range(nc)]

    def col_op(j1, j2, a, b, c, d):
        # (col j1, col j2) <- (a*col j1 + b*col j2, c*col j1 + d*col j2)
        for r in M:
            x, y = r[j1], r[j2]
            r[j1], r[j2] = a * x + b * y, c * x + d * y
        for r in V:
            x, y = r[j1], r[j2]
            r[j1], r[j2] = a * x + b * y, c * x + d * y

    def row_op(i1, i2, a, b, c, d):
        x, y = M[i1], M[i2]
        M[i1] = [a * u + b * v for u, v in zip(x, y)]
        M[i2] = [c * u + d * v for u, v in zip(x, y)]

    t = 0
    while t < min(nr, nc):
        # find a nonzero pivot in the trailing block
        found = None
        for i in range(t, nr):
            for j in range(t, nc):
                if M[i][j] != 0:
                    found = (i, j)
                    break
            if found:
                break
        if not found:
            break
        i, j = found
        if i != t:
            M[t], M[i] = M[i], M[t]
        if j != t:
            col_op(t, j, 0, 1, 1, 0)
        while True:
            # clear column t with row gcd steps
            done = True
            for i in range(nr):
                if i != t and M[i][t] != 0:
                    done = False
                    a, b = M[t][t], M[i][t]
                    g, s, u = _xgcd(a, b)
                    row_op(t, i, s, u, -(b // g), a // g)
            for j in range(nc):
                if j != t and M[t][j] != 0:
                    done = False
                    a, b = M[t][t], M[t][j]
                    g, s, u = _xgcd(a, b)
                    col_op(t, j, s, -(b // g), u, a // g)
            if done:
                break
        t += 1
    # enforce divisibility d_i | d_{i+1}
    k = min(nr, nc)
    for rep in range(k):
        changed = False
        for i in range(k - 1):
            a, b = M[i][i] if i < nr else 0, M[i + 1][i + 1] if i + 1 < nr else 0
            if a and b and b % a != 0:
                changed = True
                # standard 2x2 trick: move gcd up front
                col_op(i, i + 1, 1, 0, 1, 1)  # col i += col i+1
                a2, b2 = M[i][i], M[i + 1][i]
                g, s, u = _xgcd(a2, b2)
                row_op(i, i + 1, s, u, -(b2 // g), a2 // g)
                for j in range(nc):
                    if j != i and M[i][j] != 0:
                        aa, bb = M[i][i], M[i][j]
                        gg, ss, uu = _xgcd(aa, bb)
                        col_op(i, j, ss, -(bb // gg), uu, aa // gg)
        if not changed:
            break
    diag = [abs(M[i][i]) for i in range(min(nr, nc))]
    return diag, V


def _xgcd(a, b):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


# ---------------------------------------------------------------------------
# subquotients
# ---------------------------------------------------------------------------

class NotInSubquotient(LinAlgError):
    """Vector not contained in the numerator submodule."""


class Subquotient:
    """Z/B inside a free ambient module, with explicit representatives.

    Over a field: ``reps`` is a basis of a complement of B in Z and
    ``orders`` is all zeros (free).  Over Z/p^m: ``reps`` generate and
    ``orders[i] = d_i`` are the invariant factors (p-powers > 1), so the
    group is  ⊕ Z/d_i.
    """

    def __init__(self, ring: Ring, ambient_dim: int, cocycles, boundaries):
        self.ring = ring
        self.ambient_dim = ambient_dim
        Z = [tuple(ring.coerce(x) for x in v) for v in cocycles]
        B = [tuple(ring.coerce(x) for x in v) for v in boundaries]
        for v in Z + B:
            if len(v) != ambient_dim:
                raise LinAlgError("bad ambient dimension")
        self._zmat = Matrix(ring, Z, len(Z), ambient_dim)
        self._bmat = Matrix(ring, B, len(B), ambient_dim)
        # sanity: B must sit inside Z
        zt = self._zmat.transpose()
        for v in B:
            if zt.solve(v) is None:
                raise LinAlgError("boundaries not contained in cocycles")
        if ring.is_field:
            self._init_field()
        else:
            self._init_zpm()

    def _init_field(self):
        ring = self.ring
        _, brows = self._bmat.row_reduce()
        basis = [list(r) for r in brows]
        nb = len(basis)
        reps = []
        for v in self._zmat.rows:
            stack = Matrix(ring, basis + [list(r) for r in reps] + [list(v)],
                           None, self.ambient_dim)
            if len(stack.row_reduce()[0]) > nb + len(reps):
                reps.append(tuple(v))
        self.reps = reps
        self.orders = [0] * len(reps)
        self._bbasis = [tuple(r) for r in brows]
        # solve matrix for classify: columns = reps then B-basis
        cols = [list(r) for r in reps] + [list(r) for r in self._bbasis]
        self._classify_mat = Matrix.from_cols(ring, cols, nrows=self.ambient_dim) \
            if cols else Matrix.zero(ring, self.ambient_dim, 0)

    def _init_zpm(self):
        ring = self.ring
        _, zrows = self._zmat.row_reduce()
        gens = [tuple(r) for r in zrows]  # canonical generators of Z
        k = len(gens)
        gmat = Matrix.from_cols(ring, [list(g) for g in gens], nrows=self.ambient_dim) \
            if gens else Matrix.zero(ring, self.ambient_dim, 0)
        rel_rows = []
        _, brows = self._bmat.row_reduce()
        for b in brows:
            coords = gmat.solve(tuple(b))
            if coords is None:
                raise LinAlgError("boundaries not contained in cocycles")
            rel_rows.append([int(c) for c in coords])
        rel_rows.append([0] * k)  # keep shape sane when k = 0
        q = ring.modulus
        lifted = rel_rows + [[q if i == j else 0 for j in range(k)] for i in range(k)]
        diag, V = smith_normal_form(lifted)
        diag = list(diag) + [0] * (k - len(diag))
        self._diag_full = [(_gcd(diag[j], q) if diag[j] else q) for j in range(k)]
        reps, orders = [], []
        for j in range(k):
            d = self._diag_full[j]
            if d == 1:
                continue  # killed generator
            vec = [ring.zero] * self.ambient_dim
            for i in range(k):
                c = V[i][j] % q
                if c:
                    for t in range(self.ambient_dim):
                        vec[t] = ring.add(vec[t], ring.mul(c, gens[i][t]))
            reps.append(tuple(vec))
            orders.append(d)
        self.reps = reps
        self.orders = orders
        self._gens = gens
        self._gmat = gmat
        self._V = V
        self._k = k

    # -- queries ---------------------------------------------------------

    @property
    def rank(self) -> int:
        """Number of representatives (dimension over a field)."""
        return len(self.reps)

    @property
    def invariant_factors(self):
        return tuple(self.orders)

    def classify(self, v):
        """Coordinates of [v] in terms of ``reps``.

        Raises NotInSubquotient if v is not in the numerator span.
        """
        ring = self.ring
        v = tuple(ring.coerce(x) for x in v)
        if ring.is_field:
            if self._classify_mat.ncols == 0:
                if any(x != 0 for x in v):
                    raise NotInSubquotient("vector outside numerator")
                return ()
            sol = self._classify_mat.solve(v)
            if sol is None:
                raise NotInSubquotient("vector outside numerator")
            return tuple(sol[: len(self.reps)])
        coords = self._gmat.solve(v)
        if coords is None:
            raise NotInSubquotient("vector outside numerator")
        q = ring.modulus
        # y = V^{-1} x over Z/q
        Vm = Matrix(ring, [[c % q for c in row] for row in self._V], self._k, self._k)
        y = Vm.solve(tuple(coords))
        if y is None:  # V unimodular, cannot happen
            raise LinAlgError("unimodular solve failed")
        out = []
        for j in range(self._k):
            d = self._diag_full[j]
            if d == 1:
                continue
            out.append(int(y[j]) % d)
        return tuple(out)

    def is_zero_class(self, v) -> bool:
        return all(c == 0 for c in self.classify(v))

    def element_from_coords(self, coords):
        ring = self.ring
        vec = [ring.zero] * self.ambient_dim
        for c, rep in zip(coords, self.reps):
            c = ring.coerce(c)
            for t in range(self.ambient_dim):
                vec[t] = ring.add(vec[t], ring.mul(c, rep[t]))
        return tuple(vec)

    def describe(self):
        if self.ring.is_field:
            return {"rank": self.rank}
        return {"invariant_factors": list(self.invariant_factors)}


def _gcd(a, b):
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a
