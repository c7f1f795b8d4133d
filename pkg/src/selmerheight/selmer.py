"""Selmer complexes over finite group models.

A Selmer datum is a global cochain complex together with a list of local
conditions; the Selmer complex is the shifted cone over
(global (+) conditions) -> (local targets).  On top of the assembly this
module provides the cup product into a truncated twist target, the
Bockstein coming from an additive character, and the height pairing on H^1
with an exact skew-symmetry certificate.
"""

from dataclasses import dataclass

from .linalg import Ring, Matrix, LinAlgError
from .complexes import (Complex, GradedMap, VerificationError, zero_complex,
                        zero_map, identity_map, verify_chain_map,
                        verify_homotopy, homotopy_defect, cohomology,
                        direct_sum, tensor, tensor_chain_maps,
                        transposition_s12, truncate_ge, truncate_chain_map,
                        solve_homotopy)
from .products import (ProductDatum, BocksteinDatum, TranspositionDatum,
                       build_E, cup_r_h, homotopy_k, bockstein_E,
                       bockstein_E_square_witness, check_conditions,
                       d_commutator, solve_d_commutator, _cup_block)
from .cochains import (GroupModel, GModule, cochain_complex, cup_c,
                       induced_cochain_map, bockstein_cochain,
                       transposition_c, swap_factors_map, homotopy_a,
                       build_K, PeriodModel, _check_logchi, _tuples,
                       _tuple_index)
from .phigamma import (PhiGammaModule, herr_complex, herr_cup,
                       bockstein as phigamma_bockstein, DualityTarget)


# ---------------------------------------------------------------------------
# small group-theoretic helpers
# ---------------------------------------------------------------------------

def _identity_index(G: GroupModel) -> int:
    for e in range(G.size):
        if all(G.mul(e, x) == x for x in range(G.size)):
            return e
    raise LinAlgError("group table has no identity")


def cyclic_subgroup(G: GroupModel, g: int):
    """The subgroup generated by g as its own GroupModel, plus the list
    sending subgroup index i to the ambient index of g^i."""
    e = _identity_index(G)
    elems = [e]
    cur = g
    while cur != e:
        elems.append(cur)
        cur = G.mul(cur, g)
    return GroupModel.cyclic(len(elems)), elems


def restrict_module(V: GModule, H: GroupModel, elems) -> GModule:
    return GModule(H, V.ring, [V.mats[x] for x in elems])


def restriction_map(A: Complex, G: GroupModel, V: GModule, H: GroupModel,
                    elems, CH: Complex, cap: int) -> GradedMap:
    """Cochain restriction along the subgroup inclusion given by ``elems``."""
    ring = V.ring
    r = V.rank
    size, hs = G.size, H.size
    comps = {}
    for n in range(cap + 1):
        rows = [[ring.zero] * (size ** n * r) for _ in range(hs ** n * r)]
        for t in _tuples(hs, n):
            ti = _tuple_index(hs, t)
            gi = _tuple_index(size, tuple(elems[x] for x in t))
            for i in range(r):
                rows[ti * r + i][gi * r + i] = ring.one
        comps[n] = Matrix(ring, rows, hs ** n * r, size ** n * r)
    out = GradedMap(A, CH, 0, comps)
    verify_chain_map(out, "cochain restriction")
    return out


def _geom_powers(M: Matrix, k: int) -> Matrix:
    """1 + M + ... + M^{k-1} (zero for k = 0)."""
    ring = M.ring
    out = Matrix.zero(ring, M.nrows, M.ncols)
    acc = Matrix.identity(ring, M.nrows)
    for _ in range(k):
        out = out + acc
        acc = acc * M
    return out


def _datum_invalid(msg: str, degree: int = 0):
    raise VerificationError(f"datum-invalid: {msg}", degree)


# ---------------------------------------------------------------------------
# places
# ---------------------------------------------------------------------------

@dataclass
class Place:
    """One local condition, fully expanded.

    ``U`` is the condition complex, ``C`` the local target used for
    assembly (support kept inside [0,2] so the cone lives in [0,3]), and
    ``C_full`` the untruncated target the product layer works with.  The
    twist fields (C3 view, local cup, f3 component, Bocksteins) are present
    exactly when the place participates in the height pairing.
    """
    kind: str
    U: Complex
    C: Complex
    f: GradedMap                 # global -> C
    g: GradedMap                 # U -> C
    C_full: Complex = None
    f_full: GradedMap = None
    g_full: GradedMap = None
    C3view: object = None        # TruncationView of the local twist
    cup_local: GradedMap = None  # tensor(C_full, C_full) -> C3
    cup_local_swapped: GradedMap = None
    f3: GradedMap = None         # tau_{>=2}(global twist) -> C3
    beta_C: GradedMap = None     # local Bockstein on C_full
    beta_U: GradedMap = None
    L: object = None             # the per-place character value
    carries_twist_generator: bool = False
    data: dict = None

    @property
    def heights_ready(self) -> bool:
        return self.C3view is not None


# ---------------------------------------------------------------------------
# the datum
# ---------------------------------------------------------------------------

class SelmerDatum:
    """Global module + local conditions + character data.

    The global complex is C(G, V) up to degree ``cap``; each place is added
    through one of the add_* builders, which construct and verify the
    structure maps.  ``logchi`` is the global additive character (one ring
    element per group element); per-place scalars ride on the place data.
    """

    def __init__(self, G: GroupModel, V: GModule, logchi=None, cap: int = 3,
                 budget: int = 60000):
        self.G, self.V = G, V
        self.ring = V.ring
        self.cap = cap
        self.budget = budget
        if logchi is None:
            logchi = [0] * G.size
        try:
            self.logchi = _check_logchi(G, self.ring, logchi)
        except VerificationError:
            raise VerificationError(
                "logchi-not-homomorphism: the global character is not additive", 0)
        self.A = cochain_complex(G, V, cap, budget)
        self.places = []
        self._assembled = None
        self._hl = None

    # -- builders ----------------------------------------------------------

    def add_unramified_place(self, fr: int, W: Matrix = None):
        """Two-term condition [W --(Fr-1)--> W] over the subgroup <Fr>.

        ``W`` (columns in V) must be Fr-stable and, when <Fr> is nontrivial,
        killed by the norm element: that is exactly when the value-at-powers
        cochain t |-> (Fr^k |-> (1 + Fr + ... + Fr^{k-1}) t) is a cocycle.
        Defaults to the image of Fr - 1.
        """
        ring, V = self.ring, self.V
        r = V.rank
        FrV = V.act(fr)
        if W is None:
            delta = FrV - Matrix.identity(ring, r)
            cols = [list(col) for col in zip(*delta.rows)] if r else []
            # deterministic column basis of the image
            basis = []
            for c in cols:
                stack = Matrix(ring, basis + [c], None, r)
                if len(stack.row_reduce()[0]) > len(basis):
                    basis.append(c)
            W = Matrix.from_cols(ring, basis, nrows=r) if basis \
                else Matrix.zero(ring, r, 0)
        k = W.ncols
        fr_W = W.solve_matrix(FrV * W)
        if fr_W is None or W * fr_W != FrV * W:
            _datum_invalid("unramified carrier is not Frobenius-stable")
        H, elems = cyclic_subgroup(self.G, fr)
        n = H.size
        if n >= 2 and not (_geom_powers(FrV, n) * W).is_zero():
            _datum_invalid("unramified carrier must lie in the norm kernel")
        VH = restrict_module(V, H, elems)
        C_assembly = cochain_complex(H, VH, 2, self.budget)
        C_full = cochain_complex(H, VH, 3, self.budget)
        U = Complex(ring, {0: k, 1: k},
                    {0: fr_W - Matrix.identity(ring, k)} if k else {})
        # g: degree 0 is the carrier inclusion; degree 1 sends t to the
        # cochain with value (1 + Fr + ... + Fr^{i-1}) t at Fr^i.
        g1 = Matrix.zero(ring, 0, k)
        for i in range(n):
            g1 = g1.vstack(_geom_powers(FrV, i) * W)
        g_comps = {0: W, 1: g1}
        g_full = GradedMap(U, C_full, 0, dict(g_comps))
        verify_chain_map(g_full, "unramified condition map")
        g = GradedMap(U, C_assembly, 0, g_comps)
        f_full = restriction_map(self.A, self.G, V, H, elems, C_full, 3)
        f = GradedMap(self.A, C_assembly, 0,
                      {m: f_full.comp(m) for m in range(3)})
        verify_chain_map(f, "restriction into the capped target")
        # twist layer
        tw = VH.tensor_with(VH)
        Ctw = cochain_complex(H, tw, 3, self.budget * 4)
        C3view = truncate_ge(Ctw, 2)
        lc_H = [self.logchi[x] for x in elems]
        beta_C = bockstein_cochain(H, VH, lc_H, 3)[1]
        L = self.logchi[fr]
        beta_U = GradedMap(U, U.shift(1), 0,
                           {0: fr_W.scale(ring.neg(L))} if k else {})
        place = Place(kind="unramified", U=U, C=C_assembly, f=f, g=g,
                      C_full=C_full, f_full=f_full, g_full=g_full,
                      C3view=C3view, beta_C=beta_C, beta_U=beta_U, L=L,
                      data={"fr": fr, "W": W, "H": H, "elems": elems,
                            "VH": VH, "tw": tw, "Ctw": Ctw})
        self.places.append(place)
        self._assembled = self._hl = None
        return place

    def add_phigamma_place(self, D: PhiGammaModule, plus_cols: Matrix,
                           pairing: Matrix, twist: PhiGammaModule = None,
                           f_mode: str = "isotropic"):
        """Condition = the (phi, gamma) complex of a direct summand of D,
        target = the (phi, gamma) complex of D itself.

        ``pairing``: D (x) D -> twist, equivariant; the summand must be
        isotropic for it (that is the orthogonality hypothesis).  The
        per-place character value is D.log_chi.
        """
        ring = self.ring
        j = plus_cols
        kk = j.ncols
        phi_plus = j.solve_matrix(D.phi * j)
        gamma_plus = j.solve_matrix(D.gamma * j)
        if phi_plus is None or gamma_plus is None \
                or D.phi * j != j * phi_plus or D.gamma * j != j * gamma_plus:
            _datum_invalid("phi-gamma payload is not an operator-stable submodule")
        sT = j.transpose().solve_matrix(Matrix.identity(ring, kk))
        if sT is None:
            _datum_invalid("phi-gamma payload is not a direct summand "
                           "(no splitting matrix)")
        D_plus = PhiGammaModule(ring, phi_plus, gamma_plus, log_chi=D.log_chi)
        U = herr_complex(D_plus)
        C = herr_complex(D)
        g = GradedMap(U, C, 0,
                      {0: j, 1: Matrix.block_diag(ring, [j, j]), 2: j})
        verify_chain_map(g, "phi-gamma condition map")
        if twist is None:
            twist = PhiGammaModule.trivial(ring, 1, log_chi=D.log_chi)
        # pairing shape/equivariance is verified inside herr_cup
        cup_full = herr_cup(D, D, pairing, twist)
        C3view = truncate_ge(herr_complex(twist), 2)
        cup_local = cup_full.then(C3view.projection)
        # the swapped product: pair the factors in the other order
        rows = [[ring.zero] * D.rank ** 2 for _ in range(D.rank ** 2)]
        for a in range(D.rank):
            for b in range(D.rank):
                rows[b * D.rank + a][a * D.rank + b] = ring.one
        swap = Matrix(ring, rows, D.rank ** 2, D.rank ** 2)
        cup_sw_full = herr_cup(D, D, pairing * swap, twist)
        cup_local_swapped = cup_sw_full.then(C3view.projection)
        f = self._phigamma_structure_map(D, f_mode)
        beta_C = phigamma_bockstein(D)[1]
        beta_U = phigamma_bockstein(D_plus)[1]
        place = Place(kind="phi-gamma", U=U, C=C, f=f, g=g,
                      C_full=C, f_full=f, g_full=g,
                      C3view=C3view, cup_local=cup_local,
                      cup_local_swapped=cup_local_swapped,
                      beta_C=beta_C, beta_U=beta_U, L=D.log_chi,
                      carries_twist_generator=True,
                      data={"D": D, "D_plus": D_plus, "j": j, "s": sT.transpose(),
                            "pairing": pairing, "twist": twist})
        self.places.append(place)
        self._assembled = self._hl = None
        return place

    def _phigamma_structure_map(self, D: PhiGammaModule, f_mode: str) -> GradedMap:
        """Global -> herr(D), supported in degrees 0, 1 with the degree-1
        value in the first (previous) slot and everything gamma-invariant.

        On such maps the local product vanishes identically in degrees >= 2,
        which is what makes the product-compatibility square strict.  The
        components solve
            (gamma - 1) f0 = 0,  (gamma - 1) p1 = 0,  p1 . d = (phi - 1) f0
        and we take the sum of a kernel basis (deterministic); "zero" skips
        the solve.
        """
        ring = self.ring
        C = herr_complex(D)
        rD, r = D.rank, self.V.rank
        size = self.G.size
        if f_mode == "zero" or rD == 0 or r == 0:
            return zero_map(self.A, C)
        I = Matrix.identity(ring, rD)
        gm = D.gamma - I
        ph = D.phi - I
        d0 = self.A.d(0)                      # (size r) x r
        n0, n1 = rD * r, rD * size * r        # unknowns in f0, p1
        rows = []
        # (gamma-1) f0 = 0
        for a in range(rD):
            for b in range(r):
                row = [ring.zero] * (n0 + n1)
                for c in range(rD):
                    row[c * r + b] = gm.rows[a][c]
                rows.append(row)
        # (gamma-1) p1 = 0
        for a in range(rD):
            for b in range(size * r):
                row = [ring.zero] * (n0 + n1)
                for c in range(rD):
                    row[n0 + c * size * r + b] = gm.rows[a][c]
                rows.append(row)
        # p1 . d0 - (phi-1) f0 = 0
        for a in range(rD):
            for b in range(r):
                row = [ring.zero] * (n0 + n1)
                for c in range(rD):
                    row[c * r + b] = ring.neg(ph.rows[a][c])
                for m in range(size * r):
                    row[n0 + a * size * r + m] = d0.rows[m][b]
                rows.append(row)
        M = Matrix(ring, rows, len(rows), n0 + n1)
        sol = [ring.zero] * (n0 + n1)
        for v in M.kernel_basis():
            sol = [ring.add(x, y) for x, y in zip(sol, v)]
        f0 = Matrix(ring, [[sol[a * r + b] for b in range(r)]
                           for a in range(rD)], rD, r)
        p1 = Matrix(ring, [[sol[n0 + a * size * r + b] for b in range(size * r)]
                           for a in range(rD)], rD, size * r)
        f1 = p1.vstack(Matrix.zero(ring, rD, size * r))
        out = GradedMap(self.A, C, 0, {0: f0, 1: f1})
        verify_chain_map(out, "global-to-local comparison map")
        return out

    def add_full_submodule_place(self, sub_cols: Matrix):
        """Condition = the full cochain complex of a G-submodule (assembly
        only; it carries no certified twist layer)."""
        ring, V, G = self.ring, self.V, self.G
        j = sub_cols
        k = j.ncols
        mats = []
        for gidx in range(G.size):
            m = j.solve_matrix(V.act(gidx) * j)
            if m is None or V.act(gidx) * j != j * m:
                _datum_invalid("full-submodule payload is not a G-submodule")
            mats.append(m)
        Msub = GModule(G, ring, mats)
        U = cochain_complex(G, Msub, 2, self.budget)
        C = cochain_complex(G, V, 2, self.budget)
        g = GradedMap(U, C, 0,
                      {n: Matrix.identity(ring, G.size ** n).kron(j)
                       for n in range(3)})
        verify_chain_map(g, "submodule condition map")
        f = GradedMap(self.A, C, 0,
                      {n: Matrix.identity(ring, G.size ** n * V.rank)
                       for n in range(3)})
        verify_chain_map(f, "identity restriction")
        place = Place(kind="full-submodule", U=U, C=C, f=f, g=g,
                      data={"j": j, "Msub": Msub})
        self.places.append(place)
        self._assembled = self._hl = None
        return place

    def add_period_place(self, pm: PeriodModel, plus_cols: Matrix = None):
        """Condition mapped through the period-model comparison: the target
        is the folded two-row complex K built from the period model, the
        global map is the comparison cochain map into it, and the condition
        is the K-complex of a G-submodule (assembly only)."""
        ring, V, G = self.ring, self.V, self.G
        bundle = build_K(G, V, pm, cap=1, budget=self.budget)
        K = bundle.K.complex
        res = GradedMap(self.A, bundle.C_V, 0,
                        {n: Matrix.identity(ring, G.size ** n * V.rank)
                         for n in range(2)})
        verify_chain_map(res, "cap-1 restriction")
        f = res.then(bundle.xi)
        if plus_cols is None:
            plus_cols = Matrix.identity(ring, V.rank)
        j = plus_cols
        mats = []
        for gidx in range(G.size):
            m = j.solve_matrix(V.act(gidx) * j)
            if m is None or V.act(gidx) * j != j * m:
                _datum_invalid("period-place payload is not a G-submodule")
            mats.append(m)
        Vplus = GModule(G, ring, mats)
        sub = build_K(G, Vplus, pm, cap=1, budget=self.budget)
        U = sub.K.complex
        VA_sub = GModule(G, ring, [m.kron(Matrix.identity(ring, pm.rank))
                                   for m in Vplus.mats])
        VA = GModule(G, ring, [m.kron(Matrix.identity(ring, pm.rank))
                               for m in V.mats])
        alpha = induced_cochain_map(G, VA_sub, VA,
                                    j.kron(Matrix.identity(ring, pm.rank)),
                                    1, "period-place inclusion")
        g = sub.K.total_map(bundle.K, alpha)
        verify_chain_map(g, "period-place condition map")
        place = Place(kind="phi-gamma", U=U, C=K, f=f, g=g,
                      data={"pm": pm, "bundle": bundle, "j": j})
        self.places.append(place)
        self._assembled = self._hl = None
        return place

    # -- assembly ----------------------------------------------------------

    def assemble(self):
        """The Selmer complex as an E-view (cone over global (+) conditions
        -> targets, shifted); support is checked to lie in [0,3]."""
        if self._assembled is not None:
            return self._assembled
        ring = self.ring
        if self.places:
            Bsum = direct_sum([p.U for p in self.places])
            Csum = direct_sum([p.C for p in self.places])
            f_total = None
            for i, p in enumerate(self.places):
                piece = p.f.then(Csum.inject(i))
                f_total = piece if f_total is None else f_total + piece
            g_total = Bsum.assemble_map(Csum, {(i, i): p.g
                                               for i, p in enumerate(self.places)})
        else:
            Z = zero_complex(ring)
            f_total = zero_map(self.A, Z)
            g_total = zero_map(Z, Z)
        ev = build_E(f_total, g_total)
        degs = [n for n in ev.complex.degrees() if ev.complex.term(n)]
        if degs and (min(degs) < 0 or max(degs) > 3):
            _datum_invalid(f"Selmer complex support {sorted(degs)} "
                           "exceeds [0,3]")
        self._assembled = ev
        return ev

    def h_ranks(self) -> dict:
        E = self.assemble().complex
        return {n: cohomology(E, n).rank for n in range(4)}

    # -- height layer ------------------------------------------------------

    def _heights(self):
        """Product datum + Bockstein data for the pairing (cached)."""
        if self._hl is not None:
            return self._hl
        ring = self.ring
        if ring.characteristic == 2:
            _datum_invalid("skew-symmetry reporting requires characteristic != 2")
        if not self.places:
            _datum_invalid("the height layer needs at least one place")
        for p in self.places:
            if not p.heights_ready:
                _datum_invalid(f"a {p.kind} place carries no twist layer "
                               "(assembly only)")
        G, V, cap = self.G, self.V, self.cap
        A = self.A
        tvAA = tensor(A, A)
        tw = V.tensor_with(V)
        Atw = cochain_complex(G, tw, cap, self.budget * 4)
        A3view = truncate_ge(Atw, 2)
        cup_raw = cup_c(V, V, cap, tv=tvAA)
        cup_A = cup_raw.then(A3view.projection)
        W_glob = swap_factors_map(V, V, cap)
        cup_A_swapped = cup_raw.then(W_glob).then(A3view.projection)
        beta_A = bockstein_cochain(G, V, self.logchi, cap)[1]

        Bsum = direct_sum([p.U for p in self.places])
        Csum = direct_sum([p.C_full for p in self.places])
        C3sum = direct_sum([p.C3view.complex for p in self.places])
        f1 = None
        for i, p in enumerate(self.places):
            piece = p.f_full.then(Csum.inject(i))
            f1 = piece if f1 is None else f1 + piece
        g1 = Bsum.assemble_map(Csum, {(i, i): p.g_full
                                      for i, p in enumerate(self.places)})
        # f3 and the local cups, place by place
        f3 = zero_map(A3view.complex, C3sum.complex)
        tvCC = tensor(Csum.complex, Csum.complex)
        cup_C = zero_map(tvCC.complex, C3sum.complex)
        cup_C_swapped = zero_map(tvCC.complex, C3sum.complex)
        for i, p in enumerate(self.places):
            if p.kind == "unramified":
                VH, tw_H = p.data["VH"], p.data["tw"]
                H, elems = p.data["H"], p.data["elems"]
                res_tw = restriction_map(Atw, G, tw, H, elems,
                                         p.data["Ctw"], 3)
                f3_piece = truncate_chain_map(res_tw, A3view, p.C3view)
                f3 = f3 + f3_piece.then(C3sum.inject(i))
                tv_local = tensor(p.C_full, p.C_full)
                cup_H = cup_c(VH, VH, 3, tv=tv_local)
                p.cup_local = cup_H.then(p.C3view.projection)
                W_H = swap_factors_map(VH, VH, 3)
                p.cup_local_swapped = cup_H.then(W_H) \
                    .then(p.C3view.projection)
            proj2 = tensor_chain_maps(tvCC, tensor(p.C_full, p.C_full),
                                      Csum.project(i), Csum.project(i))
            cup_C = cup_C + proj2.then(p.cup_local).then(C3sum.inject(i))
            cup_C_swapped = cup_C_swapped \
                + proj2.then(p.cup_local_swapped).then(C3sum.inject(i))
        B3 = zero_complex(ring)
        g3 = zero_map(B3, C3sum.complex)
        tvBB = tensor(Bsum.complex, Bsum.complex)
        cup_B = zero_map(tvBB.complex, B3)
        # both comparison squares are strict by construction, so the P3
        # homotopies are zero
        h_f = zero_map(tvAA.complex, C3sum.complex, -1)
        h_g = zero_map(tvBB.complex, C3sum.complex, -1)
        pd = ProductDatum(A=(A, A, A3view.complex),
                          B=(Bsum.complex, Bsum.complex, B3),
                          C=(Csum.complex, Csum.complex, C3sum.complex),
                          f=(f1, f1, f3), g=(g1, g1, g3),
                          cup_A=cup_A, cup_B=cup_B, cup_C=cup_C,
                          h_f=h_f, h_g=h_g)
        # Bockstein layer: per-place local maps, assembled into the sums
        beta_C = None
        beta_U = None
        for i, p in enumerate(self.places):
            cpiece = Csum.project(i).then(p.beta_C) \
                .then(Csum.inject(i).shift(1))
            beta_C = cpiece if beta_C is None else beta_C + cpiece
            upiece = Bsum.project(i).then(p.beta_U) \
                .then(Bsum.inject(i).shift(1))
            beta_U = upiece if beta_U is None else beta_U + upiece
        # B2 homotopies.  For the restriction-type places both squares are
        # strict; a nonzero comparison map at a phi-gamma place needs a
        # solved witness.
        lhs_u = beta_A.then(f1.shift(1))
        rhs_u = f1.then(beta_C)
        u = zero_map(A, Csum.complex.shift(1), -1)
        if homotopy_defect(u, lhs_u, rhs_u):
            u = solve_homotopy(lhs_u, rhs_u)
            if u is None:
                _datum_invalid("the Bockstein comparison square (global side) "
                               "has no homotopy witness")
        lhs_v = beta_U.then(g1.shift(1))
        rhs_v = g1.then(beta_C)
        v = zero_map(Bsum.complex, Csum.complex.shift(1), -1)
        if homotopy_defect(v, lhs_v, rhs_v):
            v = solve_homotopy(lhs_v, rhs_v)
            if v is None:
                _datum_invalid("the Bockstein comparison square (condition "
                               "side) has no homotopy witness")
        hl = {"pd": pd, "A3view": A3view, "C3sum": C3sum, "Bsum": Bsum,
              "Csum": Csum, "beta_A": beta_A, "beta_B": beta_U,
              "beta_C": beta_C, "u": u, "v": v,
              "cup_A_swapped": cup_A_swapped,
              "cup_C_swapped": cup_C_swapped, "W_glob": W_glob}
        self._hl = hl
        return hl

    def product_datum(self) -> ProductDatum:
        return self._heights()["pd"]

    def bockstein_datum(self, with_b3: bool = False) -> BocksteinDatum:
        """The B-package on the product datum (both sides identical since
        the datum is self-dual).  The B3/B4-5 witnesses are solved only on
        request; the height pairing needs only B1-2."""
        hl = self._heights()
        pd = hl["pd"]
        hA = zero_map(pd.tv("A").complex, pd.A[2].shift(1), -1)
        hB = zero_map(pd.tv("B").complex, pd.B[2].shift(1), -1)
        hC = zero_map(pd.tv("C").complex, pd.C[2].shift(1), -1)
        Kf = zero_map(pd.tv("A").complex, pd.C[2].shift(1), -2)
        Kg = zero_map(pd.tv("B").complex, pd.C[2].shift(1), -2)
        bd = BocksteinDatum(pd=pd,
                            beta_A=(hl["beta_A"], hl["beta_A"]),
                            beta_B=(hl["beta_B"], hl["beta_B"]),
                            beta_C=(hl["beta_C"], hl["beta_C"]),
                            u=(hl["u"], hl["u"]), v=(hl["v"], hl["v"]),
                            hA=hA, hB=hB, hC=hC, Kf=Kf, Kg=Kg)
        if with_b3:
            for Z, attr in (("A", "hA"), ("B", "hB"), ("C", "hC")):
                m_right, m_left = bd._b3_pair(Z)
                h = getattr(bd, attr)
                if homotopy_defect(h, m_right, m_left):
                    h = solve_homotopy(m_right, m_left)
                    if h is None:
                        _datum_invalid(f"the B3 witness on the {Z}-line "
                                       "has no solution")
                    setattr(bd, attr, h)
            # the K witnesses see h_A/h_B through the route comparison and
            # must be re-solved against them
            for which, attr in (("f", "Kf"), ("g", "Kg")):
                if bd._square_defect(which):
                    routeA, routeB = bd._route_pair(which)
                    K = getattr(bd, attr)
                    rhs = (routeA + routeB.scale(-1)).scale(-1)
                    K = solve_d_commutator(K.source, K.target, rhs)
                    if K is None:
                        _datum_invalid(f"the B{4 if which == 'f' else 5} "
                                       "witness has no solution")
                    setattr(bd, attr, K)
        return bd

    # -- serialization -----------------------------------------------------

    def to_json(self):
        ring = self.ring
        out = {"ring": ring.token(), "group": self.G.to_json(),
               "module": [m.to_json() for m in self.V.mats],
               "rank": self.V.rank,
               "logchi": [ring.el_to_json(c) for c in self.logchi],
               "cap": self.cap, "places": []}
        for p in self.places:
            if p.kind == "unramified":
                out["places"].append({"kind": "unramified",
                                      "fr": p.data["fr"],
                                      "W": p.data["W"].to_json(),
                                      "W_ncols": p.data["W"].ncols})
            elif p.kind == "phi-gamma" and "D" in (p.data or {}):
                out["places"].append({
                    "kind": "phi-gamma",
                    "D": p.data["D"].to_json(),
                    "plus": p.data["j"].to_json(),
                    "plus_ncols": p.data["j"].ncols,
                    "pairing": p.data["pairing"].to_json()})
            elif p.kind == "full-submodule":
                out["places"].append({"kind": "full-submodule",
                                      "sub": p.data["j"].to_json(),
                                      "sub_ncols": p.data["j"].ncols})
            else:
                raise LinAlgError("period-model places have no JSON form")
        return out

    @staticmethod
    def from_json(obj) -> "SelmerDatum":
        ring = Ring.from_token(obj["ring"])
        G = GroupModel.from_json(obj["group"])
        r = obj["rank"]
        mats = [Matrix.from_json(ring, m, r, r) for m in obj["module"]]
        V = GModule(G, ring, mats)
        logchi = [ring.el_from_json(c) for c in obj["logchi"]]
        sd = SelmerDatum(G, V, logchi, cap=obj.get("cap", 3))
        for pl in obj["places"]:
            if pl["kind"] == "unramified":
                W = Matrix.from_json(ring, pl["W"], r, pl["W_ncols"])
                sd.add_unramified_place(pl["fr"], W)
            elif pl["kind"] == "phi-gamma":
                D = PhiGammaModule.from_json(pl["D"])
                j = Matrix.from_json(ring, pl["plus"], D.rank, pl["plus_ncols"])
                pairing = Matrix.from_json(ring, pl["pairing"], 1, D.rank ** 2)
                sd.add_phigamma_place(D, j, pairing)
            else:
                j = Matrix.from_json(ring, pl["sub"], r, pl["sub_ncols"])
                sd.add_full_submodule_place(j)
        return sd


# ---------------------------------------------------------------------------
# the cup product and its normalization
# ---------------------------------------------------------------------------

def _require_orthogonality(pd: ProductDatum):
    report = pd.check()
    bad = [name for name, (ok, _) in report.items() if not ok]
    if not bad:
        return
    if "P3: h_g homotopy" in bad:
        raise VerificationError(
            "orthogonality-violation: the condition maps do not pair to zero "
            "in the truncated target", report["P3: h_g homotopy"][1])
    raise VerificationError("datum-invalid: " + "; ".join(bad), 0)


def solve_normalization(sd: SelmerDatum, rng=None) -> Matrix:
    """A degree-3 functional on the truncated target cone that kills
    coboundaries and sends the class of the distinguished local generator
    to 1.  Requires H^3 of that cone to have rank 1 (reported otherwise),
    which pins the functional on cohomology; ``rng`` shifts the solved
    representative inside its affine solution space.
    """
    hl = sd._heights()
    pd = hl["pd"]
    ring = sd.ring
    E3 = pd.E(3)
    q0 = None
    for i, p in enumerate(sd.places):
        if p.carries_twist_generator:
            q0 = i
            break
    if q0 is None:
        raise VerificationError(
            "r_S-unnormalizable: no place carries a twist generator", 3)
    p0 = sd.places[q0]
    try:
        dt = DualityTarget.standard(p0.data["twist"])
    except VerificationError:
        raise VerificationError(
            "r_S-unnormalizable: H^2 of the twist is not free of rank 1", 2)
    h3 = cohomology(E3.complex, 3)
    if h3.rank != 1:
        raise VerificationError(
            f"r_S-unnormalizable: H^3 of the truncated target has rank "
            f"{h3.rank}, not 1", 3)
    z_loc = p0.C3view.projection.comp(2).apply(list(dt.generator))
    z_sum = hl["C3sum"].inject(q0).comp(2).apply(z_loc)
    z = E3.inject_C(3).apply(z_sum)
    dim = E3.complex.term(3)
    d2 = E3.complex.d(2)
    # rows: rho . d2 = 0 column by column, then rho . z = 1
    rows = [[d2.rows[a][c] for a in range(d2.nrows)] for c in range(d2.ncols)]
    rhs = [ring.zero] * d2.ncols
    rows.append(list(z))
    rhs.append(ring.one)
    M = Matrix(ring, rows, len(rows), dim)
    sol = M.solve(rhs)
    if sol is None:
        raise VerificationError(
            "r_S-unnormalizable: the twist generator class vanishes", 3)
    sol = list(sol)
    if rng is not None:
        for v in M.kernel_basis():
            c = ring.random_element(rng, 3)
            sol = [ring.add(x, ring.mul(c, y)) for x, y in zip(sol, v)]
    return Matrix(ring, [sol], 1, dim)


@dataclass
class SelmerCup:
    pd: ProductDatum
    cup: GradedMap
    cup_alt: GradedMap
    r: object
    r_alt: object
    independence: GradedMap     # the homotopy cup_r ~ cup_{r_alt}
    normalization: Matrix

    def pair_classes(self, x, y, deg_x: int, deg_y: int):
        """Pair cocycles x in E1^{deg_x}, y in E2^{deg_y} (deg sum 3)."""
        tvE = self.pd.tvE()
        vec = tvE.pure_tensor(deg_x, deg_y, list(x), list(y))
        out = self.cup.comp(3).apply(vec)
        return self.normalization.apply(out)[0]


def selmer_cup(sd: SelmerDatum, r=0, r_alt=1, rng=None) -> SelmerCup:
    hl = sd._heights()
    pd = hl["pd"]
    _require_orthogonality(pd)
    cup = cup_r_h(pd, r)
    cup_alt = cup_r_h(pd, r_alt)
    k = homotopy_k(pd, r, r_alt)
    verify_homotopy(k, cup, cup_alt, "cup r-independence")
    rho = solve_normalization(sd, rng)
    return SelmerCup(pd=pd, cup=cup, cup_alt=cup_alt, r=r, r_alt=r_alt,
                     independence=k, normalization=rho)


def cup_matrix(sc: SelmerCup, deg_x: int, deg_y: int, use_alt: bool = False):
    """The H^{deg_x} x H^{deg_y} pairing matrix on the deterministic bases."""
    pd = sc.pd
    hx = cohomology(pd.E(1).complex, deg_x)
    hy = cohomology(pd.E(2).complex, deg_y)
    cup = sc.cup_alt if use_alt else sc.cup
    tvE = pd.tvE()
    ring = sc.normalization.ring
    rows = []
    for a in range(hx.rank):
        row = []
        for b in range(hy.rank):
            vec = tvE.pure_tensor(deg_x, deg_y,
                                  list(hx.reps[a]), list(hy.reps[b]))
            row.append(sc.normalization.apply(cup.comp(3).apply(vec))[0])
        rows.append(row)
    return Matrix(ring, rows, hx.rank, hy.rank)


# ---------------------------------------------------------------------------
# Bockstein on the Selmer complex
# ---------------------------------------------------------------------------

def selmer_bockstein(sd: SelmerDatum) -> GradedMap:
    """beta on the Selmer complex: (x, (x_q), (lambda_q)) maps to
    (beta x, (beta_q x_q), (-beta_q lambda_q - u(x) + v(x_q))), a verified
    chain map into the shift."""
    bd = sd.bockstein_datum()
    return bockstein_E(bd, 1)


def _kron_vec(ring, xv, yv):
    mul = ring.mul
    z = ring.zero
    return [mul(a, b) if (a and b) else z for a in xv for b in yv]


def cup_pure(pd: ProductDatum, r, n: int, m: int, x, y):
    """cup_{r,h}(x (x) y) for x in E_1^n, y in E_2^m, evaluated on the pure
    tensor without assembling the tensor of the two cones (which dominates
    the cost of :func:`products.cup_r_h` and is not needed to pair two
    classes).  Matches cup_r_h block for block."""
    ring = pd.cup_A.ring
    r = ring.coerce(r)
    one_minus_r = ring.sub(ring.one, r)
    E1, E2, E3 = pd.E(1), pd.E(2), pd.E(3)
    tvA, tvB, tvC = pd.tv("A"), pd.tv("B"), pd.tv("C")
    f1, f2, _ = pd.f
    g1, g2, _ = pd.g
    N = n + m
    sgn_n = ring.coerce((-1) ** (n % 2))
    a1 = E1.project_A(n).apply(x)
    b1 = E1.project_B(n).apply(x)
    c1 = E1.project_C(n).apply(x)
    a2 = E2.project_A(m).apply(y)
    b2 = E2.project_B(m).apply(y)
    c2 = E2.project_C(m).apply(y)
    out = [ring.zero] * E3.complex.term(N)

    def accumulate(inj, blk, vec, scalar=None):
        if blk.nrows == 0 or blk.ncols == 0:
            return
        piece = blk.apply(vec)
        if scalar is not None:
            piece = [ring.mul(scalar, t) for t in piece]
        piece = inj.apply(piece)
        for i, t in enumerate(piece):
            if t:
                out[i] = ring.add(out[i], t)

    accumulate(E3.inject_A(N), _cup_block(pd.cup_A, tvA, n, m),
               _kron_vec(ring, a1, a2))
    accumulate(E3.inject_B(N), _cup_block(pd.cup_B, tvB, n, m),
               _kron_vec(ring, b1, b2))
    injC = E3.inject_C(N)
    blk = _cup_block(pd.cup_C, tvC, n - 1, m)
    accumulate(injC, blk, _kron_vec(ring, c1, f2.comp(m).apply(a2)), r)
    accumulate(injC, blk, _kron_vec(ring, c1, g2.comp(m).apply(b2)),
               one_minus_r)
    blk = _cup_block(pd.cup_C, tvC, n, m - 1)
    accumulate(injC, blk, _kron_vec(ring, f1.comp(n).apply(a1), c2),
               ring.mul(sgn_n, one_minus_r))
    accumulate(injC, blk, _kron_vec(ring, g1.comp(n).apply(b1), c2),
               ring.mul(sgn_n, r))
    accumulate(injC, _cup_block(pd.h_f, tvA, n, m),
               _kron_vec(ring, a1, a2), ring.coerce(-1))
    accumulate(injC, _cup_block(pd.h_g, tvB, n, m),
               _kron_vec(ring, b1, b2))
    return tuple(out)


# ---------------------------------------------------------------------------
# the height pairing
# ---------------------------------------------------------------------------

@dataclass
class HeightReport:
    h1_basis: list               # representatives for the first datum
    h1_basis_dual: list
    pairing: Matrix
    skew_residual: Matrix        # M + M^T, must vanish
    r: object
    assumptions: list
    provenance: dict

    @property
    def is_skew(self) -> bool:
        return self.skew_residual.is_zero()

    def to_json(self):
        ring = self.pairing.ring
        return {"h1_basis": [[ring.el_to_json(x) for x in rep]
                             for rep in self.h1_basis],
                "pairing": self.pairing.to_json(),
                "skew_residual": 0 if self.is_skew
                else self.skew_residual.to_json(),
                "assumptions": list(self.assumptions)}


def height_pairing(sd: SelmerDatum, r=0, rng=None,
                   representative_shift=None) -> HeightReport:
    """h(x, y) = normalization(cup(beta x (x) y)) on the H^1 bases.

    ``representative_shift``: optional list of E^0 vectors; entry i is
    added as a coboundary to the i-th H^1 representative before pairing
    (the pairing must not change).
    """
    hl = sd._heights()
    pd = hl["pd"]
    _require_orthogonality(pd)
    bd = sd.bockstein_datum()
    beta = bockstein_E(bd, 1)
    rho = solve_normalization(sd, rng)
    E1 = pd.E(1)
    h1 = cohomology(E1.complex, 1)
    ring = sd.ring
    reps = [list(v) for v in h1.reps]
    if representative_shift is not None:
        d0 = E1.complex.d(0)
        for i, shift in enumerate(representative_shift):
            if shift is None or i >= len(reps):
                continue
            extra = d0.apply(list(shift))
            reps[i] = [ring.add(a, b) for a, b in zip(reps[i], extra)]
    rows = []
    for x in reps:
        bx = beta.apply(1, x)
        row = []
        for y in reps:
            row.append(rho.apply(cup_pure(pd, r, 2, 1, list(bx), y))[0])
        rows.append(row)
    M = Matrix(ring, rows, len(reps), len(reps))
    residual = M + M.transpose()
    assumptions = [
        "H^3 of the truncated twist target has rank 1 (checked)",
        "global localization behaviour in degrees >= 2 is a hypothesis on "
        "the datum, not re-derived here",
    ]
    provenance = {"r": str(r), "n_places": len(sd.places),
                  "ring": ring.token(),
                  "basis": "first-pivot cocycle representatives",
                  "bockstein": "character cup construction, "
                               "two-way agreement checked",
                  "normalization": "solved functional, randomized"
                  if rng is not None else "solved functional, deterministic"}
    return HeightReport(h1_basis=reps, h1_basis_dual=reps, pairing=M,
                        skew_residual=residual, r=r,
                        assumptions=assumptions, provenance=provenance)


def height_dual_route(sd: SelmerDatum, r=0) -> Matrix:
    """The same pairing computed through the other corner: entry (i, j) is
    -(normalization(cup_{1-r}(beta y_j (x) x_i))), which must reproduce the
    direct route exactly."""
    hl = sd._heights()
    pd = hl["pd"]
    bd = sd.bockstein_datum()
    beta = bockstein_E(bd, 2)
    ring = sd.ring
    one_minus_r = ring.sub(ring.one, ring.coerce(r))
    rho = solve_normalization(sd)
    E1 = pd.E(1)
    h1 = cohomology(E1.complex, 1)
    rows = []
    for x in h1.reps:
        row = []
        for y in h1.reps:
            by = beta.apply(1, list(y))
            row.append(ring.neg(rho.apply(
                cup_pure(pd, one_minus_r, 1, 2, list(x), list(by)))[0]))
        rows.append(row)
    return Matrix(ring, rows, h1.rank, h1.rank)


# ---------------------------------------------------------------------------
# H^1 kernel description
# ---------------------------------------------------------------------------

def h1_kernel_description(sd: SelmerDatum) -> list:
    """H^1 classes as triples (x, (x_q), (lambda_q)) with dx = 0,
    d x_q = 0 and g(x_q) = f(x) + d lambda_q; each representative from the
    cone is checked against this description and returned split into its
    three components."""
    ev = sd.assemble()
    E = ev.complex
    h1 = cohomology(E, 1)
    ring = sd.ring
    out = []
    for rep in h1.reps:
        rep = list(rep)
        a = ev.projection_to_A().comp(1).apply(rep)
        b = ev.projection_to_B().comp(1).apply(rep)
        lam = ev.project_C(1).apply(rep)
        if any(x != 0 for x in ev.A.d(1).apply(a)):
            raise VerificationError("H^1 description: dx = 0", 1)
        if ev.B.term(1) and any(x != 0 for x in ev.B.d(1).apply(b)):
            raise VerificationError("H^1 description: d x_q = 0", 1)
        lhs = ev.g.comp(1).apply(b) if ev.B.term(1) else None
        fa = ev.f.comp(1).apply(a)
        dl = ev.C.d(0).apply(lam) if ev.C.term(0) else [ring.zero] * len(fa)
        rhs = [ring.add(p, q) for p, q in zip(fa, dl)]
        if lhs is None:
            lhs = [ring.zero] * len(rhs)
        if list(lhs) != list(rhs):
            raise VerificationError(
                "H^1 description: g(x_q) = f(x) + d lambda_q", 1)
        out.append({"x": a, "x_q": b, "lambda_q": lam})
    return out


# ---------------------------------------------------------------------------
# the transposition package
# ---------------------------------------------------------------------------

def selmer_transposition_check(sd: SelmerDatum, r=0, perturb_tC: bool = False):
    """Assemble the transposition data on the product datum: honest
    transposition operators on the cochain lines, identity on the
    condition line, strict squares wherever restriction commutes with
    everything, and solved homotopies where the local product is only
    symmetric up to homotopy.  Runs the T-condition checks and certifies
    the induced symmetry on the product of the cones."""
    hl = sd._heights()
    pd = hl["pd"]
    _require_orthogonality(pd)
    ring = sd.ring
    G, V, cap = sd.G, sd.V, sd.cap
    A, A3view = sd.A, hl["A3view"]
    Bsum, Csum, C3sum = hl["Bsum"], hl["Csum"], hl["C3sum"]
    W_glob = hl["W_glob"]

    TA_c = transposition_c(V, cap)
    tw = V.tensor_with(V)
    T_tw = transposition_c(tw, cap)
    TA3_full = W_glob.then(T_tw).then(W_glob)
    TA3 = truncate_chain_map(TA3_full, A3view, A3view)

    TB = identity_map(Bsum.complex)
    TB3 = identity_map(pd.B[2])

    TC_pieces = {}
    TC3_pieces = {}
    for i, p in enumerate(sd.places):
        if p.kind == "unramified":
            VH = p.data["VH"]
            TC_pieces[(i, i)] = transposition_c(VH, 3)
            W_H = swap_factors_map(VH, VH, 3)
            T_twH = transposition_c(p.data["tw"], 3)
            TC3_pieces[(i, i)] = truncate_chain_map(
                W_H.then(T_twH).then(W_H), p.C3view, p.C3view)
        else:
            TC_pieces[(i, i)] = identity_map(p.C_full)
            TC3_pieces[(i, i)] = identity_map(p.C3view.complex)
    TC = Csum.assemble_map(Csum, TC_pieces)
    TC3 = C3sum.assemble_map(C3sum, TC3_pieces)

    pds = ProductDatum(A=pd.A, B=pd.B, C=pd.C, f=pd.f, g=pd.g,
                       cup_A=hl["cup_A_swapped"], cup_B=pd.cup_B,
                       cup_C=hl["cup_C_swapped"], h_f=pd.h_f, h_g=pd.h_g)

    # T4 homotopies.  The restriction-type squares are strict; the
    # comparison map into a phi-gamma place needs the cochain
    # transposition homotopy pushed forward.
    a_w = homotopy_a(V, cap)
    U1 = None
    for i, p in enumerate(sd.places):
        if p.kind == "phi-gamma":
            piece = a_w.then(p.f_full).then(Csum.inject(i)).scale(ring.coerce(-1))
            U1 = piece if U1 is None else U1 + piece
    if U1 is None:
        U1 = zero_map(A, Csum.complex, -1)
    lhs = TA_c.then(pd.f[0])
    rhs = pd.f[0].then(TC)
    if homotopy_defect(U1, lhs, rhs):
        U1 = solve_homotopy(lhs, rhs)
        if U1 is None:
            raise VerificationError("condition-failure: T4 (U) unsolvable", 0)
    U3 = zero_map(pd.A[2], pd.C[2], -1)
    lhs3 = TA3.then(pd.f[2])
    rhs3 = pd.f[2].then(TC3)
    if homotopy_defect(U3, lhs3, rhs3):
        U3 = solve_homotopy(lhs3, rhs3)
        if U3 is None:
            raise VerificationError("condition-failure: T4 (U_3) unsolvable", 0)
    lhsV = TB.then(pd.g[0])
    rhsV = pd.g[0].then(TC)
    V1 = zero_map(Bsum.complex, Csum.complex, -1)
    if homotopy_defect(V1, lhsV, rhsV):
        V1 = solve_homotopy(lhsV, rhsV)
        if V1 is None:
            raise VerificationError("condition-failure: T4 (V) unsolvable", 0)
    V3 = zero_map(pd.B[2], pd.C[2], -1)

    # T5 homotopies: strict on the cochain lines, solved on the condition
    # target line (the local product is only homotopy-symmetric there).
    def t5_sides(Z, T1, T2, T3, cup, cupp):
        tv12 = pd.tv(Z)
        tv21 = pds.tv(Z)
        lhs = tensor_chain_maps(tv12, tv12, T1, T2) \
            .then(transposition_s12(tv12, tv21)).then(cupp)
        rhs = cup.then(T3)
        return lhs, rhs

    lhsA, rhsA = t5_sides("A", TA_c, TA_c, TA3, pd.cup_A, pds.cup_A)
    tA = zero_map(pd.tv("A").complex, pd.A[2], -1)
    if homotopy_defect(tA, lhsA, rhsA):
        tA = solve_homotopy(lhsA, rhsA)
        if tA is None:
            raise VerificationError("condition-failure: T5 (t_A) unsolvable", 0)
    tB = zero_map(pd.tv("B").complex, pd.B[2], -1)
    lhsC, rhsC = t5_sides("C", TC, TC, TC3, pd.cup_C, pds.cup_C)
    tC = zero_map(pd.tv("C").complex, pd.C[2], -1)
    if homotopy_defect(tC, lhsC, rhsC):
        tC = solve_homotopy(lhsC, rhsC)
        if tC is None:
            raise VerificationError("condition-failure: T5 (t_C) unsolvable", 0)
    td = TranspositionDatum(pd=pd, pd_swap=pds,
                            TA=(TA_c, TA_c, TA3), TB=(TB, TB, TB3),
                            TC=(TC, TC, TC3), U=(U1, U1, U3),
                            V=(V1, V1, V3), tA=tA, tB=tB, tC=tC,
                            Hf=None, Hg=None)
    # T6/T7 second-order data: zero when the six-term combination already
    # vanishes, otherwise solved.
    for which in ("f", "g"):
        rhs6 = td._cube_rhs(which)
        H = zero_map(rhs6.source, rhs6.target, rhs6.degree - 1)
        if any(not (d_commutator(H).comp(n) - rhs6.comp(n)).is_zero()
               for n in set(rhs6.degrees()) | set(d_commutator(H).degrees())):
            H = solve_d_commutator(rhs6.source, rhs6.target, rhs6)
            if H is None:
                raise VerificationError(
                    f"condition-failure: T{6 if which == 'f' else 7} "
                    "second-order witness unsolvable", 0)
        if which == "f":
            td.Hf = H
        else:
            td.Hg = H
    if perturb_tC:
        # inject a fault into the solved symmetry homotopy; the checks must
        # notice (T5 at least, and whatever second-order data it feeds)
        nr, nc = pd.C[2].term(2), pd.tv("C").complex.term(3)
        if nr and nc:
            rows = [[ring.zero] * nc for _ in range(nr)]
            rows[0][0] = ring.one
            td.tC = td.tC + GradedMap(pd.tv("C").complex, pd.C[2], -1,
                                      {3: Matrix(ring, rows, nr, nc)})
    report = check_conditions(td, "T")
    return td, report


# ---------------------------------------------------------------------------
# a family of data with nonzero heights
# ---------------------------------------------------------------------------

def random_height_datum(rng, ring: Ring = None) -> SelmerDatum:
    """A datum whose height pairing is exactly skew and nonzero.

    The shape is fixed -- a rank-4 (phi, gamma) place whose operators are a
    one-parameter unipotent pair fixing a Lagrangian of a hyperbolic form,
    plus an unramified place whose Frobenius generates the group (that keeps
    H^3 of the truncated twist free of rank one, so r_S normalizes) -- and
    the randomness conjugates the local model by an invertible matrix and
    redraws the character value, so every draw computes with different
    numbers.  H^1 of the Selmer complex has rank 2 on every draw.
    """
    if ring is None:
        ring = Ring.rationals()
    G = GroupModel.cyclic(2)
    V = GModule(G, ring, [Matrix.identity(ring, 1),
                          Matrix(ring, [[-1]], 1, 1)])
    sd = SelmerDatum(G, V, logchi=[ring.zero, ring.zero])
    sd.add_unramified_place(1)
    # N e2 = -e3, N e4 = e1, N^2 = 0; the form pairs e1<->e2 and e3<->e4 and
    # both 1 + N and 1 + 2N preserve it while fixing span(e1, e3) pointwise
    N = Matrix(ring, [[0, 0, 0, 1],
                      [0, 0, 0, 0],
                      [0, -1, 0, 0],
                      [0, 0, 0, 0]])
    I4 = Matrix.identity(ring, 4)
    prow = [ring.zero] * 16
    for (a, b) in ((0, 1), (1, 0), (2, 3), (3, 2)):
        prow[a * 4 + b] = ring.one
    pairing = Matrix(ring, [prow], 1, 16)
    jplus = Matrix(ring, [[1, 0], [0, 0], [0, 1], [0, 0]], 4, 2)
    T = Matrix.random_invertible(ring, 4, rng, height=3)
    Tinv = T.inverse()
    L = ring.zero
    while not L:
        L = ring.random_element(rng, height=7)
    D = PhiGammaModule(ring, Tinv * (I4 + N) * T,
                       Tinv * (I4 + N.scale(ring.coerce(2))) * T,
                       log_chi=L)
    sd.add_phigamma_place(D, Tinv * jplus, pairing * T.kron(T))
    return sd
