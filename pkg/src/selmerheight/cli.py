"""Command-line front end: verification campaigns, cohomology and height
computation, and randomized fuzzing of every identity.

Exit status: 0 all checks pass, 1 check failure (first counterexample
serialized in the report), 2 parse error.  Fuzz reports are byte-identical
for a fixed seed.
"""

import argparse
import json
import random
import sys
from fractions import Fraction

from .linalg import Ring, Matrix, LinAlgError
from .complexes import (VerificationError, cohomology, cone,
                        homotopy_boundary, identity_map, random_complex,
                        random_chain_map, random_graded_map, verify_homotopy,
                        verify_chain_map)
from .products import (check_conditions, random_product_datum,
                       random_transposition_datum, random_bockstein_datum)
from .cochains import (GroupModel, GModule, cochain_complex, cup_c,
                       bockstein_cochain, swap_factors_map)
from .phigamma import (PhiGammaModule, herr_complex, herr_cup,
                       enumerate_cohomology_dims, euler_characteristic)
from .selmer import (SelmerDatum, height_pairing, random_height_datum,
                     selmer_cup, selmer_transposition_check)


# ---------------------------------------------------------------------------
# built-in data
# ---------------------------------------------------------------------------

def _sign_rep(ring):
    G = GroupModel.cyclic(2)
    return G, GModule(G, ring, [Matrix.identity(ring, 1),
                                Matrix(ring, [[-1]], 1, 1)])


def _toy_datum():
    """Rank-1 condition inside a trivial rank-2 local model."""
    Q = Ring.rationals()
    G, V = _sign_rep(Q)
    sd = SelmerDatum(G, V, logchi=[Fraction(0), Fraction(0)])
    sd.add_unramified_place(1)
    D = PhiGammaModule.trivial(Q, 2, log_chi=Fraction(3))
    sd.add_phigamma_place(D, Matrix(Q, [[1], [0]], 2, 1),
                          Matrix(Q, [[0, 1, 1, 0]], 1, 4))
    return sd


def _bundle_datum():
    """The rank-4 unipotent instantiation with a nonzero height matrix."""
    return random_height_datum(random.Random(0))


_BUILTINS = {"builtin:toy": _toy_datum, "builtin:bundle": _bundle_datum}


def _load_datum(path):
    if path in _BUILTINS:
        return _BUILTINS[path]()
    with open(path) as fh:
        return SelmerDatum.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------

def _emit(report, out_path):
    blob = json.dumps(report, indent=2, sort_keys=True, default=str) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(blob)
    else:
        sys.stdout.write(blob)


class _Checks:
    """Collects named check results; remembers the first counterexample."""

    def __init__(self):
        self.items = []
        self.first_failure = None

    def run(self, name, fn):
        try:
            fn()
            self.items.append({"check": name, "status": "pass"})
            return True
        except (VerificationError, LinAlgError) as exc:
            entry = {"check": name, "status": "fail", "error": str(exc)}
            if isinstance(exc, VerificationError):
                entry["degree"] = exc.degree
            self.items.append(entry)
            if self.first_failure is None:
                self.first_failure = entry
            return False

    @property
    def ok(self):
        return self.first_failure is None


def _require(cond, message, degree=0):
    if not cond:
        raise VerificationError(message, degree)


def _report_all_ok(report):
    bad = [name for name, (ok, _) in report.items() if not ok]
    _require(not bad, "failing conditions: " + "; ".join(bad))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _datum_checks(sd, checks, with_transposition):
    checks.run("assembly: d^2 = 0 and support in [0,3]",
               lambda: sd.assemble())
    checks.run("product conditions P1-P3",
               lambda: _report_all_ok(sd.product_datum().check()))
    # solving the second-order B witnesses is cubic in the tensor sizes;
    # reserve B3-B5 for the runs that also solve the transposition package
    # (the height pairing itself only consumes the B1-B2 layer)
    if with_transposition:
        checks.run("Bockstein conditions B1-B5",
                   lambda: _report_all_ok(check_conditions(
                       sd.bockstein_datum(with_b3=True), "B")))
    else:
        def _b12():
            rep = sd.bockstein_datum().check()
            _report_all_ok({k: v for k, v in rep.items()
                            if k.startswith(("B1", "B2"))})
        checks.run("Bockstein conditions B1-B2", _b12)
    checks.run("cup r-independence homotopy",
               lambda: selmer_cup(sd))

    def _height():
        hr = height_pairing(sd)
        _require(hr.is_skew, "height matrix is not skew: M + M^T != 0", 1)
        hr1 = height_pairing(sd, r=1)
        _require(hr1.pairing == hr.pairing,
                 "height matrix depends on r", 1)
    checks.run("height pairing: skew and r-independent", _height)
    if with_transposition:
        checks.run("transposition conditions T1-T7",
                   lambda: _report_all_ok(selmer_transposition_check(sd)[1]))


def cmd_verify(args):
    checks = _Checks()
    if args.input:
        sd = _load_datum(args.input)
        data = [(args.input, sd, False)]
    else:
        data = [("builtin:toy", _toy_datum(), True),
                ("builtin:bundle", _bundle_datum(), False)]
    for name, sd, with_t in data:
        sub = _Checks()
        _datum_checks(sd, sub, with_transposition=with_t)
        for item in sub.items:
            item["datum"] = name
        checks.items.extend(sub.items)
        if checks.first_failure is None:
            checks.first_failure = sub.first_failure
    report = {"command": "verify", "checks": checks.items,
              "status": "pass" if checks.ok else "fail"}
    if not checks.ok:
        report["counterexample"] = checks.first_failure
    _emit(report, args.out)
    return 0 if checks.ok else 1


def cmd_cohomology(args):
    sd = _load_datum(args.input)
    report = {"command": "cohomology", "input": args.input,
              "ranks": {str(n): r for n, r in sd.h_ranks().items()}}
    _emit(report, args.out)
    return 0


def cmd_selmer(args):
    sd = _load_datum(args.input)
    checks = _Checks()
    _datum_checks(sd, checks, with_transposition=args.transposition)
    report = {"command": "selmer", "input": args.input,
              "ranks": {str(n): r for n, r in sd.h_ranks().items()},
              "places": [p.kind for p in sd.places],
              "checks": checks.items,
              "status": "pass" if checks.ok else "fail"}
    if not checks.ok:
        report["counterexample"] = checks.first_failure
    _emit(report, args.out)
    return 0 if checks.ok else 1


def cmd_height(args):
    sd = _load_datum(args.input)
    hr = height_pairing(sd, rng=random.Random(args.seed)
                        if args.seed is not None else None)
    report = {"command": "height", "input": args.input}
    report.update(hr.to_json())
    report["status"] = "pass" if hr.is_skew else "fail"
    _emit(report, args.out)
    return 0 if hr.is_skew else 1


# ---------------------------------------------------------------------------
# fuzz shapes: each returns a per-iteration status string
# ---------------------------------------------------------------------------

def _fuzz_complexes(ring, rng):
    C = random_complex(ring, rng)            # d^2 checked on construction
    D = random_complex(ring, rng)
    f = random_chain_map(C, D, rng)
    verify_chain_map(f, "random chain map")
    cone(f)                                  # cone d^2 checked inside
    k = random_graded_map(C, C, -1, rng, height=2)
    g = identity_map(C) + homotopy_boundary(k)
    verify_homotopy(k, identity_map(C), g, "boundary homotopy")
    return "ok"


def _fuzz_cone_products(ring, rng):
    pd = random_product_datum(ring, rng)
    _report_all_ok(check_conditions(pd, "P"))
    td = random_transposition_datum(ring, rng)
    if td is None:
        return "discarded"
    _report_all_ok(check_conditions(td, "T"))
    bd = random_bockstein_datum(ring, rng)
    if bd is None:
        return "discarded"
    _report_all_ok(check_conditions(bd, "B"))
    return "ok"


def _fuzz_herr(ring, rng):
    rank = rng.randint(1, 2)
    D = PhiGammaModule.random(ring, rank, rng,
                              log_chi=ring.random_element(rng, 3))
    C = herr_complex(D)
    chi = euler_characteristic(D)
    _require(chi["chi"] == 0, "model Euler characteristic is nonzero")
    if ring.kind == "Fp" and ring.modulus <= 5 and rank <= 2:
        dims = enumerate_cohomology_dims(D)
        lin = {n: cohomology(C, n).rank for n in (0, 1, 2)}
        _require(dims == lin, f"enumeration oracle disagrees: {dims} vs {lin}")
    # the universal pairing into the tensor-square twist is always
    # equivariant; the cup is a verified chain map (Leibniz) by construction
    twist = PhiGammaModule(ring, D.phi.kron(D.phi), D.gamma.kron(D.gamma),
                           log_chi=ring.mul(D.log_chi, ring.coerce(2)))
    herr_cup(D, D, Matrix.identity(ring, rank * rank), twist)
    return "ok"


def _fuzz_cochains(ring, rng):
    G = GroupModel.cyclic(rng.choice((2, 3)))
    V = GModule.random(G, ring, rng.randint(1, 2), rng)
    cochain_complex(G, V, 3)                  # d^2 checked on construction
    cup_c(V, V, 3)                            # Leibniz checked inside
    swap_factors_map(V, V, 3)
    logchi = [ring.zero] * G.size
    if ring.kind != "Q":
        # a genuine additive character when the ring has torsion
        step = ring.coerce(rng.randrange(ring.modulus))
        n = G.size
        if ring.mul(step, ring.coerce(n)) == ring.zero:
            logchi = [ring.mul(step, ring.coerce(k)) for k in range(n)]
    bockstein_cochain(G, V, logchi, 3)        # two-way agreement inside
    return "ok"


def _fuzz_selmer(ring, rng):
    sd = random_height_datum(rng)
    hr = height_pairing(sd)
    _require(hr.is_skew, "height matrix is not skew")
    _require(not hr.pairing.is_zero(), "height matrix degenerated to zero")
    # injected orthogonality break must be detected
    Q = sd.ring
    broken = SelmerDatum(sd.G, sd.V, logchi=sd.logchi)
    broken.add_unramified_place(1)
    D = PhiGammaModule.trivial(Q, 2, log_chi=Fraction(3))
    broken.add_phigamma_place(D, Matrix.identity(Q, 2),
                              Matrix(Q, [[0, 1, 1, 0]], 1, 4))
    try:
        height_pairing(broken)
    except VerificationError as exc:
        _require(str(exc).startswith("orthogonality-violation"),
                 f"wrong detection token: {exc}")
        return "ok"
    raise VerificationError("orthogonality break went undetected", 0)


_SHAPES = {"complexes": _fuzz_complexes,
           "cone-products": _fuzz_cone_products,
           "herr": _fuzz_herr,
           "cochains": _fuzz_cochains,
           "selmer": _fuzz_selmer}


def cmd_fuzz(args):
    shape_fn = _SHAPES[args.shape]
    ring = Ring.from_token(args.ring)
    rng = random.Random(args.seed)
    results = []
    failures = 0
    for i in range(args.iters):
        entry = {"iter": i}
        try:
            entry["status"] = shape_fn(ring, rng)
        except (VerificationError, LinAlgError) as exc:
            entry["status"] = "fail"
            entry["error"] = str(exc)
            failures += 1
        results.append(entry)
    report = {"command": "fuzz", "shape": args.shape, "ring": args.ring,
              "seed": args.seed, "iters": args.iters,
              "results": sorted(results, key=lambda e: e["iter"]),
              "failures": failures,
              "discarded": sum(1 for e in results
                               if e["status"] == "discarded"),
              "status": "pass" if failures == 0 else "fail"}
    _emit(report, args.out)
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ring", default="Q",
                        help="Q, F<p>, or Z<p>^<m> (default Q)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--iters", type=int, default=50)
    common.add_argument("--samples", type=int, default=None,
                        help="alias for --iters")
    common.add_argument("--budget", type=int, default=60000)
    common.add_argument("--out", default=None, help="write the JSON report here")

    p = argparse.ArgumentParser(
        prog="selmerheight",
        description="verification campaigns, cohomology and height reports")
    sub = p.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", parents=[common],
                        help="run the full identity suite on a datum "
                             "(default: the shipped bundle)")
    pv.add_argument("input", nargs="?", default=None,
                    help="datum JSON path or builtin:{toy,bundle}")
    pv.set_defaults(fn=cmd_verify)

    pc = sub.add_parser("cohomology", parents=[common],
                        help="H-ranks of the assembled Selmer complex")
    pc.add_argument("input", help="datum JSON path or builtin:{toy,bundle}")
    pc.set_defaults(fn=cmd_cohomology)

    ps = sub.add_parser("selmer", parents=[common],
                        help="assemble a datum, report ranks and checks")
    ps.add_argument("input", help="datum JSON path or builtin:{toy,bundle}")
    ps.add_argument("--transposition", action="store_true",
                    help="also solve and check the transposition package")
    ps.set_defaults(fn=cmd_selmer)

    ph = sub.add_parser("height", parents=[common],
                        help="height pairing with skew-symmetry certificate")
    ph.add_argument("input", nargs="?", default="builtin:toy",
                    help="datum JSON path or builtin:{toy,bundle}")
    ph.set_defaults(fn=cmd_height)

    pf = sub.add_parser("fuzz", parents=[common],
                        help="randomized invariant campaigns")
    pf.add_argument("--shape", required=True, choices=sorted(_SHAPES))
    pf.set_defaults(fn=cmd_fuzz)
    return p


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.samples is not None:
        args.iters = args.samples
    if args.command == "fuzz" and args.seed is None:
        args.seed = 0
    try:
        return args.fn(args)
    except (OSError, json.JSONDecodeError, KeyError, ValueError,
            LinAlgError) as exc:
        _emit({"command": args.command, "status": "parse-error",
               "error": f"{type(exc).__name__}: {exc}"}, args.out)
        return 2
    except VerificationError as exc:
        _emit({"command": args.command, "status": "fail",
               "counterexample": {"error": str(exc), "degree": exc.degree}},
              args.out)
        return 1


if __name__ == "__main__":
    sys.exit(main())
