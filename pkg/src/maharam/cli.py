"""Command-line interface: one subcommand per operation, JSON on stdout.

Exit codes: 0 success, 1 usage error, 2 validation error (with an
``{"error": {"kind": ..., "detail": ...}}`` object on stdout), 3 when a weight
comparison stays undecided at the precision cap.
"""

from __future__ import annotations

import argparse
import random
import sys
from typing import Sequence

from . import cover as cov
from . import io
from . import submeasure as sm
from . import transform as tf
from .algebra import CylinderSpace, FiniteAlgebra, atoms_of
from .errors import FormatError, MaharamError, PreconditionError, UndecidedError
from .inequalities import INEQUALITIES, all_pass, verify_inequalities
from .weights import PRECISION_CAP, Schedule, check_precision, psi_cylinder, psi_total, weight_to_json

COMMANDS = (
    "psi-eval",
    "cover-search",
    "check-inequalities",
    "check-submeasure",
    "pathology",
    "uniform-exhaustivity",
    "amalgamate",
    "refine-pathological",
    "thin-check",
    "transform",
    "incidence",
    "pullback",
    "levels",
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- helpers


def _schedule(args) -> Schedule:
    s = args.schedule
    if s == "talagrand":
        return Schedule.talagrand()
    return Schedule.from_json(io.load_json(s))


def _elements(e_list) -> list[list[int]]:
    return [list(atoms_of(a)) for a in e_list]


def _parse_prefix(text: str) -> dict[int, int]:
    s = text.strip()
    if s[:1] in "[{":
        return io.prefix_from_json(io.load_json(s))
    try:
        return {i + 1: int(v) for i, v in enumerate(s.split(",")) if v.strip()}
    except ValueError as exc:
        raise FormatError(f"bad prefix {text!r}") from exc


def _input(args):
    if args.input is None:
        raise FormatError("--input is required")
    return io.load_json(args.input)


def _input_submeasure(args) -> sm.Submeasure:
    if args.input is not None:
        return io.submeasure_from_json(_input(args))
    if getattr(args, "random_atoms", None):
        return sm.random_submeasure(random.Random(args.seed), args.random_atoms)
    raise FormatError("--input or --random-atoms is required")


# ---------------------------------------------------------------- commands


def cmd_psi_eval(args):
    schedule = _schedule(args)
    if args.oracle:
        depth = args.depth or 4
        space = CylinderSpace.talagrand(depth)
        if args.total:
            target = io.cylinder_from_json("full", space, depth)
        else:
            target = io.cylinder_from_json(_parse_prefix(args.prefix), space, depth)
        res = cov.min_weight_cover(schedule, target, depth, args.kmax, args.threads)
        return weight_to_json(res.weight)
    if args.total:
        return weight_to_json(psi_total(schedule))
    if args.prefix is not None:
        s = _parse_prefix(args.prefix)
        for n, v in s.items():
            if n < 1 or not 1 <= v <= cov.talagrand_branching(n):
                raise PreconditionError(f"value {v} at coordinate {n} outside [1, 2^{n}]")
        size = len(s)
    elif args.size is not None:
        size = args.size
    else:
        raise FormatError("one of --total, --prefix or --size is required")
    if size == 0:
        return weight_to_json(psi_total(schedule))
    return weight_to_json(psi_cylinder(schedule, size))


def cmd_cover_search(args):
    schedule = _schedule(args)
    depth = args.depth or 3
    space = CylinderSpace.talagrand(depth)
    target = io.cylinder_from_json(io.load_json(args.target), space, depth)
    res = cov.min_weight_cover(schedule, target, depth, args.kmax, args.threads)
    out = res.to_json()
    out["universe_size"] = res.universe_size
    return out


def cmd_check_inequalities(args):
    schedule = _schedule(args)
    ks = range(1, args.kmax + 1) if args.kmax else None
    which = tuple(args.which.split(",")) if args.which else INEQUALITIES
    reps = verify_inequalities(schedule, ks, args.samples, args.dense, which, args.precision_cap)
    out = {
        "schedule": schedule.to_json(),
        "passed": all_pass(reps),
        "reports": {k: r.to_json() for k, r in reps.items()},
    }
    if any(r.undecided for r in reps.values()):
        return out, 3
    return out


def cmd_check_submeasure(args):
    mu = _input_submeasure(args)
    return {"valid": True, "atoms": mu.n_atoms, "additive": sm.is_additive(mu)}


def cmd_pathology(args):
    mu = _input_submeasure(args)
    rep = sm.classify(mu)
    out = {
        "atoms": mu.n_atoms,
        "total": io.q(mu.total),
        "is_measure": rep.is_measure,
        "strictly_positive": rep.is_strictly_positive,
        "gap": io.q(rep.pathology_gap),
        "dominated_measure": [io.q(v) for v in rep.dominated_measure],
        "n_pathological_max": rep.n_pathological_max,
    }
    if args.n is not None:
        w = sm.n_pathological_witness(mu, args.n)
        out["witness"] = None if w is None else _elements(w)
    return out


def cmd_uniform_exhaustivity(args):
    mu = _input_submeasure(args)
    if args.N is None:
        raise FormatError("--N is required")
    return {"N": args.N, "profile": io.q(sm.uniform_exhaustivity_profile(mu, args.N))}


def cmd_amalgamate(args):
    obj = _input(args)
    try:
        alg = FiniteAlgebra(int(obj["atoms"]))
        partition = [io.parse_element(b, alg.n_atoms) for b in obj["partition"]]
        mu = io.submeasure_from_json(obj["mu"])
        parts = [io.submeasure_from_json(p) for p in obj["parts"]]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"amalgamate input needs atoms, partition, mu and parts ({exc})") from exc
    out = sm.amalgamate(alg, partition, mu, parts)
    sm.validate(alg, out.values)
    return io.submeasure_to_json(out)


def cmd_refine_pathological(args):
    p = _input_submeasure(args)
    if args.n is None:
        raise FormatError("--n is required")
    ref = sm.pathological_refinement(p, args.n)
    w = sm.n_pathological_witness(ref.q, args.n)
    return {
        "refinement": io.submeasure_to_json(ref.q),
        "parent_blocks": _elements(ref.parent_blocks),
        "cross_sections": _elements(ref.cross_sections),
        "witness": None if w is None else _elements(w),
    }


def cmd_thin_check(args):
    schedule = _schedule(args)
    if args.m is None or args.n is None:
        raise FormatError("--m and --n are required")
    depth = args.depth or args.n
    space = CylinderSpace.talagrand(max(depth, args.n))
    X = io.cylinder_from_json(io.load_json(args.set), space, max(depth, args.n))
    mu = cov.psi_oracle(schedule, space, depth, args.kmax, args.threads)
    res = cov.is_thin(space, X, args.m, args.n, mu)
    out = []
    for w in res.witnesses:
        item = {"prefix": list(w.prefix)}
        if w.witness is None:
            item["B"] = []
            item["value"] = weight_to_json(cov.ExactWeight.zero())
        else:
            item["B"] = [list(p) for p in w.witness.leaves(args.n)]
            item["value"] = weight_to_json(w.value)
        out.append(item)
    return {"passed": res.passed, "m": args.m, "n": args.n, "witnesses": out}


def _chain_from_json(obj) -> tf.Chain:
    try:
        top = FiniteAlgebra(int(obj["atoms"]))
        levels = tuple(tuple(io.parse_element(b, top.n_atoms) for b in lvl) for lvl in obj["levels"])
        _, vals = io.table_from_json({"atoms": top.n_atoms, "values": obj["values"]})
    except (KeyError, TypeError) as exc:
        raise FormatError(f"chain input needs atoms, levels and values ({exc})") from exc
    return tf.Chain(top, levels, tuple(vals))


def cmd_transform(args):
    obj = _input(args)
    if isinstance(obj, dict) and "chain" in obj:
        return tf.transform_functional(_chain_from_json(obj["chain"])).to_json()
    if isinstance(obj, dict) and obj.get("functional"):
        _, vals = io.table_from_json(obj)
        if vals[0] != 0:
            raise FormatError("functional must vanish at 0")
        lam = tf.solve_signed_measure(vals)
    else:
        lam = tf.solve_signed_measure(io.submeasure_from_json(obj))
    return lam.to_json()


def cmd_incidence(args):
    if args.n is None:
        raise FormatError("--n is required")
    A = tf.incidence_matrix(args.n, args.order)
    order = tf.canonical_subsets(args.n) if args.order == "canonical" else tf.recursive_subsets(args.n)
    out = {
        "n": args.n,
        "order": args.order,
        "subsets": [tf.subset_label(y) for y in order],
        "rows": ["".join(str(x) for x in row) for row in A],
    }
    if args.determinant:
        out["determinant"] = io.q(tf.linalg.bareiss_det(A))
    return out


def _signed_measure(obj, labels: Sequence[str] | None, n_atoms: int) -> tf.SignedMeasure:
    if isinstance(obj, dict) and "atoms" in obj:
        raw = obj["atoms"]
        if not isinstance(raw, dict):
            raise FormatError("'atoms' must map labels to values")
        if labels is not None and list(raw) != list(labels):
            raise FormatError("atom labels do not match the target algebra order")
        vals = [io.parse_q(v) for v in raw.values()]
    elif isinstance(obj, list):
        vals = [io.parse_q(v) for v in obj]
    else:
        raise FormatError("lambda must be a list of values or {'atoms': {...}}")
    if len(vals) != n_atoms:
        raise FormatError(f"lambda has {len(vals)} atoms, target has {n_atoms}")
    return tf.SignedMeasure(tuple(vals), tuple(labels) if labels else None)


def cmd_pullback(args):
    obj = _input(args)
    kind = obj.get("map") if isinstance(obj, dict) else None
    if kind == "good":
        g = tf.GoodMap.canonical(int(obj["n"]))
        lam = _signed_measure(obj.get("lambda"), g.target.labels(), g.target.n_atoms)
        mu = tf.pullback_submeasure(lam, g, g.source)
    elif kind == "explicit":
        L = tf.build_levels(obj["branching"], int(obj["depth"]))
        m = tf.explicit_f_map(L, int(obj.get("n", obj["depth"])))
        lam = _signed_measure(obj.get("lambda"), None, m.target.n_atoms)
        mu = tf.pullback_submeasure(lam, m, m.source)
    else:
        raise FormatError("pullback input needs 'map': 'good' or 'explicit'")
    return io.submeasure_to_json(mu)


def _point_json(L: tf.LevelSystem, f) -> list[list[list[int]]]:
    return [[list(L.prefixes[i][b]) for b in tf.atoms_index(A)] for i, A in enumerate(f)]


def cmd_levels(args):
    if not args.branching:
        raise FormatError("--branching is required")
    try:
        br = [int(x) for x in args.branching.split(",")]
    except ValueError as exc:
        raise FormatError(f"bad branching {args.branching!r}") from exc
    depth = args.depth or len(br)
    L = tf.build_levels(br, depth)
    out = {
        "branching": list(L.branching),
        "depth": L.depth,
        "sizes": [len(T) for T in L.levels],
    }
    if args.list:
        out["levels"] = [[[list(L.prefixes[i][b]) for b in tf.atoms_index(A)] for A in T] for i, T in enumerate(L.levels)]
    if args.prefix is not None:
        s = _parse_prefix(args.prefix)
        t = tuple(s[i] for i in range(1, len(s) + 1))
        pts = sorted(tf.explicit_f(L, t))
        out["explicit_f"] = {"prefix": list(t), "count": len(pts), "points": [_point_json(L, f) for f in pts]}
    if args.generated_by is not None:
        A = [tuple(int(v) for v in p) for p in io.load_json(args.generated_by)]
        f = tf.f_generated_by(L, A)
        gens = sorted(tf.generators_of(L, f))
        out["generated_by"] = {"point": _point_json(L, f), "generators": [list(g) for g in gens]}
    return out


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--schedule", default="talagrand", help="'talagrand', schedule JSON, or a path")
    common.add_argument("--depth", type=int, help="depth bound")
    common.add_argument("--kmax", type=int, help="highest schedule level used")
    common.add_argument("--precision-cap", type=int, default=PRECISION_CAP, help="interval precision cap in bits")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized inputs")
    common.add_argument("--threads", type=int, default=1, help="worker threads for cover search")

    p = _Parser(prog="maharam", description="Exact computation with submeasures.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    a = add("psi-eval", "closed-form value of psi")
    a.add_argument("--total", action="store_true")
    a.add_argument("--prefix", help="prefix as '3,1' (values on [m]) or JSON {coord: value}")
    a.add_argument("--size", type=int, help="size of the prefix domain")
    a.add_argument("--oracle", action="store_true", help="evaluate by exact cover search instead")

    a = add("cover-search", "exact minimum-weight D-set cover")
    a.add_argument("--target", default="full", help="'full', 'empty', a prefix JSON or {'union': [...]}")

    a = add("check-inequalities", "verify the four schedule inequalities")
    a.add_argument("--samples", type=int, default=16)
    a.add_argument("--dense", action="store_true")
    a.add_argument("--which", help="comma list among " + ",".join(INEQUALITIES))

    for name, help_ in (
        ("check-submeasure", "validate a submeasure table"),
        ("pathology", "pathology gap and n-pathology"),
        ("uniform-exhaustivity", "antichain profile"),
        ("refine-pathological", "n-pathological refinement"),
    ):
        a = add(name, help_)
        a.add_argument("--input", help="submeasure JSON or path")
        a.add_argument("--random-atoms", type=int, help="use a random submeasure on this many atoms")
        if name in ("pathology", "refine-pathological"):
            a.add_argument("--n", type=int)
        if name == "uniform-exhaustivity":
            a.add_argument("--N", type=int)

    a = add("amalgamate", "glue submeasures along a partition")
    a.add_argument("--input", help="JSON with atoms, partition, mu, parts")

    a = add("thin-check", "(m, n, psi)-thinness of a clopen set")
    a.add_argument("--set", default="empty", help="clopen set JSON")
    a.add_argument("--m", type=int)
    a.add_argument("--n", type=int)

    a = add("transform", "signed measure of a functional")
    a.add_argument("--input", help="submeasure JSON, functional JSON, or {'chain': ...}")

    a = add("incidence", "incidence matrix of nonempty subsets")
    a.add_argument("--n", type=int)
    a.add_argument("--order", choices=("canonical", "recursive"), default="canonical")
    a.add_argument("--determinant", action="store_true")

    a = add("pullback", "submeasure pulled back along a union-preserving map")
    a.add_argument("--input", help="JSON with map, lambda and map parameters")

    a = add("levels", "level sets and the explicit map")
    a.add_argument("--branching", help="comma list of factor sizes")
    a.add_argument("--list", action="store_true", help="list every level member")
    a.add_argument("--prefix", help="evaluate the explicit map at this prefix")
    a.add_argument("--generated-by", help="JSON list of prefixes")
    return p


HANDLERS = {
    "psi-eval": cmd_psi_eval,
    "cover-search": cmd_cover_search,
    "check-inequalities": cmd_check_inequalities,
    "check-submeasure": cmd_check_submeasure,
    "pathology": cmd_pathology,
    "uniform-exhaustivity": cmd_uniform_exhaustivity,
    "amalgamate": cmd_amalgamate,
    "refine-pathological": cmd_refine_pathological,
    "thin-check": cmd_thin_check,
    "transform": cmd_transform,
    "incidence": cmd_incidence,
    "pullback": cmd_pullback,
    "levels": cmd_levels,
}


def _error(kind: str, detail, extra: dict | None = None) -> dict:
    err = {"kind": kind, "detail": detail}
    if extra:
        err.update(extra)
    return {"error": err}


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        err.write(str(exc))
        return 1
    if args.command is None:
        err.write(parser.format_usage())
        return 1
    try:
        check_precision(args.precision_cap)
        if args.threads < 1:
            raise PreconditionError("--threads must be at least 1")
        result = HANDLERS[args.command](args)
    except UndecidedError as exc:
        out.write(io.dumps(_error(exc.kind, str(exc), {"precision": exc.precision})))
        return 3
    except sm.SubmeasureViolation as exc:
        viol = [{"axiom": v.axiom, "witness": _elements(v.witness)} for v in exc.violations[:20]]
        out.write(io.dumps(_error(exc.kind, str(exc), {"violations": viol})))
        return 2
    except MaharamError as exc:
        out.write(io.dumps(_error(exc.kind, str(exc))))
        return 2
    except (KeyError, TypeError, ValueError) as exc:
        out.write(io.dumps(_error("format", f"malformed input: {exc!r}")))
        return 2
    code = 0
    if isinstance(result, tuple):
        result, code = result
    out.write(io.dumps(result))
    return code


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(main())
