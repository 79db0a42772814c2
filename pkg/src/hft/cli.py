"""Command-line front end: ``hft <command> ...``.

Every command prints one JSON report (sorted keys) to stdout or ``--out``.
Exit status: 0 success, 1 domain error, 2 input or window error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .tangle import TangleDiagram, TangleError, WindowExceeded, load as load_tangle

log = logging.getLogger("hft")


class InputError(Exception):
    """Unreadable or malformed input (exit status 2)."""


class DomainError(Exception):
    """The query was well-formed but its demand failed (exit status 1)."""


# ---------------------------------------------------------------------------
# argument helpers

def _tangle(arg: str) -> tuple[TangleDiagram, dict]:
    from .fixtures import BUILTIN_NAMES, builtin_example
    if arg in BUILTIN_NAMES and not Path(arg).exists():
        d = builtin_example(arg)
        return d, {"builtin": arg, "sha256": hashlib.sha256(d.dumps().encode()).hexdigest()}
    try:
        raw = Path(arg).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read tangle {arg!r}: {exc.strerror}") from None
    try:
        d = load_tangle(arg)
    except TangleError as exc:
        raise InputError(f"{arg}: {exc}") from None
    return d, {"file": arg, "sha256": hashlib.sha256(raw).hexdigest()}


def _ids(text: str | None, diagram: TangleDiagram | None = None) -> list[str] | None:
    if text is None:
        return None
    if text.startswith("@"):
        try:
            body = Path(text[1:]).read_text()
        except OSError as exc:
            raise InputError(f"cannot read set file {text[1:]!r}: {exc.strerror}") from None
        body = body.strip()
        if body.startswith("["):
            ids = [str(x) for x in json.loads(body)]
        else:
            ids = body.replace(",", " ").split()
    else:
        ids = [t.strip() for t in text.split(",") if t.strip()]
    if diagram is not None:
        unknown = [p for p in ids if p not in diagram]
        if unknown:
            raise InputError(f"unknown point ids: {', '.join(unknown)}")
    return ids


def _family(path: str) -> list[list[str]]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read system file {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None
    sets = data.get("sets") if isinstance(data, dict) else data
    if not isinstance(sets, list) or not all(isinstance(s, list) for s in sets):
        raise InputError("system file must hold a list of id lists (optionally under 'sets')")
    return [[str(x) for x in s] for s in sets]


def _orient(args) -> int:
    return 1 if args.orient == "u+" else -1


def _mode(args) -> str:
    return args.coeff


# ---------------------------------------------------------------------------
# commands (thin wrappers)

def cmd_validate(args, rep):
    from .geometry import validate_tangle
    d, rep["inputs"]["tangle"] = _tangle(args.tangle)
    v = validate_tangle(d)
    rep["result"] = v.to_json()
    if not v.ok:
        raise DomainError("tangle violates the standing assumptions")


def cmd_intersect(args, rep):
    d, rep["inputs"]["tangle"] = _tangle(args.tangle)
    rep["result"] = {"points": d.to_json()["points"]}


def cmd_mu(args, rep):
    from .geometry import maslov_abs
    d, rep["inputs"]["tangle"] = _tangle(args.tangle)
    ids = _ids(args.set, d) or d.ids
    rep["result"] = {"maslov": {p: maslov_abs(d, p) for p in ids}}


def cmd_signs(args, rep):
    from .geometry import sign_table
    d, rep["inputs"]["tangle"] = _tangle(args.tangle)
    ids = _ids(args.set, d)
    rep["result"] = sign_table(d, ids, _orient(args), _mode(args), jobs=args.jobs).to_json()


def cmd_classify(args, rep):
    from .geometry import classify_points
    d, rep["inputs"]["tangle"] = _tangle(args.tangle)
    rep["result"] = {"classification": classify_points(d)}


def _need_set(args, d):
    ids = _ids(args.set, d)
    if ids is None:
        raise InputError("--set is required for this command")
    return ids


def cmd_complete(args, rep):
    from .chain import build_complex, is_del_complete
    d, rep["inputs"]["tangle"] = _tangle(args.tangle)
    cx = build_complex(d, _need_set(args, d), _orient(args), _mode(args))
    rep["result"] = {"complex": cx.to_json(), **is_del_complete(cx).to_json()}


def cmd_prune(args, rep):
    from .chain import build_complex, is_del_complete, prune
    d, rep["inputs"]["tangle"] = _tangle(args.tangle)
    E = _need_set(args, d)
    kept, plog = prune(d, E, _orient(args), _mode(args), seed=args.seed)
    cx = build_complex(d, kept, _orient(args), _mode(args))
    rep["result"] = {"input_set": sorted(E), "pruned_set": sorted(kept), "prune_log": plog.to_json(),
                     "complete": is_del_complete(cx).complete}


def cmd_homology(args, rep):
    from .chain import local_floer_homology
    d, rep["inputs"]["tangle"] = _tangle(args.tangle)
    E = _need_set(args, d)
    res = local_floer_homology(d, E, _orient(args), _mode(args))
    rep["result"] = {"input_set": sorted(E), **res.to_json()}


def cmd_system(args, rep):
    from .limits import build_homology_system, check_chain_compatible, InclusionPoset
    d, rep["inputs"]["tangle"] = _tangle(args.tangle)
    fam = _family(args.system)
    rep["inputs"]["system"] = args.system
    for s in fam:
        _ids(",".join(s), d)
    if args.action == "check":
        from .chain import build_complex, is_del_complete
        P = InclusionPoset(fam)
        directed, pair = P.directed()
        complete = {P.label(i): is_del_complete(build_complex(d, m, _orient(args), _mode(args))).complete
                    for i, m in enumerate(P.members)}
        compat = []
        for i, j in P.comparable_pairs():
            if complete[P.label(i)] and complete[P.label(j)]:
                r = check_chain_compatible(d, P.members[i], P.members[j], _orient(args), _mode(args))
                compat.append({"from": sorted(P.members[i]), "to": sorted(P.members[j]), **r.to_json()})
        rep["result"] = {"directed": directed,
                         "counterexample": [sorted(P.members[k]) for k in pair] if pair else None,
                         "complete": complete, "compatibility": compat}
        return
    hs = build_homology_system(d, fam, _orient(args), _mode(args))
    out = hs.to_json()
    if args.relations == "all":
        for k in hs.degrees:
            out["degrees"][str(k)]["limit"] = hs.limit(k, "all").to_json()
    rep["result"] = out


def cmd_grow(args, rep):
    from .dynamics import GrowthParams, MapSpec, grow_tangle
    from .tangle import parse_rational
    spec = MapSpec.henon(parse_rational(args.c))
    kw = {k: getattr(args, k) for k in ("delta", "max_arc_length", "max_points", "max_turn_deg",
                                        "max_spacing", "snap_bits", "box") if getattr(args, k) is not None}
    d = grow_tangle(spec, GrowthParams(**kw))
    rep["result"] = {"map": spec.to_json(), "points": len(d.points), "tangle": d.to_json()}


def cmd_example(args, rep):
    from .fixtures import builtin_example, check_manifest, manifest
    try:
        d = builtin_example(args.name)
    except KeyError as exc:
        raise InputError(exc.args[0]) from None
    rep["inputs"]["tangle"] = {"builtin": args.name}
    res = {"tangle": d.to_json(), "manifest": manifest(args.name)}
    if args.check:
        bad = check_manifest(args.name, d)
        res["manifest_mismatches"] = bad
        if bad:
            rep["result"] = res
            raise DomainError("engine disagrees with the manifest")
    rep["result"] = res


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--coeff", choices=("z", "z2"), default="z", help="coefficients (default z)")
    common.add_argument("--orient", choices=("u+", "u-"), default="u+",
                        help="orientation of W^u: stored reference (u+) or its reverse")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--no-timing", action="store_true", help="omit wall-clock timings")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for lune tests")

    ap = argparse.ArgumentParser(prog="hft", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"hft {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, tangle=True, set_=False):
        p = sub.add_parser(name, parents=[common], help=help_)
        if tangle:
            p.add_argument("tangle", help="tangle file or built-in example name")
        if set_:
            p.add_argument("--set", help="comma-separated point ids or @file")
        p.set_defaults(func=fn)
        return p

    add("validate", cmd_validate, "check the standing assumptions")
    add("intersect", cmd_intersect, "list homoclinic points")
    add("mu", cmd_mu, "Maslov indices", set_=True)
    add("signs", cmd_signs, "coefficients n(p,q)", set_=True)
    add("classify", cmd_classify, "primary / semiprimary points")
    add("complete", cmd_complete, "boundary-completeness of a set", set_=True)
    p = add("prune", cmd_prune, "prune a set to a complete one", set_=True)
    p.add_argument("--seed", type=int, help="shuffle the triple scan order")
    add("homology", cmd_homology, "local homoclinic Floer homology of a set", set_=True)

    p = sub.add_parser("system", help="direct systems over a family of sets")
    ss = p.add_subparsers(dest="action", required=True)
    for action, h in (("check", "directedness and chain compatibility"),
                      ("limit", "homology system and its direct limit")):
        q = ss.add_parser(action, parents=[common], help=h)
        q.add_argument("tangle")
        q.add_argument("system", help="JSON file with a list of id lists")
        if action == "limit":
            q.add_argument("--relations", choices=("hasse", "all"), default="hasse")
        q.set_defaults(func=cmd_system)

    p = add("grow", cmd_grow, "grow a tangle of the area-preserving Henon map", tangle=False)
    p.add_argument("--c", default="-3/4", help="map parameter (c + 1 must be a rational square)")
    for name, typ in (("delta", float), ("max_arc_length", float), ("max_points", int),
                      ("max_turn_deg", float), ("max_spacing", float), ("snap_bits", int), ("box", float)):
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    p.add_argument("--tangle-out", help="also write the grown tangle file here")

    p = add("example", cmd_example, "emit a built-in figure", tangle=False)
    p.add_argument("name")
    p.add_argument("--check", action="store_true", help="verify the engine against the manifest")
    return ap


def _setup_logging():
    level = os.environ.get("HFT_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(stream=sys.stderr, level=levels.get(level, logging.WARNING),
                        format="hft %(levelname)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    rep = {"command": ["hft"] + argv, "engine": __version__, "inputs": {}, "result": None, "error": None}
    t0 = time.perf_counter()
    status = 0
    try:
        args.func(args, rep)
    except (InputError, WindowExceeded, TangleError, ValueError) as exc:
        from .geometry import PreconditionError
        from .limits import LimitsError
        from .zmod import ChainMapError, NotAComplexError
        domain = isinstance(exc, (PreconditionError, LimitsError, ChainMapError, NotAComplexError)) \
            and not isinstance(exc, WindowExceeded)
        status = 1 if domain else 2
        rep["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except (DomainError, RuntimeError) as exc:
        status = 1
        rep["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except KeyError as exc:
        status = 2
        rep["error"] = {"type": "KeyError", "message": str(exc.args[0]) if exc.args else ""}
    if rep["error"]:
        log.error(rep["error"]["message"])
    if not getattr(args, "no_timing", False):
        rep["timing"] = {"seconds": round(time.perf_counter() - t0, 4)}
    text = json.dumps(rep, sort_keys=True, indent=2) + "\n"
    if args.command == "grow" and getattr(args, "tangle_out", None) and rep["result"]:
        Path(args.tangle_out).write_text(json.dumps(rep["result"]["tangle"], indent=2) + "\n")
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
