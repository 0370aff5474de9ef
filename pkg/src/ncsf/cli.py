"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a verification fails,
2 for usage and input errors.  Output is canonical JSON (sorted keys) so
identical inputs give identical bytes; ``--format text`` renders the same data.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .exp_phi import SYMBOLIC
from .identities import IDENTITIES, verify_c_symmetry, verify_identity
from .inversion import (
    DLOG_BASES,
    FLOW_FORMS,
    INVERSION_METHODS,
    DepthTooLarge,
    dlog,
    dlog_bch,
    flow,
    flow_checks,
    invert,
)
from .jacobian import generate_triangular_H, parse_generator, run_batch, run_jc_experiment
from .nsym import Kind, defining_residuals, families
from .rational import q
from .series import PolyMap
from .diffops import HContext

MAX_WEIGHT = 12
OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# input helpers

def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno} (char {e.pos}): {e.msg}") from None


def _load_field(path: str, T: int) -> PolyMap:
    data = _read_json(path)
    try:
        return PolyMap.from_json(data, T)
    except (ValueError, TypeError, KeyError, ZeroDivisionError) as e:
        raise UsageError(f"{path}: bad map: {e}") from None


def _csv(text: Optional[str]) -> Optional[list[str]]:
    if text is None:
        return None
    return [p.strip() for p in text.split(",") if p.strip()]


def _choices(selected: Optional[str], allowed: Sequence[str], what: str) -> list[str]:
    if selected in (None, "all"):
        return list(allowed)
    items = _csv(selected)
    bad = [s for s in items if s not in allowed]
    if bad or not items:
        raise UsageError(f"unknown {what} {', '.join(bad) or selected!r}; choose from {', '.join(allowed)}")
    return items


def _order(args) -> int:
    if args.order < 1:
        raise UsageError("--order must be >= 1")
    return args.order


# subcommands: each returns (payload, passed)

def cmd_identities(args):
    N = args.max_weight
    if not 1 <= N <= MAX_WEIGHT:
        raise UsageError(f"--max-weight must be in 1..{MAX_WEIGHT}")
    names = _choices(",".join(_csv(args.only)) if args.only else None, list(IDENTITIES), "identity")
    reports = [verify_identity(name, N).to_json() for name in names]
    payload = {"max_weight": N, "identities": reports}
    passed = all(r["status"] == "pass" for r in reports)
    if not args.only:
        bad = verify_c_symmetry(N)
        payload["c_symmetry"] = {"status": "pass" if not bad else "fail",
                                 **({"counterexample": [list(x) for x in bad[0]]} if bad else {})}
        passed &= not bad
    return payload, passed


def cmd_families(args):
    N = args.max_weight
    if not 1 <= N <= MAX_WEIGHT:
        raise UsageError(f"--max-weight must be in 1..{MAX_WEIGHT}")
    kinds = _choices(",".join(_csv(args.only)) if args.only else None, [k.value for k in Kind], "family")
    fam = families(N)
    residuals = {name: not r for name, r in defining_residuals(N).items()}
    payload = {
        "max_weight": N,
        "families": {k: {str(m): fam[Kind(k)][m].to_json() for m in range(1, N + 1)} for k in kinds},
        "defining_relations": residuals,
    }
    return payload, all(residuals.values())


def cmd_invert(args):
    T = _order(args)
    H = _load_field(args.map, T)
    methods = _choices(args.method, list(INVERSION_METHODS), "method")
    ctx = HContext(H, T)
    reports = [invert(H, T, m, ctx).to_json() for m in methods]
    return {"T": T, "reports": reports}, all(r["ok"] for r in reports)


def cmd_dlog(args):
    T = _order(args)
    H = _load_field(args.map, T)
    bases = _choices(args.basis, list(DLOG_BASES), "basis")
    ctx = HContext(H, T)
    results = [dlog(H, T, b, ctx) for b in bases]
    ref = results[0].a
    checks = {f"agrees_{r.basis}": r.a == ref for r in results}
    payload = {"T": T, "results": [r.to_json() for r in results]}
    passed = all(checks.values()) and all(r.ok for r in results)
    if args.bch_depth is not None:
        try:
            bch = dlog_bch(H, T, args.bch_depth, ctx)
        except DepthTooLarge as e:
            raise UsageError(str(e)) from None
        payload["bch"] = bch.to_json()
        passed &= bch.ok
    payload["checks"] = checks
    return payload, passed


def cmd_flow(args):
    T = _order(args)
    H = _load_field(args.map, T)
    bases = _choices(args.basis, list(FLOW_FORMS), "basis")
    if args.u in (None, SYMBOLIC):
        u_mode = SYMBOLIC
    else:
        try:
            u_mode = q(args.u)
        except (ValueError, ZeroDivisionError) as e:
            raise UsageError(f"--u: {e}") from None
    ctx = HContext(H, T)
    results = [flow(H, T, b, u_mode, ctx) for b in bases]
    checks = {f"agrees_{r.basis}": r.components == results[0].components for r in results}
    if u_mode == SYMBOLIC and not args.skip_properties:
        checks.update(flow_checks(H, T, ctx))
    payload = {"T": T, "results": [r.to_json() for r in results], "checks": checks}
    return payload, all(checks.values())


def cmd_jc(args):
    T = _order(args)
    given = [x for x in (args.map, args.generate, args.batch) if x is not None]
    if len(given) != 1:
        raise UsageError("jc needs exactly one of --map, --generate, --batch")
    try:
        if args.batch is not None:
            specs = _read_json(args.batch)
            if not isinstance(specs, list):
                raise UsageError(f"{args.batch}: batch file must hold a JSON array")
            results = run_batch(specs, T, workers=args.workers)
            return {"T": T, "experiments": results}, all(all(r["checks"].values()) for r in results)
        if args.generate is not None:
            n, d, seed = parse_generator(args.generate)
            H = generate_triangular_H(n, d, seed, T)
        else:
            H = _load_field(args.map, T)
    except ValueError as e:
        raise UsageError(str(e)) from None
    exp = run_jc_experiment(H, T)
    return exp.to_json(), exp.ok


COMMANDS = {
    "identities": cmd_identities,
    "families": cmd_families,
    "invert": cmd_invert,
    "dlog": cmd_dlog,
    "flow": cmd_flow,
    "jc": cmd_jc,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ncsf", description="NCSF identities and inversion experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("identities", parents=[common], help="verify the change-of-basis identities")
    s.add_argument("--max-weight", type=int, default=7)
    s.add_argument("--only", help="comma-separated identity names")

    s = sub.add_parser("families", parents=[common], help="print the five families in the Lambda basis")
    s.add_argument("--max-weight", type=int, default=4)
    s.add_argument("--only", help="comma-separated families (Lambda,S,Phi,Psi,Xi)")

    def map_cmd(name, help_):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--map", required=name != "jc", metavar="PATH", help="field H as JSON ('-' for stdin)")
        s.add_argument("--order", type=int, default=6, metavar="T")
        return s

    s = map_cmd("invert", "inverse slices by each formula")
    s.add_argument("--method", default="all", help="lambda, psi, ci, recurrent, oracle or all")
    s = map_cmd("dlog", "D-Log in each basis")
    s.add_argument("--basis", default="all", help="lambda, s, psi, xi or all")
    s.add_argument("--bch-depth", type=int, metavar="r")
    s = map_cmd("flow", "formal flow F_t(z, u)")
    s.add_argument("--basis", default="all", help="phi, lambda, s, psi, xi or all")
    s.add_argument("--u", help="rational p/q (default: symbolic)")
    s.add_argument("--skip-properties", action="store_true", help="symbolic u: skip group-law and power checks")
    s = map_cmd("jc", "nilpotent Jacobian experiment")
    s.add_argument("--generate", metavar="n,d,seed")
    s.add_argument("--batch", metavar="PATH", help="JSON array of maps or {n,d,seed} descriptors")
    s.add_argument("--workers", type=int, default=1)
    return p


def render_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v)}")
        return "\n".join(lines)
    if isinstance(obj, list):
        if all(not isinstance(x, (dict, list)) for x in obj):
            return pad + json.dumps(obj)
        return "\n".join(f"{pad}-\n" + render_text(x, indent + 1) for x in obj)
    return pad + json.dumps(obj)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else USAGE
    try:
        payload, passed = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"ncsf {args.command}: error: {e}", file=sys.stderr)
        return USAGE
    payload = {"command": args.command, "status": "pass" if passed else "fail", **payload}
    text = render_text(payload) if args.format == "text" else json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as e:
            print(f"ncsf: cannot write {args.out}: {e.strerror}", file=sys.stderr)
            return USAGE
    else:
        print(text)
    return OK if passed else FAILED


if __name__ == "__main__":
    sys.exit(main())
