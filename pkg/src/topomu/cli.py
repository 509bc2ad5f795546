"""Command-line front end: ``topomu <command> [options]``.

Exit codes: 0/1 semantic result, 2 time budget exceeded, 64 usage error,
65 malformed input data.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from . import decision, frames, morphisms, proofs, semantics, syntax, tangle, topology

EX_USAGE = 64
EX_DATAERR = 65
EX_BUDGET = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EX_USAGE)


def _global_flags(p, suppress):
    default = argparse.SUPPRESS
    p.add_argument("--emit", choices=("text", "json", "csv"),
                   default=default if suppress else "text")
    p.add_argument("--seed", type=int, default=default if suppress else 0)
    p.add_argument("--jobs", type=int, default=default if suppress else 1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topomu", description="Topological mu-calculus toolkit.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        return p

    p = cmd("parse", "parse and print a formula")
    p.add_argument("formula")
    p.add_argument("--normalize", action="store_true", help="print the core form")

    p = cmd("check", "evaluate a formula on a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--formula", required=True)

    for name in ("sat", "valid"):
        p = cmd(name, "bounded satisfiability" if name == "sat" else "bounded validity")
        p.add_argument("--formula", required=True)
        p.add_argument("--class", dest="frame_class", default="WK4",
                       choices=[c.value for c in frames.FrameClass])
        p.add_argument("--max-worlds", type=int, default=4)
        p.add_argument("--atom-budget", type=int, default=4)
        p.add_argument("--time-budget-ms", type=int, default=None)

    p = cmd("quotient", "bisimilarity quotient of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--atoms", help="comma-separated atoms (default: all atoms of the model)")
    p.add_argument("--sigma", metavar="FORMULA", help="use the closure set of FORMULA")

    p = cmd("unfold", "irreflexive unfolding of a model")
    p.add_argument("--model", required=True)

    p = cmd("translate", "convert between finite spaces and frames")
    p.add_argument("--direction", required=True, choices=topology.DIRECTIONS)
    p.add_argument("--input", required=True)

    p = cmd("spine", "spine expressivity experiment")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--size-bound", type=int, required=True)

    p = cmd("prove", "check a proof file")
    p.add_argument("--proof", required=True)

    p = cmd("bound", "finite model size bound")
    p.add_argument("--sigma-size", type=int, required=True)

    p = cmd("fuzz", "soundness fuzzing of axiom schemas")
    p.add_argument("--schema", action="append", required=True,
                   help="built-in schema name; repeatable")
    p.add_argument("--class", dest="frame_class", default="WK4",
                   choices=[c.value for c in frames.FrameClass])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-worlds", type=int, default=5)
    return parser


# ---------------------------------------------------------------- helpers

def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise frames.ModelFormatError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise frames.ModelFormatError(f"{path}: {exc.strerror}") from exc


def _names(m, ws):
    return [m.names[w] for w in sorted(ws)]


def _emit(args, payload, text, rows=None):
    if args.emit == "json":
        print(json.dumps(payload, separators=(",", ":")))
    elif args.emit == "csv":
        if rows is None:
            raise UsageError(f"--emit csv is not available for {args.command}")
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else [])
        writer.writeheader()
        writer.writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        print(text)


def _model_payload(result_model, projection, source):
    data = frames.model_to_json(result_model)
    data["projection"] = {source.names[w]: result_model.names[b] for w, b in enumerate(projection)}
    return data


# ---------------------------------------------------------------- commands

def _cmd_parse(args):
    f = syntax.parse(args.formula)
    core = syntax.normalize(f)
    shown = core if args.normalize else f
    payload = {"formula": syntax.to_text(f), "core": syntax.to_text(core),
               "freeVars": sorted(syntax.free_vars(core)), "size": syntax.size(f)}
    _emit(args, payload, syntax.to_text(shown))
    return 0


def _cmd_check(args):
    m = frames.model_from_json(_load_json(args.model))
    f = syntax.parse(args.formula)
    ws = semantics.evaluate(m, f)
    names = _names(m, ws)
    _emit(args, {"formula": syntax.to_text(f), "worlds": names}, " ".join(names))
    return 0


def _cmd_search(args):
    cfg = decision.SearchConfig(args.frame_class, args.max_worlds, args.atom_budget,
                                args.time_budget_ms, args.seed)
    f = syntax.parse(args.formula)
    run = decision.bounded_sat if args.command == "sat" else decision.bounded_valid
    res = run(f, cfg)
    payload = {"formula": syntax.to_text(f), "class": cfg.frame_class.value,
               "maxWorlds": cfg.max_worlds, "found": res.found,
               "framesChecked": res.frames_checked}
    if res.found:
        payload["model"] = frames.model_to_json(res.model)
        payload["world"] = res.model.names[res.world]
    if args.command == "sat":
        text = (f"satisfiable: world {payload['world']} of\n{json.dumps(payload['model'])}"
                if res.found else f"no model with at most {cfg.max_worlds} worlds")
        code = 0 if res.found else 1
    else:
        text = (f"counterexample: world {payload['world']} of\n{json.dumps(payload['model'])}"
                if res.found else f"no counterexample with at most {cfg.max_worlds} worlds")
        code = 1 if res.found else 0
    _emit(args, payload, text)
    return code


def _cmd_quotient(args):
    m = frames.model_from_json(_load_json(args.model))
    if args.sigma:
        sigma = syntax.closure_set(syntax.parse(args.sigma))
        part = morphisms.compute_bisimilarity(m, sigma)
        atoms = morphisms.sigma_atoms(sigma)
    else:
        atoms = (frozenset(a.strip() for a in args.atoms.split(",") if a.strip())
                 if args.atoms else m.atoms())
        part = morphisms.compute_bisimilarity(m, atoms)
    q = morphisms.quotient_model(m, part, atoms)
    payload = _model_payload(q.model, q.projection, m)
    _emit(args, payload, json.dumps(payload, indent=2))
    return 0


def _cmd_unfold(args):
    m = frames.model_from_json(_load_json(args.model))
    u = frames.irreflexive_unfold(m)
    payload = frames.model_to_json(u.model)
    payload["projection"] = {u.model.names[i]: m.names[w] for i, w in enumerate(u.projection)}
    _emit(args, payload, json.dumps(payload, indent=2))
    return 0


def _cmd_translate(args):
    data = _load_json(args.input)
    if args.direction.endswith("-to-frame"):
        space, names = topology.space_from_json(data)
        fr = topology.translate(space, args.direction)
        payload = frames.model_to_json(frames.Model(fr, {}, names))
    else:
        m = frames.model_from_json(data)
        space = topology.translate(m.frame, args.direction)
        payload = topology.space_to_json(space, m.names)
    _emit(args, payload, json.dumps(payload, indent=2))
    return 0


def _cmd_spine(args):
    rep = tangle.expressivity_experiment(args.m, args.size_bound)
    payload = rep.to_json()
    text = "\n".join([
        f"spine m={rep.m}, formulas up to size {rep.size_bound}: {rep.formula_count}",
        f"{payload['separator']['formula']} holds at {payload['separator']['value']}",
        f"top agreement (omega vs omega+2): {'all' if not rep.disagreements else len(rep.disagreements)} "
        f"{'formulas agree' if not rep.disagreements else 'disagreements'}",
        f"parity violations: {rep.parity_violations}",
    ])
    _emit(args, payload, text, rows=[{k: r[k] for k in tangle.CSV_COLUMNS} for r in rep.rows])
    return 0


def _cmd_prove(args):
    proof = proofs.load_proof(args.proof)
    v = proofs.check_proof(proof)
    payload = {"valid": v.valid, "badStep": v.bad_step, "reason": v.reason,
               "conclusion": syntax.to_text(proof.conclusion)}
    text = "valid" if v.valid else f"invalid at step {v.bad_step}: {v.reason}"
    _emit(args, payload, text)
    return 0 if v.valid else 1


def _cmd_bound(args):
    if args.sigma_size < 1:
        raise UsageError("--sigma-size must be at least 1")
    b = frames.fmp_bound(args.sigma_size)
    payload = b.to_json()
    if args.emit == "text":
        print(json.dumps(payload, separators=(",", ":")))
    else:
        _emit(args, payload, "")
    return 0


def _fuzz_chunk(task):
    schemas, cls, count, max_worlds, seed, first = task
    return proofs.soundness_fuzz(schemas, cls, count, max_worlds, seed, first_trial=first)


def _cmd_fuzz(args):
    proofs.resolve_logic(args.schema)   # reject unknown names before any work
    jobs = max(1, args.jobs)
    per = -(-args.trials // jobs)
    tasks = [(args.schema, args.frame_class, min(per, args.trials - lo), args.max_worlds,
              args.seed, lo) for lo in range(0, args.trials, per)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            parts = list(pool.map(_fuzz_chunk, tasks))
    else:
        parts = [_fuzz_chunk(t) for t in tasks]
    rep = proofs.FuzzReport(args.trials, frames.FrameClass(args.frame_class).value, args.seed)
    for part in parts:
        for k, v in part.instances.items():
            rep.instances[k] = rep.instances.get(k, 0) + v
        for k, v in part.rule_checks.items():
            rep.rule_checks[k] = rep.rule_checks.get(k, 0) + v
        rep.failures.extend(part.failures)
        rep.rule_failures.extend(part.rule_failures)
    payload = rep.to_json()
    text = (f"{args.trials} trials on {rep.frame_class}: {len(rep.failures)} validity failures, "
            f"{len(rep.rule_failures)} rule failures")
    _emit(args, payload, text)
    return 0 if rep.ok else 1


COMMANDS = {
    "parse": _cmd_parse, "check": _cmd_check, "sat": _cmd_search, "valid": _cmd_search,
    "quotient": _cmd_quotient, "unfold": _cmd_unfold, "translate": _cmd_translate,
    "spine": _cmd_spine, "prove": _cmd_prove, "bound": _cmd_bound, "fuzz": _cmd_fuzz,
}

_DATA_ERRORS = (
    syntax.FormulaSyntaxError, syntax.NotPositive, frames.ModelFormatError,
    frames.NotWeaklyTransitive, proofs.ProofFormatError, topology.WrongClass,
    semantics.UnboundVariable, morphisms.NotABisimulation,
)
# flag values that are well-typed but out of range
_USAGE_ERRORS = (UsageError, decision.InvalidInput, tangle.PreconditionViolated)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except _USAGE_ERRORS as exc:
        print(f"topomu: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except decision.TimeBudgetExceeded as exc:
        if args.emit == "json":
            print(json.dumps({"budgetExceeded": True, "progress": exc.progress}))
        print(f"topomu: {exc}", file=sys.stderr)
        return EX_BUDGET
    except _DATA_ERRORS as exc:
        print(f"topomu: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
