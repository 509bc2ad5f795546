"""Hilbert-style proofs for the weakly transitive mu-calculus and extensions."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .frames import FrameClass, model_to_json
from .randgen import random_formula, random_model, random_theta
from .semantics import eval_mask
from .syntax import (And, Dia, Formula, Neg, NotPositive, Nu, Top, Var, _canonical, alpha_equal,
                     box, free_vars, implies, is_core, normalize, parse, substitute, to_text)
from .syntax import _check_positive

__all__ = [
    "Schema", "BUILTIN", "TooManyAtoms", "ProofFormatError", "match_schema", "is_tautology",
    "Step", "Proof", "ProofVerdict", "check_proof", "load_proof", "proof_from_json",
    "FuzzReport", "soundness_fuzz", "resolve_logic",
]


class TooManyAtoms(ValueError):
    pass


class ProofFormatError(ValueError):
    pass


MAX_TAUT_ATOMS = 16


@dataclass(frozen=True)
class Schema:
    """An axiom schema. Lowercase atoms in ``template`` are metavariables."""

    name: str
    template: Formula | None = None    # None for Taut and Fix

    @property
    def core(self) -> Formula | None:
        return None if self.template is None else normalize(self.template)


BUILTIN = {
    "Taut": Schema("Taut"),
    "Fix": Schema("Fix"),
    "K": Schema("K", parse("[](p -> q) -> ([]p -> []q)")),
    "W": Schema("W", parse("<><>p -> (p | <>p)")),
    "T0Ax": Schema("T0Ax", parse("p & <>(q & <>p) -> <>p | <>(q & <>q)")),
    "FourAx": Schema("FourAx", parse("<><>p -> <>p")),
}


def _core(f):
    return f if is_core(f) else normalize(f)


# ---------------------------------------------------------------- matching

def _match(t, f, binding, bound):
    if isinstance(t, Var):
        if t.name in bound:
            return isinstance(f, Var) and f.name == bound[t.name]
        if t.name[:1].isupper():
            return f == t
        prev = binding.get(t.name)
        if prev is None:
            binding[t.name] = f
            return True
        return alpha_equal(prev, f)
    if type(t) is not type(f):
        return False
    if isinstance(t, Top):
        return True
    if isinstance(t, (Neg, Dia)):
        return _match(t.child, f.child, binding, bound)
    if isinstance(t, And):
        return _match(t.left, f.left, binding, bound) and _match(t.right, f.right, binding, bound)
    if isinstance(t, Nu):
        return _match(t.body, f.body, binding, {**bound, t.var: f.var})
    return False


def _split_implication(f):
    # a -> b is ~(a & ~b)
    if isinstance(f, Neg) and isinstance(f.child, And) and isinstance(f.child.right, Neg):
        return f.child.left, f.child.right.child
    return None


def _match_fix(f):
    parts = _split_implication(f)
    if parts is None or not isinstance(parts[0], Nu):
        return None
    nu, rhs = parts
    if alpha_equal(rhs, substitute(nu.body, {nu.var: nu})):
        return {"x": Var(nu.var), "theta": nu.body}
    return None


def _boolean_atoms(f, table):
    """Replace maximal non-Boolean subformulas by propositional letters."""
    if isinstance(f, Top):
        return f
    if isinstance(f, Neg):
        return Neg(_boolean_atoms(f.child, table))
    if isinstance(f, And):
        return And(_boolean_atoms(f.left, table), _boolean_atoms(f.right, table))
    key = _canonical(f)
    if key not in table:
        table[key] = (len(table), f)
    return Var(table[key][0])


def _truth_table(f, patterns, full):
    if isinstance(f, Top):
        return full
    if isinstance(f, Var):
        return patterns[f.name]
    if isinstance(f, Neg):
        return full ^ _truth_table(f.child, patterns, full)
    return _truth_table(f.left, patterns, full) & _truth_table(f.right, patterns, full)


def is_tautology(f: Formula):
    """Propositional tautology check; returns the atom abstraction or None."""
    table = {}
    skeleton = _boolean_atoms(_core(f), table)
    k = len(table)
    if k > MAX_TAUT_ATOMS:
        raise TooManyAtoms(f"{k} propositional atoms (limit {MAX_TAUT_ATOMS})")
    rows = 1 << k
    full = (1 << rows) - 1
    patterns = {}
    for i in range(k):
        half = 1 << i
        unit = ((1 << half) - 1) << half
        patterns[i] = unit * (full // ((1 << (2 * half)) - 1))
    if _truth_table(skeleton, patterns, full) != full:
        return None
    return {f"a{i}": g for i, g in sorted(table.values(), key=lambda t: t[0])}


def match_schema(f: Formula, schema: Schema | str):
    """Metavariable assignment making ``f`` an instance of ``schema``, or None."""
    if isinstance(schema, str):
        schema = BUILTIN[schema]
    f = _core(f)
    if schema.name == "Taut" and schema.template is None:
        return is_tautology(f)
    if schema.name == "Fix" and schema.template is None:
        return _match_fix(f)
    binding = {}
    if _match(schema.core, f, binding, {}):
        return binding
    return None


# ---------------------------------------------------------------- proofs

@dataclass(frozen=True)
class Step:
    rule: str                       # Axiom | MP | Nec | Induction
    formula: Formula | None = None
    schema: str | None = None
    premises: tuple = ()
    var: str | None = None
    body: Formula | None = None


@dataclass(frozen=True)
class Proof:
    steps: tuple
    conclusion: Formula
    logic: tuple = ("Taut", "K", "W", "Fix")


@dataclass(frozen=True)
class ProofVerdict:
    valid: bool
    bad_step: int | None = None
    reason: str = ""
    formulas: tuple = ()

    def __bool__(self):
        return self.valid


def resolve_logic(logic: Iterable) -> dict:
    out = {}
    for item in logic:
        if isinstance(item, Schema):
            out[item.name] = item
        elif isinstance(item, str):
            if item not in BUILTIN:
                raise ProofFormatError(f"unknown schema {item!r}")
            out[item] = BUILTIN[item]
        elif isinstance(item, dict) and {"name", "template"} <= set(item):
            out[item["name"]] = Schema(item["name"], parse(item["template"]))
        else:
            raise ProofFormatError(f"bad logic entry {item!r}")
    return out


def _derive(i, step, done, schemas):
    """Formula established by step ``i`` or an error string."""
    for j in step.premises:
        if not (isinstance(j, int) and 0 <= j < i):
            return f"premise {j} is not an earlier step"
    if step.rule == "Axiom":
        if step.formula is None:
            return "axiom step needs a formula"
        if step.schema not in schemas:
            return f"schema {step.schema!r} not in the logic"
        try:
            inst = match_schema(step.formula, schemas[step.schema])
        except TooManyAtoms as exc:
            return str(exc)
        if inst is None:
            return f"not an instance of {step.schema}"
        return _core(step.formula)
    if step.rule == "MP":
        if len(step.premises) != 2:
            return "modus ponens needs two premises"
        a, imp = done[step.premises[0]], done[step.premises[1]]
        parts = _split_implication(imp)
        if parts is None or not alpha_equal(parts[0], a):
            return "second premise is not an implication from the first"
        return parts[1]
    if step.rule == "Nec":
        if len(step.premises) != 1:
            return "necessitation needs one premise"
        return box(done[step.premises[0]])
    if step.rule == "Induction":
        if len(step.premises) != 1 or step.var is None or step.body is None:
            return "induction needs one premise, a variable and a body"
        theta = _core(step.body)
        try:
            _check_positive(theta, {step.var: 0}, [])
        except NotPositive as exc:
            return str(exc)
        parts = _split_implication(done[step.premises[0]])
        if parts is None:
            return "premise is not an implication"
        phi, rhs = parts
        if not alpha_equal(rhs, substitute(theta, {step.var: phi})):
            return "premise is not of the form phi -> theta(phi)"
        return _core(implies(phi, Nu(step.var, theta)))
    return f"unknown rule {step.rule!r}"


def check_proof(proof: Proof, logic: Iterable | None = None) -> ProofVerdict:
    schemas = resolve_logic(proof.logic if logic is None else logic)
    done = []
    for i, step in enumerate(proof.steps):
        got = _derive(i, step, done, schemas)
        if isinstance(got, str):
            return ProofVerdict(False, i, got, tuple(done))
        if step.formula is not None and not alpha_equal(_core(step.formula), got):
            return ProofVerdict(False, i, "stated formula differs from the derived one",
                                tuple(done))
        done.append(got)
    if not done:
        return ProofVerdict(False, None, "empty proof")
    if not alpha_equal(done[-1], _core(proof.conclusion)):
        return ProofVerdict(False, len(done) - 1, "last step is not the conclusion", tuple(done))
    return ProofVerdict(True, None, "", tuple(done))


def proof_from_json(data) -> Proof:
    try:
        steps = []
        for raw in data["steps"]:
            steps.append(Step(
                rule=raw["rule"],
                formula=parse(raw["formula"]) if raw.get("formula") else None,
                schema=raw.get("schema"),
                premises=tuple(raw.get("from", ())),
                var=raw.get("var"),
                body=parse(raw["body"]) if raw.get("body") else None,
            ))
        return Proof(tuple(steps), parse(data["conclusion"]),
                     tuple(data.get("logic", ("Taut", "K", "W", "Fix"))))
    except (KeyError, TypeError) as exc:
        raise ProofFormatError(f"malformed proof: {exc}") from exc


def load_proof(path) -> Proof:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProofFormatError(str(exc)) from exc
    return proof_from_json(data)


# ---------------------------------------------------------------- soundness fuzzing

# propositional shapes over metavariables a, b, c
_TAUT_SHAPES = [parse(s) for s in (
    "a -> (b -> a)",
    "(a -> (b -> c)) -> ((a -> b) -> (a -> c))",
    "(~a -> ~b) -> (b -> a)",
    "a | ~a",
    "a & b -> a",
    "a -> a | b",
    "~(a & ~a)",
    "(a -> b) & (b -> c) -> (a -> c)",
    "a <-> ~~a",
    "(a & b) | c <-> (a | c) & (b | c)",
)]


def _instantiate(template, fill):
    return substitute(_core(template), fill)


def random_instance(rng: random.Random, schema: Schema, size: int = 4,
                    atoms=("p", "q", "r")) -> Formula:
    """A random core instance of ``schema``."""
    if schema.name == "Fix" and schema.template is None:
        theta = random_theta(rng, rng.randint(1, size + 1), "X", atoms)
        nu = Nu("X", theta)
        return normalize(implies(nu, substitute(normalize(theta), {"X": normalize(nu)})))
    if schema.name == "Taut" and schema.template is None:
        shape = rng.choice(_TAUT_SHAPES)
        fill = {m: normalize(random_formula(rng, rng.randint(1, size), atoms))
                for m in ("a", "b", "c")}
        return _instantiate(shape, fill)
    metas = sorted(v for v in free_vars(schema.core) if v[:1].islower())
    fill = {m: normalize(random_formula(rng, rng.randint(1, size), atoms)) for m in metas}
    return _instantiate(schema.template, fill)


@dataclass
class FuzzReport:
    trials: int
    frame_class: str
    seed: int
    instances: dict = field(default_factory=dict)     # schema -> count
    failures: list = field(default_factory=list)
    rule_checks: dict = field(default_factory=dict)   # rule -> applicable checks
    rule_failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and not self.rule_failures

    def to_json(self):
        return {
            "trials": self.trials, "frameClass": self.frame_class, "seed": self.seed,
            "instances": self.instances, "failures": self.failures,
            "ruleChecks": self.rule_checks, "ruleFailures": self.rule_failures,
        }


def _valid_in(model, f):
    return eval_mask(model, f) == model.frame.full


def soundness_fuzz(logic: Sequence, frame_class, trials: int, max_worlds: int, seed: int = 0,
                   models_per_trial: int = 3, formula_size: int = 4,
                   check_rules: bool = True, first_trial: int = 0) -> FuzzReport:
    """Evaluate random schema instances on random frames of ``frame_class``.

    Trial ``t`` draws everything from its own generator seeded with
    ``(seed, t)``, so any failure can be replayed alone.
    """
    schemas = list(resolve_logic(logic).values())
    cls = FrameClass(frame_class)
    rep = FuzzReport(trials, cls.value, seed)
    atoms = ("p", "q", "r")
    for t in range(first_trial, first_trial + trials):
        rng = random.Random(f"{seed}:{t}")
        schema = schemas[t % len(schemas)]
        f = random_instance(rng, schema, formula_size, atoms)
        rep.instances[schema.name] = rep.instances.get(schema.name, 0) + 1
        models = [random_model(rng, cls, max_worlds, atoms) for _ in range(models_per_trial)]
        for mdl in models:
            bad = mdl.frame.full & ~eval_mask(mdl, f)
            if bad:
                rep.failures.append({
                    "trial": t, "schema": schema.name, "formula": to_text(f),
                    "model": model_to_json(mdl), "world": mdl.names[(bad & -bad).bit_length() - 1],
                })
                break
        if check_rules:
            _rule_trial(rng, t, models, atoms, formula_size, rep)
    return rep


def _rule_trial(rng, t, models, atoms, size, rep):
    rule = ("MP", "Nec", "Induction")[t % 3]
    rep.rule_checks.setdefault(rule, 0)
    if rule == "MP":
        a = normalize(random_formula(rng, size, atoms))
        b = normalize(random_formula(rng, size, atoms))
        premises, conclusion = [a, _core(implies(a, b))], b
    elif rule == "Nec":
        a = normalize(random_formula(rng, size, atoms))
        premises, conclusion = [a], box(a)
    else:
        theta = normalize(random_theta(rng, size, "X", atoms))
        phi = normalize(random_formula(rng, size, atoms))
        premises = [_core(implies(phi, substitute(theta, {"X": phi})))]
        conclusion = _core(implies(phi, Nu("X", theta)))
    for mdl in models:
        if all(_valid_in(mdl, p) for p in premises):
            rep.rule_checks[rule] += 1
            if not _valid_in(mdl, conclusion):
                rep.rule_failures.append({"trial": t, "rule": rule, "conclusion": to_text(conclusion),
                                          "model": model_to_json(mdl)})
