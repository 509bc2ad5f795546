"""The twelve acceptance criteria, each reported as one PASS/FAIL line."""

import random
import time

from acceptance_log import record
from oracles import gfp_by_subsets, theorem_instances
from topomu.decision import SearchConfig, bounded_sat, bounded_valid, enumerate_frames
from topomu.frames import FrameClass, check_frame_class, fmp_bound, irreflexive_unfold
from topomu.hugeint import HugeInt
from topomu.morphisms import (check_p_morphism, compute_bisimilarity, preimage, quotient_model,
                              sigma_atoms)
from topomu.proofs import soundness_fuzz
from topomu.randgen import random_formula, random_frame, random_model, random_theta
from topomu.semantics import ModelBundle, eval_mask, gfp_trace
from topomu.syntax import Nu, closure_set, normalize, parse
from topomu.tangle import SEPARATOR, build_spine, expressivity_experiment
from topomu.topology import build_lazy_space, lazy_verify


def test_01_spine_evaluation():
    start = time.perf_counter()
    m = build_spine(50)
    value = eval_mask(m, normalize(SEPARATOR))
    elapsed = time.perf_counter() - start
    got = {w for w in range(m.size) if value >> w & 1}
    ok = got == {51, 52} and elapsed < 1.0
    record(1, "spine evaluation", ok, f"value={sorted(got)} in {elapsed:.3f}s")
    assert ok


def test_02_03_expressivity_gap_and_parity():
    start = time.perf_counter()
    rep = expressivity_experiment(30, 5)
    elapsed = time.perf_counter() - start
    agree = rep.formula_count - len(rep.disagreements)
    gap = (not rep.disagreements and rep.separator_at_omega != rep.separator_at_omega_plus2
           and elapsed < 300)
    record(2, "expressivity gap", gap,
           f"{agree}/{rep.formula_count} formulas agree at 30 and 32; separator "
           f"{int(rep.separator_at_omega)} vs {int(rep.separator_at_omega_plus2)} ({elapsed:.2f}s)")
    parity = rep.parity_violations == 0
    record(3, "parity lemma", parity, f"{rep.parity_violations} violations")
    assert gap and parity


def test_04_soundness_fuzz():
    start = time.perf_counter()
    runs = [(["Taut"], "WK4"), (["K"], "WK4"), (["W"], "WK4"), (["Fix"], "WK4"),
            (["T0Ax"], "WK4T0"), (["FourAx"], "K4")]
    failures = 0
    parts = []
    for i, (schemas, cls) in enumerate(runs):
        rep = soundness_fuzz(schemas, cls, 10_000, 7, seed=i)
        failures += len(rep.failures) + len(rep.rule_failures)
        parts.append(f"{schemas[0]}/{cls}={len(rep.failures)}")
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 120
    record(4, "soundness fuzz", ok, f"{' '.join(parts)} ({elapsed:.1f}s)")
    assert ok


def test_05_fixpoint_theorems():
    rng = random.Random(5)
    bundles = [ModelBundle.product(enumerate_frames(FrameClass.WK4, n), ["p", "q"], 20, rng)
               for n in range(1, 6)]
    bad = 0
    for _ in range(100):
        theta = random_theta(rng, rng.randint(2, 7))
        phi, psi = random_formula(rng, rng.randint(1, 5)), random_formula(rng, rng.randint(1, 5))
        for f in theorem_instances(theta, phi, psi):
            bad += sum(not b.valid_everywhere(b.evaluate(f)) for b in bundles)
    models = sum(b.count for b in bundles)
    record(5, "fixpoint theorems", bad == 0, f"{bad} failures over {models} models x 400 instances")
    assert bad == 0


def test_06_fixpoint_laws():
    rng = random.Random(6)
    mismatches = 0
    for i in range(200):
        n = 12 if i % 4 == 0 else rng.randint(1, 12)
        m = random_model(rng, FrameClass.WK4, n, min_worlds=n)
        f = normalize(Nu("X", random_theta(rng, rng.randint(2, 9))))
        mismatches += eval_mask(m, f) != gfp_by_subsets(m, f)
    too_slow = 0
    for _ in range(1000):
        m = random_model(rng, FrameClass.WK4, 12)
        t = gfp_trace(m, Nu("X", random_theta(rng, rng.randint(2, 9))))
        too_slow += t.stabilization > m.size
    ok = mismatches == 0 and too_slow == 0
    record(6, "fixpoint laws", ok, f"{mismatches} gfp mismatches, {too_slow} slow stabilizations")
    assert ok


def test_07_morphism_invariance():
    rng = random.Random(7)
    formulas = [normalize(random_formula(rng, rng.randint(1, 8))) for _ in range(200)]
    bad_maps = bad_truth = 0
    for _ in range(500):
        m = random_model(rng, FrameClass.WK4, 8)
        q = quotient_model(m, compute_bisimilarity(m, {"p", "q"}))
        bad_maps += not check_p_morphism(q.projection, m, q.model, {"p", "q"})
        for f in formulas:
            src = eval_mask(m, f)
            tgt = eval_mask(q.model, f)
            bad_truth += src != sum(1 << w for w, b in enumerate(q.projection) if tgt >> b & 1)
    ok = bad_maps == 0 and bad_truth == 0
    record(7, "morphism invariance", ok, f"{bad_maps} bad projections, {bad_truth} truth mismatches")
    assert ok


def test_08_quotient_class_preservation():
    rng = random.Random(8)
    bad = 0
    for _ in range(500):
        m = random_model(rng, FrameClass.WK4, 8)
        sigma = closure_set(normalize(random_formula(rng, rng.randint(1, 6))))
        q = quotient_model(m, compute_bisimilarity(m, sigma), sigma_atoms(sigma))
        bad += not check_frame_class(q.model.frame, FrameClass.WK4)
    record(8, "quotient class preservation", bad == 0, f"{bad}/500 quotients not weakly transitive")
    assert bad == 0


def test_09_irreflexive_unfolding():
    rng = random.Random(9)
    formulas = [normalize(random_formula(rng, rng.randint(1, 8))) for _ in range(200)]
    bad_size = bad_sat = 0
    for _ in range(500):
        m = random_model(rng, FrameClass.WK4, 8)
        u = irreflexive_unfold(m)
        refl = sum(m.frame.reflexive(w) for w in range(m.size))
        bad_size += u.model.size != (m.size - refl) + 2 * refl
        for f in formulas:
            a, b = eval_mask(m, f), eval_mask(u.model, f)
            bad_sat += bool(a) != bool(b)
            bad_sat += preimage(u.projection, {w for w in range(m.size) if a >> w & 1}) != \
                {w for w in range(u.model.size) if b >> w & 1}
    ok = bad_size == 0 and bad_sat == 0
    record(9, "irreflexive unfolding", ok, f"{bad_size} size errors, {bad_sat} satisfaction mismatches")
    assert ok


def test_10_fmp_bound():
    first = fmp_bound(1)
    ok = first.total == 8 and list(first.per_depth) == [8]
    for s in range(1, 5):
        b = fmp_bound(s)
        base = HugeInt.of(2 ** s) * HugeInt.pow2(2 ** s)
        want = [base]
        for _ in range(1, s):
            want.append(base * HugeInt.pow2(want[-1]))
        ok &= list(b.per_depth) == want and b.depth_bound == s - 1
        total = HugeInt.of(0)
        for lv in want:
            total = total + lv
        ok &= b.total == total
        if s <= 2:
            exact = [2 ** s * 2 ** 2 ** s]
            for _ in range(1, s):
                exact.append(2 ** s * 2 ** 2 ** s * 2 ** exact[-1])
            ok &= [int(v) for v in b.per_depth] == exact
    record(10, "fmp bound", ok, "fmpBound(1)=8; recursion checked for s<=4")
    assert ok


def test_11_level_space_verification():
    rng = random.Random(11)
    start = time.perf_counter()
    counts = {"forth": 0, "back": 0, "t0": 0, "td": 0}
    violations = 0
    for cls in (FrameClass.WK4T0, FrameClass.K4):
        for i in range(100):
            f = random_frame(rng, cls, rng.randint(1, 6))
            rep = lazy_verify(build_lazy_space(f), 200, seed=i)
            violations += len(rep.violations)
            for k, v in rep.checks.items():
                counts[k] += v
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 60 and counts["t0"] > 0 and counts["td"] > 0
    record(11, "level space verification", ok,
           f"{violations} violations over {counts} ({elapsed:.1f}s)")
    assert ok


def test_12_bounded_decision():
    wk4 = SearchConfig(FrameClass.WK4, max_worlds=5)
    valid = [parse("[](p -> q) -> ([]p -> []q)"), parse("<><>p -> (p | <>p)"),
             parse("(nu X. <>(X & q)) <-> <>((nu X. <>(X & q)) & q)")]
    counter = [bool(bounded_valid(f, wk4)) for f in valid]
    tangle = bounded_sat(parse("tangle_d{T}"), SearchConfig(FrameClass.IRR_WK4, 4))
    none = bounded_sat(parse("<>T & []F"), SearchConfig(FrameClass.WK4, 4))
    ok = not any(counter) and tangle.found and tangle.model.size == 2 and not none.found
    record(12, "bounded decision", ok,
           f"counterexamples={counter}, tangle model size="
           f"{tangle.model.size if tangle else None}, unsat found={none.found}")
    assert ok
