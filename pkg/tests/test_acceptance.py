"""Acceptance suite. Each test carries a `criterion` marker and the terminal
summary prints one PASS/FAIL line per criterion.

The (2,2) exhaustive sweeps are shared through a module fixture: one audited
run plus three repeats (same thread count, 4 and 8 workers) whose catalogues
are hashed and compared byte for byte.
"""
import hashlib
import itertools
import random
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from genpoly.boolean_fn import BooleanFunction, make_and, make_or, make_xor, point_signs
from genpoly.classifier import classify, reconstruct
from genpoly.enumerator import enumerate_exhaustive
from genpoly.errors import DomainError
from genpoly.fourier import (
    MultilinearPoly,
    affine_shift,
    evaluate,
    evaluate_cube,
    expand,
    inclusion_maximal_sets,
    parseval_norm_sq,
    shift,
)
from genpoly.generator import (
    PROFILES,
    Deg2Params,
    generate,
    generate_deg2_multilinear,
    generated_kappas,
    sample_deg2_params,
    sample_params,
)
from genpoly.polymorphism import (
    PolymorphismInstance,
    check_fourier,
    check_pointwise,
    kappa_selection,
    left_coefficients,
    left_values,
    right_coefficients,
    right_values,
)

# passing-tuple counts from scripts/freeze_counts.py (direct evaluation, no join)
FROZEN_COUNTS = {(1, 1): 80, (1, 2): 2688, (2, 1): 2688, (2, 2): 433152}

C1 = (1, "uniform XOR/AND/OR instances pass both checkers")
C2 = (2, "pointwise and Fourier checkers agree")
C3 = (3, "every passing tuple classifies and round-trips")
C4 = (4, "generated instances pass and round-trip")
C5 = (5, "Fourier suite")
C6 = (6, "kappa selection recovers generator shifts")
C7 = (7, "degree-2 multilinear family")
C8 = (8, "catalogues are deterministic")


def uniform(n, m, make):
    return PolymorphismInstance(n, m, make(n), [make(n)] * m, make(m), [make(m)] * n)


def all_functions(arity):
    return [BooleanFunction(arity, t) for t in range(1 << (1 << arity))]


def random_instance(rng, n, m):
    fn = lambda k: BooleanFunction(k, rng.getrandbits(1 << k))  # noqa: E731
    return PolymorphismInstance(n, m, fn(n), [fn(n) for _ in range(m)], fn(m), [fn(m) for _ in range(n)])


def sweep(tmp, n, m, threads, audit, tag):
    path = tmp / f"{n}x{m}-{tag}.jsonl"
    report = enumerate_exhaustive(n, m, threads=threads, catalogue=str(path), audit_fraction=audit)
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    path.unlink()
    return report, digest


@pytest.fixture(scope="module")
def sweeps_2x2(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sweeps")
    runs = {"audited": sweep(tmp, 2, 2, 1, 0.01, "audited")}
    for tag, threads in [("rerun", 1), ("threads4", 4), ("threads8", 8)]:
        runs[tag] = sweep(tmp, 2, 2, threads, 0.0, tag)
    return runs


@pytest.mark.criterion(*C1)
def test_uniform_families():
    started = time.perf_counter()
    for n, m in itertools.product(range(1, 5), repeat=2):
        for make in (make_xor, make_and, make_or):
            P = uniform(n, m, make)
            assert check_pointwise(P), (n, m, make.__name__)
            assert check_fourier(P), (n, m, make.__name__)
    elapsed = time.perf_counter() - started
    print(f"48 uniform instances in {elapsed:.3f}s")
    assert elapsed < 1.0


def side_keys(n, m):
    """Per-side keys for both checkers, over every (outer, inner-tuple) choice.

    check_pointwise compares left_values with right_values and check_fourier
    compares left_coefficients with right_coefficients, so pair counts built
    from these keys decide both checkers on all tuples at once.
    """
    z = np.arange(1 << (n * m), dtype=np.int64)
    left, right = [], []
    for f0 in all_functions(n):
        for gs in itertools.product(all_functions(m), repeat=n):
            left.append((left_values(f0, gs, m, z).tobytes(), left_coefficients(f0, gs, m).tobytes()))
    for g0 in all_functions(m):
        for fs in itertools.product(all_functions(n), repeat=m):
            right.append((right_values(g0, fs, n, z).tobytes(), right_coefficients(g0, fs, n).tobytes()))
    return left, right


def pair_count(left, right):
    lc, rc = Counter(left), Counter(right)
    return sum(c * rc[k] for k, c in lc.items())


@pytest.mark.criterion(*C2)
def test_checkers_agree_exhaustively_at_2x2():
    started = time.perf_counter()
    left, right = side_keys(2, 2)
    by_values = pair_count([k[0] for k in left], [k[0] for k in right])
    by_coeffs = pair_count([k[1] for k in left], [k[1] for k in right])
    by_both = pair_count(left, right)
    elapsed = time.perf_counter() - started
    print(f"(2,2): {by_values} pointwise, {by_coeffs} Fourier, {by_both} both, {elapsed:.1f}s")
    # the checkers agree on every tuple iff no pair is accepted by only one of them
    assert by_values == by_both == by_coeffs
    assert by_values == FROZEN_COUNTS[(2, 2)]
    assert elapsed < 600


@pytest.mark.criterion(*C2)
def test_checkers_agree_on_direct_calls():
    rng = random.Random(2)
    verdicts = Counter()
    for _ in range(2000):
        P = random_instance(rng, 2, 2)
        verdict = check_pointwise(P)
        assert check_fourier(P) == verdict
        verdicts[verdict] += 1
    # random tuples almost never pass, so also feed generated ones
    for seed in range(500):
        P = generate(sample_params(seed, 2, 2, PROFILES[seed % len(PROFILES)]))
        assert check_pointwise(P) and check_fourier(P)
    assert verdicts[False] > 0


@pytest.mark.criterion(*C2)
def test_checkers_agree_on_random_3x3():
    rng = random.Random(3)
    passing = 0
    for _ in range(10_000):
        P = random_instance(rng, 3, 3)
        verdict = check_pointwise(P)
        assert check_fourier(P) == verdict
        passing += verdict
    print(f"(3,3): {passing} of 10000 random tuples pass")


@pytest.mark.criterion(*C3)
@pytest.mark.parametrize("shape", [(1, 1), (1, 2), (2, 1)])
def test_small_sweeps_classify(shape):
    report = enumerate_exhaustive(*shape, audit_fraction=1.0)
    print(report.to_json())
    assert report.passing == FROZEN_COUNTS[shape]
    assert report.ok() and report.classified == report.passing
    assert report.audited == report.scanned


@pytest.mark.criterion(*C3)
def test_2x2_sweep_classifies(sweeps_2x2):
    report, _ = sweeps_2x2["audited"]
    print({k: v for k, v in report.to_json().items() if k != "failures"})
    assert report.passing == FROZEN_COUNTS[(2, 2)]
    assert report.classification_failures == 0 and report.roundtrip_failures == 0
    assert report.classified == report.passing
    assert report.audited > 0 and report.audit_mismatches == 0


@pytest.mark.criterion(*C4)
def test_generator_pipeline():
    started = time.perf_counter()
    done = skipped = 0
    shapes = [(2, 2), (3, 3), (4, 3)]
    for seed in range(10_000):
        profile = PROFILES[seed % len(PROFILES)]
        shape = shapes[(seed // len(PROFILES)) % len(shapes)]
        try:
            params = sample_params(seed, *shape, profile)
        except DomainError:
            skipped += 1
            continue
        P = generate(params)
        assert check_pointwise(P) and check_fourier(P), params.dumps()
        form = classify(P)
        assert form == params.form, params.dumps()
        assert reconstruct(form) == P
        done += 1
    elapsed = time.perf_counter() - started
    print(f"{done} generated, {skipped} shapes too small for profile, {elapsed:.1f}s")
    assert done == 10_000
    assert elapsed < 300


def random_poly(rng, max_arity=6):
    n = rng.randint(1, max_arity)
    coeffs = {rng.randrange(1 << n): Fraction(rng.randint(-9, 9), rng.randint(1, 8)) for _ in range(rng.randint(0, 10))}
    return MultilinearPoly(n, coeffs)


def random_rational(rng, nonzero=False):
    while True:
        q = Fraction(rng.randint(-6, 6), rng.randint(1, 5))
        if q or not nonzero:
            return q


@pytest.mark.criterion(*C5)
def test_fourier_suite():
    started = time.perf_counter()
    rng = random.Random(5)
    # every function of arity at most 4
    for n in range(5):
        for f in all_functions(n):
            p = expand(f)
            assert evaluate_cube(p) == [f.eval(u) for u in range(1 << n)]
            u = rng.randrange(1 << n)
            assert evaluate(p, point_signs(u, n)) == f.eval(u)
            assert parseval_norm_sq(p) == 1
            if n <= 3:
                assert all(evaluate(p, point_signs(u, n)) == f.eval(u) for u in range(1 << n))
    # random functions up to arity 10
    for _ in range(10_000):
        n = rng.randint(0, 10)
        f = BooleanFunction(n, rng.getrandbits(1 << n))
        p = expand(f)
        assert evaluate_cube(p) == [f.eval(u) for u in range(1 << n)]
        assert parseval_norm_sq(p) == 1
    # shifting by k then by -k is the identity
    for _ in range(1000):
        p = random_poly(rng)
        k = [random_rational(rng) for _ in range(p.arity)]
        assert shift(shift(p, k), [-x for x in k]) == p
    # affine shifts keep the inclusion-maximal sets of the support
    for _ in range(1000):
        n = rng.randint(1, 6)
        p = expand(BooleanFunction(n, rng.getrandbits(1 << n)))
        scales = [random_rational(rng, nonzero=True) for _ in range(n)]
        offsets = [random_rational(rng) for _ in range(n)]
        assert inclusion_maximal_sets(affine_shift(p, scales, offsets)) == inclusion_maximal_sets(p)
    elapsed = time.perf_counter() - started
    print(f"Fourier suite in {elapsed:.1f}s")
    assert elapsed < 120


@pytest.mark.criterion(*C6)
def test_kappa_selection():
    # dictator-free profiles: every g_i and f_j has degree at least 2
    profiles = ("xor-only", "andor-only", "mixed")
    shapes = [(2, 2), (3, 3), (4, 3), (3, 4)]
    for seed in range(1000):
        params = sample_params(seed, *shapes[seed % len(shapes)], profiles[seed % len(profiles)])
        P = generate(params)
        assert all(f.degree() >= 2 for f in P.fs) and all(g.degree() >= 2 for g in P.gs)
        expected = generated_kappas(params.form)
        assert len(expected) == sum(len(b.cells) for b in params.form.blocks)
        assert kappa_selection(P) == expected, params.dumps()


def grid_point(rng, n, m):
    return [[random_rational(rng) for _ in range(m)] for _ in range(n)]


def composed_at(fam, z):
    """Both sides evaluated directly from the component polynomials."""
    n = len(z)
    lhs = evaluate(fam.f0, [evaluate(g, z[i]) for i, g in enumerate(fam.gs)])
    rhs = evaluate(fam.g0, [evaluate(f, [z[i][j] for i in range(n)]) for j, f in enumerate(fam.fs)])
    return lhs, rhs


@pytest.mark.criterion(*C7)
def test_deg2_random_families():
    rng = random.Random(7)
    for seed in range(100):
        n, m = rng.randint(1, 3), rng.randint(1, 3)
        fam = generate_deg2_multilinear(sample_deg2_params(seed, n, m))
        assert fam.left == fam.right == fam.expected
        for _ in range(3):
            z = grid_point(rng, n, m)
            lhs, rhs = composed_at(fam, z)
            assert lhs == rhs == evaluate(fam.left, [v for row in z for v in row])


@pytest.mark.criterion(*C7)
@pytest.mark.parametrize("shape", [(1, 1), (2, 2), (2, 3), (3, 3)])
def test_deg2_full_block(shape):
    n, m = shape
    rng = random.Random(f"full:{n}:{m}")
    cells = tuple((i, j) for i in range(n) for j in range(m))
    kappa = {c: random_rational(rng) for c in cells}
    K, L = random_rational(rng, nonzero=True), random_rational(rng)
    params = Deg2Params(
        n, m, (cells,),
        tuple(random_rational(rng, True) for _ in range(m)), tuple(random_rational(rng) for _ in range(m)),
        tuple(random_rational(rng, True) for _ in range(n)), tuple(random_rational(rng) for _ in range(n)),
        (K,), (L,), kappa, MultilinearPoly(1, {1: 1}),
    )
    fam = generate_deg2_multilinear(params)
    # K * prod (z_ij + k_ij) + L, built directly
    target = MultilinearPoly.constant(n * m, K)
    for (i, j), k in kappa.items():
        target = target * MultilinearPoly(n * m, {1 << (i * m + j): 1, 0: k})
    target = target + MultilinearPoly.constant(n * m, L)
    assert fam.left == fam.right == target


@pytest.mark.criterion(*C8)
def test_1x1_catalogues_identical(tmp_path):
    digests = {sweep(tmp_path, 1, 1, t, 0.0, f"{t}-{k}")[1] for k in range(2) for t in (1, 4, 8)}
    assert len(digests) == 1


@pytest.mark.criterion(*C8)
def test_2x2_catalogues_identical(sweeps_2x2):
    digests = {tag: d for tag, (_, d) in sweeps_2x2.items()}
    print(digests)
    assert len(set(digests.values())) == 1
    assert all(r.passing == FROZEN_COUNTS[(2, 2)] for r, _ in sweeps_2x2.values())
