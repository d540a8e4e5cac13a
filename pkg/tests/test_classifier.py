import dataclasses
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from genpoly.boolean_fn import BooleanFunction, make_and, make_const, make_dictator, make_xor
from genpoly.classifier import (
    AndOrForm,
    AndOrLike,
    CanonicalForm,
    Singleton,
    XorForm,
    XorLike,
    canonicalize,
    classify,
    forms_equivalent,
    match_affine_monomial,
    match_generalized_monomial,
    reconstruct,
)
from genpoly.errors import DomainError, PreconditionError, ValidationError
from genpoly.generator import PROFILES, generate, sample_params
from genpoly.polymorphism import PolymorphismInstance, check_pointwise, kappa_selection, reduce_degenerate

IDENTITY = make_dictator(1, 0)


def uniform(n, m, make):
    return PolymorphismInstance(n, m, make(n), [make(n)] * m, make(m), [make(m)] * n)


def majority3():
    return BooleanFunction.from_callable(3, lambda x: 1 if sum(x) > 0 else -1)


def test_affine_monomial_examples():
    assert match_affine_monomial(make_xor(3)) == XorForm((1,))
    assert match_affine_monomial(make_xor(3, -1)) == XorForm((-1,))
    assert match_affine_monomial(make_and(2)) == AndOrForm(-1, (-1, -1), (1,))
    assert match_affine_monomial(majority3()) is None
    with pytest.raises(PreconditionError):
        match_affine_monomial(make_const(2, 1))


def test_generalized_monomial_examples():
    # x0 * x1 * phi(x2) with phi a dictator
    f = BooleanFunction.from_callable(3, lambda x: x[0] * x[1] * x[2])
    assert match_generalized_monomial(f, (0, 1), (2,)) == XorForm((1, -1))
    # AND3 split as dep2 = {0, 1}, dep1 = {2}: phi01 is the indicator of x2 = -1
    assert match_generalized_monomial(make_and(3), (0, 1), (2,)) == AndOrForm(-1, (-1, -1), (0, 1))
    # parity of x0, x1 ANDed with x2 fits neither case
    mixed = BooleanFunction.from_callable(3, lambda x: -1 if x[0] * x[1] == -1 and x[2] == -1 else 1)
    assert match_generalized_monomial(mixed, (0, 1), (2,)) is None
    with pytest.raises(DomainError):
        match_generalized_monomial(make_and(3), (0,), (2,))


def test_classify_all_xor():
    form = classify(uniform(2, 2, make_xor))
    (block,) = form.blocks
    assert isinstance(block, XorLike)
    assert form.h == IDENTITY
    assert all(v == (1,) for _, v in block.row_fns + block.col_fns)


def test_classify_identity_singleton():
    x = make_dictator(1, 0)
    form = classify(PolymorphismInstance(1, 1, x, [x], x, [x]))
    assert form.blocks == (Singleton(0, 0, 1, 1, 1, 1),)
    assert form.h == IDENTITY


def two_block_form():
    xor_block = XorLike(((0, 0), (0, 1), (1, 0), (1, 1)), ((0, (1,)), (1, (1,))), ((0, (1,)), (1, (1,))))
    andor_block = AndOrLike(
        ((2, 2), (2, 3), (3, 2), (3, 3)),
        ((2, -1), (3, 1)), ((2, 1), (3, -1)),
        ((2, 2, 1), (2, 3, -1), (3, 2, -1), (3, 3, 1)),
        ((2, (1,)), (3, (1,))), ((2, (1,)), (3, (1,))), (), (),
    )
    return CanonicalForm(4, 4, (xor_block, andor_block), make_xor(2))


def test_classify_two_block_instance():
    form = two_block_form()
    P = reconstruct(form)
    assert check_pointwise(P)
    got = classify(P)
    assert [type(b) for b in got.blocks] == [XorLike, AndOrLike]
    assert got == canonicalize(form)
    assert got.h == make_xor(2)


def test_classify_rejects_non_polymorphism():
    P = PolymorphismInstance(2, 2, make_xor(2), [make_xor(2)] * 2, make_and(2), [make_and(2)] * 2)
    with pytest.raises(PreconditionError):
        classify(P)


def test_singleton_sign_mismatch_is_invalid():
    form = CanonicalForm(1, 1, (Singleton(0, 0, 1, -1, 1, 1),), IDENTITY)
    with pytest.raises(ValidationError):
        reconstruct(form)


def test_unit_xor_block_is_pure_xor():
    block = XorLike(((0, 0), (0, 1), (1, 0), (1, 1)), ((0, (1,)), (1, (1,))), ((0, (1,)), (1, (1,))))
    assert reconstruct(CanonicalForm(2, 2, (block,), IDENTITY)) == uniform(2, 2, make_xor)


def test_embedded_function_must_be_zero_one_valued():
    form = two_block_form()
    bad_block = dataclasses.replace(form.blocks[1], row_fns=((2, (2,)), (3, (1,))))
    with pytest.raises(ValidationError):
        reconstruct(CanonicalForm(4, 4, (form.blocks[0], bad_block), make_xor(2)))


def test_h_must_read_every_block():
    form = two_block_form()
    with pytest.raises(ValidationError):
        reconstruct(CanonicalForm(4, 4, form.blocks, make_dictator(2, 0)))


def test_orientation_absorbed_into_h():
    block = XorLike(((0, 0), (0, 1), (1, 0), (1, 1)), ((0, (1,)), (1, (1,))), ((0, (1,)), (1, (1,))), -1)
    form = CanonicalForm(2, 2, (block,), IDENTITY)
    canon = canonicalize(form)
    assert canon.blocks[0].orientation == 1
    assert canon.h == IDENTITY.negate()
    assert reconstruct(canon) == reconstruct(form)
    assert canonicalize(canon) == canon


def test_single_row_andor_stored_as_xor():
    # one row of two cells: an AND/OR of the two column dictators
    block = AndOrLike(((0, 0), (0, 1)), ((0, -1),), (), (), ((0, (1,)),), (), (), ((0, 1), (1, 1)))
    with pytest.raises(ValidationError):
        block.validate(1, 2)
    good = AndOrLike(((0, 0), (0, 1)), ((0, -1),), (), (), ((0, (1, 0, 0, 0)),), (), (), ((0, 1), (1, 1)))
    form = CanonicalForm(1, 2, (good,), IDENTITY)
    canon = canonicalize(form)
    assert isinstance(canon.blocks[0], XorLike)
    assert reconstruct(canon) == reconstruct(form)


def test_json_roundtrip_and_derived_fields():
    form = canonicalize(two_block_form())
    text = form.dumps()
    assert CanonicalForm.loads(text) == form
    d = form.to_json()
    d["degenerate"]["I"] = [0]
    with pytest.raises(ValidationError):
        CanonicalForm.from_json(d)


def test_degenerate_slice_is_preserved():
    params = sample_params(4, 4, 3, "with-degenerates")
    P = generate(params)
    form = classify(P)
    assert form.const_f
    red = reduce_degenerate(reconstruct(form))
    assert red.f0_slice == P.f0.restrict_many(dict(form.const_g))
    assert red.g0_slice == P.g0.restrict_many(dict(form.const_f))


def test_kappa_shared_between_row_and_column():
    P = reconstruct(two_block_form())
    assert kappa_selection(P) == {
        (0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 0,
        (2, 2): 1, (2, 3): -1, (3, 2): -1, (3, 3): 1,
    }


def test_exhaustive_small_grids_classify():
    for n, m in [(1, 1), (1, 2), (2, 1)]:
        count = 0
        for code in range(1 << ((m + 1) * (1 << n) + (n + 1) * (1 << m))):
            bits = code
            tables = []
            for arity in [n] * (m + 1) + [m] * (n + 1):
                size = 1 << (1 << arity)
                tables.append(BooleanFunction(arity, bits % size))
                bits //= size
            P = PolymorphismInstance(n, m, tables[0], tables[1:m + 1], tables[m + 1], tables[m + 2:])
            if check_pointwise(P):
                count += 1
                assert reconstruct(classify(P, verify_input=False)) == P
        assert count > 0


@given(st.sampled_from(PROFILES), st.integers(0, 10**6), st.sampled_from([(2, 2), (3, 3), (4, 3), (3, 4)]))
def test_generate_classify_roundtrip(profile, seed, shape):
    try:
        params = sample_params(seed, *shape, profile)
    except DomainError:
        return
    P = generate(params)
    form = classify(P)
    assert form == params.form
    assert reconstruct(form) == P
    assert canonicalize(form) == form


@given(st.sampled_from(PROFILES), st.integers(0, 10**6), st.randoms(use_true_random=False))
def test_canonical_form_ignores_presentation(profile, seed, rnd):
    params = sample_params(seed, 3, 3, profile)
    form = params.form
    k = len(form.blocks)
    # flip some orientations and shuffle the block order; the instance stays the same
    blocks, h = list(form.blocks), form.h
    for ell in range(k):
        if rnd.random() < 0.5:
            blocks[ell] = blocks[ell].flipped()
            h = BooleanFunction.from_callable(
                k, lambda x, h=h, ell=ell: h.eval_signs([-v if t == ell else v for t, v in enumerate(x)])
            )
    order = list(range(k))
    rnd.shuffle(order)
    inv = {src: pos for pos, src in enumerate(order)}
    shuffled_h = BooleanFunction.from_callable(k, lambda x: h.eval_signs([x[inv[t]] for t in range(k)]))
    messy = CanonicalForm(
        form.n, form.m, tuple(blocks[t] for t in order), shuffled_h,
        form.const_f, form.const_g, form.free_f, form.free_g, form.f0_off_slice, form.g0_off_slice,
    )
    assert reconstruct(messy) == reconstruct(form)
    assert canonicalize(messy) == form
    assert forms_equivalent(messy, form)


@given(st.integers(0, 10**6))
def test_extracted_h_is_boolean_and_blocks_uniform(seed):
    P = generate(sample_params(seed, 4, 4, "mixed"))
    form = classify(P)
    assert form.h.arity == len(form.blocks)
    for b in form.blocks:
        if isinstance(b, XorLike):
            assert all(match_affine_monomial(P.gs[i]) in (XorForm((1,)), XorForm((-1,)))
                       for i in b.layout.rows if not b.layout.row_dep1[i])
        elif isinstance(b, AndOrLike):
            assert all(isinstance(match_affine_monomial(P.gs[i]), AndOrForm)
                       for i in b.layout.rows2 if not b.layout.row_dep1[i])


def test_random_instances_rarely_pass_but_always_classify():
    rng = random.Random(11)
    for _ in range(3000):
        n, m = rng.randint(1, 3), rng.randint(1, 3)
        P = PolymorphismInstance(
            n, m, BooleanFunction(n, rng.getrandbits(1 << n)),
            [BooleanFunction(n, rng.getrandbits(1 << n)) for _ in range(m)],
            BooleanFunction(m, rng.getrandbits(1 << m)),
            [BooleanFunction(m, rng.getrandbits(1 << m)) for _ in range(n)],
        )
        if check_pointwise(P):
            assert reconstruct(classify(P)) == P
