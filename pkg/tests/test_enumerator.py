import json

import numpy as np
import pytest
from hypothesis import given

from genpoly.boolean_fn import make_and
from genpoly.classifier import CanonicalForm, reconstruct
from genpoly.errors import ResourceError
from genpoly.enumerator import (
    batch_check,
    enumerate_exhaustive,
    enumerate_sampled,
    passing_count,
    table_bits_needed,
)
from genpoly.polymorphism import PolymorphismInstance, check_pointwise

from conftest import instances

# frozen by scripts/freeze_counts.py (direct evaluation, independent of the join)
FROZEN = {(0, 0): 2, (1, 0): 8, (0, 1): 8, (1, 1): 80, (1, 2): 2688, (2, 1): 2688}


def test_table_bits():
    assert table_bits_needed(2, 2) == 24
    assert table_bits_needed(1, 1) == 8


@pytest.mark.parametrize("shape", [(1, 1), (1, 2), (2, 1)])
def test_passing_counts(shape):
    assert passing_count(*shape) == FROZEN[shape]


def test_trivial_grids():
    # n = 0 means f0 is a constant and there are no g_i
    assert enumerate_exhaustive(0, 0).passing == FROZEN[(0, 0)]
    assert enumerate_exhaustive(1, 0).passing == FROZEN[(1, 0)]
    assert enumerate_exhaustive(0, 1).passing == FROZEN[(0, 1)]


def test_exhaustive_one_by_one(tmp_path):
    path = tmp_path / "cat.jsonl"
    report = enumerate_exhaustive(1, 1, catalogue=str(path))
    assert report.scanned == 256 and report.passing == 80 and report.ok()
    lines = path.read_text().splitlines()
    assert len(lines) == report.passing
    keys = [json.loads(line)["instance"] for line in lines]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    for line in lines:
        rec = json.loads(line)
        P = reconstruct(CanonicalForm.from_json(rec["form"]))
        assert P.key() == rec["instance"] and check_pointwise(P)


def test_rerun_and_threads_identical(tmp_path):
    outs = []
    for k, threads in enumerate((1, 1, 3)):
        path = tmp_path / f"c{k}.jsonl"
        enumerate_exhaustive(1, 2, threads=threads, catalogue=str(path))
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_budget_exceeded():
    with pytest.raises(ResourceError, match="sampled"):
        enumerate_exhaustive(3, 2)
    with pytest.raises(ResourceError):
        enumerate_exhaustive(1, 1, bit_budget=7)


def test_sampled_mode(tmp_path):
    path = tmp_path / "s.jsonl"
    report = enumerate_sampled(3, 3, 20000, seed=2, generated=300, catalogue=str(path))
    assert report.ok()
    assert report.passing >= 300
    assert report.audited > 0 and report.audit_mismatches == 0
    again = tmp_path / "s2.jsonl"
    enumerate_sampled(3, 3, 20000, seed=2, generated=300, catalogue=str(again))
    assert path.read_bytes() == again.read_bytes()


def test_sampled_size_limit():
    with pytest.raises(ResourceError):
        enumerate_sampled(5, 4, 10)


@given(instances(max_n=3, max_m=3))
def test_batch_check_matches_pointwise(P):
    verdict = batch_check(
        P.n, P.m,
        np.array([P.f0.table], dtype=np.uint64),
        np.array([[f.table for f in P.fs]], dtype=np.uint64).reshape(1, P.m),
        np.array([P.g0.table], dtype=np.uint64),
        np.array([[g.table for g in P.gs]], dtype=np.uint64).reshape(1, P.n),
    )
    assert bool(verdict[0]) == check_pointwise(P)


def test_batch_check_on_passing_instance():
    P = PolymorphismInstance(2, 3, make_and(2), [make_and(2)] * 3, make_and(3), [make_and(3)] * 2)
    verdict = batch_check(
        2, 3, np.array([P.f0.table], dtype=np.uint64), np.array([[f.table for f in P.fs]], dtype=np.uint64),
        np.array([P.g0.table], dtype=np.uint64), np.array([[g.table for g in P.gs]], dtype=np.uint64),
    )
    assert verdict[0]
