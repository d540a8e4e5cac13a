"""Exhaustive and sampled enumeration of Boolean generalized polymorphisms.

The left side f0(g_1, ..., g_n) over all grid points depends only on
(f0, g_1..g_n) and the right side only on (g0, f_1..f_m). Every tuple is
decided by comparing one left value vector with one right value vector, so
the exhaustive scan is a join on those vectors: passing tuples are exactly
the pairs with equal vectors. Each passing tuple is then classified and
rebuilt from its canonical form.
"""
from __future__ import annotations

import json
import multiprocessing
import os
import random
import shutil
import tempfile
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .boolean_fn import BooleanFunction
from .classifier import classify
from .errors import ClassificationFailure, ConsistencyError, DomainError, ResourceError
from .errors import ValidationError
from .generator import PROFILES, generate, sample_params
from .polymorphism import PolymorphismInstance, check_naive, check_pointwise

DEFAULT_BIT_BUDGET = 24  # (m+1) 2^n + (n+1) 2^m at n = m = 2


@dataclass
class EnumReport:
    n: int
    m: int
    mode: str
    scanned: int = 0
    passing: int = 0
    classified: int = 0
    classification_failures: int = 0
    roundtrip_failures: int = 0
    audited: int = 0
    audit_mismatches: int = 0
    wall_time: float = 0.0
    catalogue: Optional[str] = None
    failures: list = field(default_factory=list)

    def ok(self) -> bool:
        return (
            self.classified == self.passing
            and self.classification_failures == 0
            and self.roundtrip_failures == 0
            and self.audit_mismatches == 0
        )

    def to_json(self) -> dict:
        d = asdict(self)
        d["failures"] = d["failures"][:20]
        return d


def table_bits_needed(n: int, m: int) -> int:
    return (m + 1) * (1 << n) + (n + 1) * (1 << m)


# value vectors


def _grid_rows(n: int, m: int) -> np.ndarray:
    z = np.arange(1 << (n * m), dtype=np.int64)
    rows = np.zeros((n, z.size), dtype=np.int64)
    for i in range(n):
        rows[i] = (z >> (i * m)) & ((1 << m) - 1)
    return rows


def _grid_cols(n: int, m: int) -> np.ndarray:
    z = np.arange(1 << (n * m), dtype=np.int64)
    cols = np.zeros((m, z.size), dtype=np.int64)
    for j in range(m):
        for i in range(n):
            cols[j] |= ((z >> (i * m + j)) & 1) << i
    return cols


def _all_bits(arity: int) -> np.ndarray:
    """Row t holds the truth-table bits of the function with table t."""
    size = 1 << arity
    t = np.arange(1 << size, dtype=np.int64)[:, None]
    return ((t >> np.arange(size, dtype=np.int64)) & 1).astype(np.int64)


def _side_vectors(outer_arity: int, inner_arity: int, args: np.ndarray) -> np.ndarray:
    """Packed value vectors of outer(inner_0(arg_0), ...) for every outer and inner tuple.

    args has one row per inner function, holding that inner's input index at
    every grid point. Result shape is (#outer, #inner tuples); bit z is the
    value at grid point z. Inner tuples are ordered lexicographically with
    inner_0 most significant.
    """
    count_inner = args.shape[0]
    inner_bits = _all_bits(inner_arity)  # (#inner fns, 2^inner_arity)
    n_fns = inner_bits.shape[0]
    npts = args.shape[1]
    point_index = np.zeros((n_fns ** count_inner, npts), dtype=np.int64)
    for combo_pos in range(count_inner):
        # value of inner function number `code` at its argument, for every code
        vals = inner_bits[:, args[combo_pos]]  # (n_fns, npts)
        reps = n_fns ** (count_inner - 1 - combo_pos)
        tiles = n_fns ** combo_pos
        expanded = np.repeat(np.tile(vals, (tiles, 1)), reps, axis=0)
        point_index |= expanded << combo_pos
    outer_bits = _all_bits(outer_arity)  # (#outer, 2^outer_arity)
    values = outer_bits[:, point_index]  # (#outer, #inner tuples, npts)
    weights = (np.ones(npts, dtype=np.uint64) << np.arange(npts, dtype=np.uint64))
    return (values.astype(np.uint64) * weights).sum(axis=2, dtype=np.uint64)


def _vectors(n: int, m: int):
    """Left vectors indexed [f0, g-tuple] and right vectors indexed [g0, f-tuple]."""
    if (1 << (n * m)) > 64:
        raise ResourceError("value vectors wider than 64 grid points are not supported")
    return _side_vectors(n, m, _grid_rows(n, m)), _side_vectors(m, n, _grid_cols(n, m))


def _decode(code: int, count: int, arity: int) -> tuple:
    """Tuple of `count` functions of the given arity from a lexicographic code."""
    base = 1 << (1 << arity)
    out = []
    for _ in range(count):
        out.append(code % base)
        code //= base
    return tuple(BooleanFunction(arity, t) for t in reversed(out))


def passing_count(n: int, m: int) -> int:
    left, right = _vectors(n, m)
    lv, lc = np.unique(left, return_counts=True)
    rv, rc = np.unique(right, return_counts=True)
    common, li, ri = np.intersect1d(lv, rv, return_indices=True)
    return int(np.sum(lc[li].astype(object) * rc[ri].astype(object)))


# exhaustive scan


def _work_units(n: int, m: int) -> int:
    return (1 << (1 << n)) * (1 << (1 << n)) ** m


def _scan_range(args) -> dict:
    """Classify the passing tuples whose (f0, f-tuple) unit index lies in [start, stop)."""
    n, m, start, stop, out_path = args
    left, right = _vectors(n, m)
    n_f = right.shape[1]
    # for each f0, map a left vector to its g-tuples in ascending order
    index = []
    for f0 in range(left.shape[0]):
        buckets = {}
        for code, vec in enumerate(left[f0].tolist()):
            buckets.setdefault(vec, []).append(code)
        index.append(buckets)
    tally = {"passing": 0, "classified": 0, "classification_failures": 0,
             "roundtrip_failures": 0, "failures": []}
    sink = open(out_path, "w") if out_path else None
    try:
        for unit in range(start, stop):
            f0_code, f_code = divmod(unit, n_f)
            f0 = BooleanFunction(n, f0_code)
            fs = _decode(f_code, m, n)
            buckets = index[f0_code]
            for g0_code in range(right.shape[0]):
                codes = buckets.get(int(right[g0_code, f_code]))
                if not codes:
                    continue
                g0 = BooleanFunction(m, g0_code)
                for g_code in codes:
                    P = PolymorphismInstance(n, m, f0, fs, g0, _decode(g_code, n, m))
                    tally["passing"] += 1
                    record = _classify_into(P, tally)
                    if record and sink:
                        sink.write(record)
                        sink.write("\n")
    finally:
        if sink:
            sink.close()
    return tally


def _classify_into(P, tally: dict) -> Optional[str]:
    """Classify one passing tuple, update the tally, return its catalogue record."""
    try:
        form = classify(P, verify_input=False)
    except ClassificationFailure as exc:
        tally["classification_failures"] += 1
        tally["failures"].append({"instance": P.key(), "error": str(exc)})
        return None
    except (ConsistencyError, ValidationError) as exc:
        tally["roundtrip_failures"] += 1
        tally["failures"].append({"instance": P.key(), "error": str(exc)})
        return None
    tally["classified"] += 1
    return catalogue_record(P, form)


def catalogue_record(P: PolymorphismInstance, form) -> str:
    return json.dumps({"instance": P.key(), "form": form.to_json()}, separators=(",", ":"))


def _ranges(total: int, parts: int) -> list:
    parts = max(1, min(parts, total))
    edges = [total * k // parts for k in range(parts + 1)]
    return [(edges[k], edges[k + 1]) for k in range(parts) if edges[k] < edges[k + 1]]


def _audit(n: int, m: int, fraction: float, seed: int, report: EnumReport):
    """Re-decide a random sample of tuples with the naive and the numpy checkers."""
    if fraction <= 0:
        return
    left, right = _vectors(n, m)
    n_g, n_f = left.shape[1], right.shape[1]
    total = left.shape[0] * n_f * right.shape[0] * n_g
    rng = random.Random(seed)
    count = max(1, int(total * fraction))
    for _ in range(count):
        t = rng.randrange(total)
        t, g_code = divmod(t, n_g)
        t, g0_code = divmod(t, right.shape[0])
        f0_code, f_code = divmod(t, n_f)
        joined = bool(left[f0_code, g_code] == right[g0_code, f_code])
        P = PolymorphismInstance(
            n, m, BooleanFunction(n, f0_code), _decode(f_code, m, n),
            BooleanFunction(m, g0_code), _decode(g_code, n, m),
        )
        report.audited += 1
        if check_naive(P) != joined or check_pointwise(P) != joined:
            report.audit_mismatches += 1
            report.failures.append({"instance": P.key(), "error": "audit disagreement"})


def enumerate_exhaustive(
    n: int,
    m: int,
    threads: int = 1,
    catalogue: Optional[str] = None,
    bit_budget: int = DEFAULT_BIT_BUDGET,
    audit_fraction: float = 0.01,
    seed: int = 0,
    chunks_per_thread: int = 4,
) -> EnumReport:
    if n < 0 or m < 0:
        raise DomainError("grid sizes must be non-negative")
    need = table_bits_needed(n, m)
    if need > bit_budget:
        raise ResourceError(
            f"exhaustive ({n},{m}) needs {need} truth-table bits, budget is {bit_budget}; "
            "use sampled mode"
        )
    started = time.perf_counter()
    report = EnumReport(n, m, "exhaustive", scanned=1 << need)
    total_units = _work_units(n, m)
    threads = max(1, threads)
    # the split depends only on the data size, so output never depends on threads
    ranges = _ranges(total_units, 32)
    tmpdir = tempfile.mkdtemp(prefix="genpoly-") if catalogue else None
    try:
        jobs = [
            (n, m, a, b, os.path.join(tmpdir, f"part{k:05d}.jsonl") if tmpdir else None)
            for k, (a, b) in enumerate(ranges)
        ]
        if threads == 1:
            results = [_scan_range(job) for job in jobs]
        else:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(threads) as pool:
                results = pool.map(_scan_range, jobs, chunksize=1)
        for res in results:
            report.passing += res["passing"]
            report.classified += res["classified"]
            report.classification_failures += res["classification_failures"]
            report.roundtrip_failures += res["roundtrip_failures"]
            report.failures.extend(res["failures"])
        if catalogue:
            with open(catalogue, "w") as out:
                for job in jobs:
                    with open(job[4]) as part:
                        shutil.copyfileobj(part, out)
            report.catalogue = catalogue
    finally:
        if tmpdir:
            shutil.rmtree(tmpdir, ignore_errors=True)
    _audit(n, m, audit_fraction, seed, report)
    report.wall_time = time.perf_counter() - started
    return report


# sampled scan

SAMPLED_MAX_ARITY = 6  # truth tables must fit in 64 bits
SAMPLED_MAX_CELLS = 16
_BATCH_POINTS = 1 << 22


def batch_check(n: int, m: int, f0, fs, g0, gs) -> np.ndarray:
    """Pointwise verdicts for a batch of tuples given as uint64 truth-table arrays.

    f0 and g0 have shape (B,), fs shape (B, m), gs shape (B, n).
    """
    rows, cols = _grid_rows(n, m), _grid_cols(n, m)
    left_idx = np.zeros((f0.shape[0], rows.shape[1]), dtype=np.uint64)
    for i in range(n):
        left_idx |= ((gs[:, i:i + 1] >> rows[i].astype(np.uint64)) & np.uint64(1)) << np.uint64(i)
    right_idx = np.zeros_like(left_idx)
    for j in range(m):
        right_idx |= ((fs[:, j:j + 1] >> cols[j].astype(np.uint64)) & np.uint64(1)) << np.uint64(j)
    lhs = (f0[:, None] >> left_idx) & np.uint64(1)
    rhs = (g0[:, None] >> right_idx) & np.uint64(1)
    return np.all(lhs == rhs, axis=1)


def _random_tables(rng: np.random.Generator, arity: int, shape) -> np.ndarray:
    mask = np.uint64((1 << (1 << arity)) - 1)
    return rng.integers(0, 2**64, size=shape, dtype=np.uint64) & mask


def enumerate_sampled(
    n: int,
    m: int,
    count: int,
    seed: int = 0,
    generated: Optional[int] = None,
    catalogue: Optional[str] = None,
    audit_fraction: float = 0.01,
) -> EnumReport:
    """Check `count` uniformly random tuples plus `generated` tuples from the generator.

    Runs in one process; the random tuples are decided in numpy batches.
    """
    if n < 0 or m < 0 or count < 0:
        raise DomainError("grid sizes and counts must be non-negative")
    if n > SAMPLED_MAX_ARITY or m > SAMPLED_MAX_ARITY or n * m > SAMPLED_MAX_CELLS:
        raise ResourceError(
            f"sampled mode supports arities up to {SAMPLED_MAX_ARITY} and at most "
            f"{SAMPLED_MAX_CELLS} grid cells"
        )
    if generated is None:
        generated = max(1, count // 100)
    started = time.perf_counter()
    report = EnumReport(n, m, "sampled")
    tally = {"passing": 0, "classified": 0, "classification_failures": 0,
             "roundtrip_failures": 0, "failures": []}
    records = {}
    rng = np.random.default_rng(seed)
    audit_rng = random.Random(seed)
    batch = max(1, _BATCH_POINTS >> (n * m))
    done = 0
    while done < count:
        size = min(batch, count - done)
        f0 = _random_tables(rng, n, (size,))
        fs = _random_tables(rng, n, (size, m))
        g0 = _random_tables(rng, m, (size,))
        gs = _random_tables(rng, m, (size, n))
        verdict = batch_check(n, m, f0, fs, g0, gs)
        for b in range(size):
            audit = audit_rng.random() < audit_fraction
            if not (verdict[b] or audit):
                continue
            P = PolymorphismInstance(
                n, m, BooleanFunction(n, int(f0[b])), tuple(BooleanFunction(n, int(t)) for t in fs[b]),
                BooleanFunction(m, int(g0[b])), tuple(BooleanFunction(m, int(t)) for t in gs[b]),
            )
            if audit:
                report.audited += 1
                if check_naive(P) != bool(verdict[b]) or check_pointwise(P) != bool(verdict[b]):
                    report.audit_mismatches += 1
                    report.failures.append({"instance": P.key(), "error": "audit disagreement"})
            if verdict[b]:
                tally["passing"] += 1
                record = _classify_into(P, tally)
                if record:
                    records[P.key()] = record
        done += size
    for k in range(generated):
        profile = PROFILES[k % len(PROFILES)]
        try:
            params = sample_params(seed * 1_000_003 + k, n, m, profile)
        except DomainError:
            # profile impossible at this size, e.g. no dictator-free block fits
            params = sample_params(seed * 1_000_003 + k, n, m, "with-dictators")
        P = generate(params)
        tally["passing"] += 1
        record = _classify_into(P, tally)
        if record:
            records[P.key()] = record
    report.scanned = count + generated
    report.passing = tally["passing"]
    report.classified = tally["classified"]
    report.classification_failures = tally["classification_failures"]
    report.roundtrip_failures = tally["roundtrip_failures"]
    report.failures.extend(tally["failures"])
    if catalogue:
        with open(catalogue, "w") as out:
            for key in sorted(records):
                out.write(records[key])
                out.write("\n")
        report.catalogue = catalogue
    report.wall_time = time.perf_counter() - started
    return report

