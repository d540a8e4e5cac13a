"""Command-line entry point.

Machine-readable output goes to stdout as JSON (or the module's own text
format for `fourier`); diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Optional

from .boolean_fn import BooleanFunction
from .classifier import classify
from .enumerator import DEFAULT_BIT_BUDGET, enumerate_exhaustive, enumerate_sampled
from .errors import ClassificationFailure, ConsistencyError, DomainError, PreconditionError
from .errors import ResourceError, ValidationError
from .fourier import expand
from .generator import PROFILES, GenParams, generate, sample_params
from .polymorphism import PolymorphismInstance, check_fourier, check_pointwise

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_UNCLASSIFIED = 2
EXIT_USAGE = 64
EXIT_RESOURCE = 65
EXIT_INTERNAL = 70


@dataclass
class CliConfig:
    command: str
    path: Optional[str] = None
    method: str = "pointwise"
    output: Optional[str] = None
    params: Optional[str] = None
    seed: Optional[int] = None
    n: Optional[int] = None
    m: Optional[int] = None
    profile: Optional[str] = None
    sampled: Optional[int] = None
    catalogue: Optional[str] = None
    threads: int = 1
    bit_budget: int = DEFAULT_BIT_BUDGET
    line: Optional[str] = None

    def validate(self):
        if self.threads < 1:
            raise ValidationError("--threads must be at least 1")
        if self.command == "generate":
            random_mode = [self.seed, self.n, self.m, self.profile]
            if self.params is None and None in random_mode:
                raise ValidationError("generate needs --params or all of --seed --n --m --profile")
            if self.params is not None and any(v is not None for v in random_mode):
                raise ValidationError("--params excludes --seed/--n/--m/--profile")
        if self.command == "enumerate":
            if self.n is None or self.m is None:
                raise ValidationError("enumerate needs --n and --m")
            if self.sampled is not None and self.sampled < 0:
                raise ValidationError("--sampled must be non-negative")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="genpoly", description="Boolean generalized polymorphism toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="decide whether an instance file is a generalized polymorphism")
    c.add_argument("path")
    c.add_argument("--method", choices=("pointwise", "fourier", "both"), default="pointwise")

    c = sub.add_parser("classify", help="canonical form of an instance file")
    c.add_argument("path")
    c.add_argument("-o", "--output")

    c = sub.add_parser("generate", help="build an instance from parameters")
    c.add_argument("--params", help="GenParams JSON file")
    c.add_argument("--seed", type=int)
    c.add_argument("--n", type=int)
    c.add_argument("--m", type=int)
    c.add_argument("--profile", choices=PROFILES)
    c.add_argument("-o", "--output", help="write the instance file here")

    c = sub.add_parser("enumerate", help="exhaustive or sampled enumeration")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--sampled", type=int, metavar="COUNT")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--catalogue")
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--bit-budget", type=int, default=DEFAULT_BIT_BUDGET)

    c = sub.add_parser("fourier", help="Fourier expansion of a truth-table line")
    c.add_argument("line")
    return p


def parse_config(argv) -> CliConfig:
    ns = vars(build_parser().parse_args(argv))
    cfg = CliConfig(**ns)
    cfg.validate()
    return cfg


def _read_instance(path: str) -> PolymorphismInstance:
    try:
        with open(path) as fh:
            return PolymorphismInstance.from_text(fh.read())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


def _emit(obj):
    sys.stdout.write(json.dumps(obj, separators=(",", ":")) + "\n")


def cmd_check(cfg: CliConfig) -> int:
    P = _read_instance(cfg.path)
    if cfg.method == "pointwise":
        verdict = check_pointwise(P)
    elif cfg.method == "fourier":
        verdict = check_fourier(P)
    else:
        verdict = check_pointwise(P)
        if check_fourier(P) != verdict:
            raise ConsistencyError("pointwise and Fourier checkers disagree")
    print("true" if verdict else "false")
    return EXIT_OK if verdict else EXIT_FALSE


def cmd_classify(cfg: CliConfig) -> int:
    P = _read_instance(cfg.path)
    try:
        form = classify(P)
    except PreconditionError as exc:
        _emit({"ok": False, "reason": "not a generalized polymorphism", "detail": str(exc)})
        return EXIT_UNCLASSIFIED
    except ClassificationFailure as exc:
        _emit({"ok": False, "reason": "unclassified block", "block": exc.block, "detail": str(exc)})
        return EXIT_UNCLASSIFIED
    text = form.dumps()
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text + "\n")
    sys.stdout.write(text + "\n")
    return EXIT_OK


def cmd_generate(cfg: CliConfig) -> int:
    if cfg.params is not None:
        try:
            with open(cfg.params) as fh:
                params = GenParams.from_json(json.load(fh))
        except OSError as exc:
            raise ValidationError(f"cannot read {cfg.params}: {exc.strerror}") from None
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValidationError(f"malformed parameter file: {exc}") from None
    else:
        params = sample_params(cfg.seed, cfg.n, cfg.m, cfg.profile)
    P = generate(params)
    out = {"instance": P.key(), "params": params.to_json()}
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(P.to_text())
    else:
        out["text"] = P.to_text()
    _emit(out)
    return EXIT_OK


def cmd_enumerate(cfg: CliConfig) -> int:
    if cfg.sampled is not None:
        report = enumerate_sampled(cfg.n, cfg.m, cfg.sampled, seed=cfg.seed, catalogue=cfg.catalogue)
    else:
        report = enumerate_exhaustive(
            cfg.n, cfg.m, threads=cfg.threads, catalogue=cfg.catalogue,
            bit_budget=cfg.bit_budget, seed=cfg.seed,
        )
    out = report.to_json()
    # wall time is the one nondeterministic field; keep stdout reproducible
    print(f"wall time {out.pop('wall_time'):.2f}s", file=sys.stderr)
    _emit(out)
    return EXIT_OK if report.ok() else EXIT_UNCLASSIFIED


def cmd_fourier(cfg: CliConfig) -> int:
    f = BooleanFunction.from_text(cfg.line)
    print(expand(f).to_text())
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "classify": cmd_classify,
    "generate": cmd_generate,
    "enumerate": cmd_enumerate,
    "fourier": cmd_fourier,
}


def run(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConsistencyError as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run())
