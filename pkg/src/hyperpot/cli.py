"""Command-line front end.

Subcommands
    make              build a named instance and write space.json / table.json
    check-axioms      convolution axiom report for a stored instance
    check-conditions  structure-constant certificate for a stored instance
    verify            run one inequality suite against a stored instance
    report            run a configured experiment and write a report bundle

Exit codes: 0 all checks passed, 1 a suite or certificate failed, 2 usage or
configuration errors (including unreadable JSON, reported with line and
column).  Reports go to stdout as JSON; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    ConfigError,
    DivergentIntegralError,
    IncompleteTableError,
    InvalidRadiusError,
    InvariantViolationError,
    KernelHypothesisError,
    NoHaarError,
    NormComputationError,
    SpaceMismatchError,
)
from .hypergroup import ConvolutionTable, check_axioms
from .metric_space import DiscreteSpace
from .orlicz import KernelSpec, build_nfunction
from .operators import PotentialConfig
from .verify import (
    DEFAULT_CONFIG,
    check_conditions,
    check_domination,
    build_instance,
    run_experiment,
    verify_corollary,
    verify_hedberg_estimates,
    verify_strong_pp,
    verify_theorem,
    verify_weak_1_1,
)

VERIFY_SUITES = ("weak11", "strongpp", "hedberg", "theorem", "corollary", "domination")
USAGE_ERRORS = (
    ConfigError,
    DivergentIntegralError,
    IncompleteTableError,
    InvalidRadiusError,
    InvariantViolationError,
    KernelHypothesisError,
    NoHaarError,
    NormComputationError,
    SpaceMismatchError,
    OSError,
)


def parse_kernel_flag(text: str) -> KernelSpec:
    """power:0.25 or power_log:0.25:0.5 into a kernel description."""
    parts = text.split(":")
    family, args = parts[0], parts[1:]
    try:
        vals = [float(v) for v in args]
    except ValueError:
        raise ConfigError(f"kernel parameters must be numbers, got {text!r}")
    if family == "power" and len(vals) == 1:
        return KernelSpec(family="power", alpha=vals[0])
    if family == "power_log" and len(vals) == 2:
        return KernelSpec(family="power_log", alpha=vals[0], beta=vals[1])
    raise ConfigError(
        f"kernel flag {text!r} not understood; use power:ALPHA or "
        "power_log:ALPHA:BETA (tabulated kernels go through config files)"
    )


def _load_instance(space_path: str, table_path: str):
    spec = {"kind": "files", "space": space_path, "table": table_path}
    return build_instance(spec)


def _emit(data: dict, out_dir: str | None, name: str) -> None:
    text = json.dumps(data, indent=2, sort_keys=True)
    print(text)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text + "\n", encoding="utf-8")


def _cmd_make(args) -> int:
    spec = {"kind": args.kind}
    if args.kind == "cyclic":
        spec["n"] = args.n
    elif args.kind == "chebyshev":
        spec["M"] = args.M
    elif args.kind == "bessel":
        spec.update(alpha=args.alpha, grid_size=args.grid_size, step=args.step)
    elif args.kind == "conjugacy":
        spec["group"] = args.group
    space, table = build_instance(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    space.save(out / "space.json")
    table.save(out / "table.json", space_ref="space.json")
    print(str(out / "space.json"))
    print(str(out / "table.json"))
    return 0


def _cmd_check_axioms(args) -> int:
    space, table = _load_instance(args.space, args.table)
    report = check_axioms(table)
    _emit(report.as_dict(), args.out, "axioms")
    return 0 if report.passed else 1


def _cmd_check_conditions(args) -> int:
    space, table = _load_instance(args.space, args.table)
    cert = check_conditions(table)
    _emit(cert.as_dict(), args.out, "conditions")
    return 0 if cert.passed else 1


def _cmd_verify(args) -> int:
    space, table = _load_instance(args.space, args.table)
    kernel = parse_kernel_flag(args.kernel)
    p = args.p
    seed = args.seed
    name = args.suite
    if name == "weak11":
        rep = verify_weak_1_1(table, seed=seed)
    elif name == "strongpp":
        rep = verify_strong_pp(table, p=p, seed=seed)
    elif name == "domination":
        rep = check_domination(table, seed=seed)
    else:
        n_exp = table.space.dim_exponent
        config = PotentialConfig(kernel=kernel, N=n_exp)
        if name == "hedberg":
            phi = build_nfunction(kernel, N=n_exp, p=p)
            rep = verify_hedberg_estimates(table, config, phi, p, seed=seed)
        elif name == "theorem":
            rep = verify_theorem(table, config, p, seed=seed)
        else:
            if kernel.family != "power":
                raise ConfigError("the corollary suite needs a power kernel")
            rep = verify_corollary(table, kernel.alpha, p, seed=seed)
    _emit(rep.as_dict(), args.out, name)
    return 0 if rep.passed else 1


def _cmd_report(args) -> int:
    config = dict(DEFAULT_CONFIG) if args.config is None else args.config
    report = run_experiment(config, args.bundle, max_workers=args.max_workers)
    print(json.dumps({"passed": report["passed"], "bundle": str(args.bundle)}))
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperpot",
        description="verification suites for potential operators on hypergroups",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    mk = sub.add_parser("make", help="build an instance and store it as JSON")
    mk.add_argument("kind", choices=["cyclic", "conjugacy", "chebyshev", "bessel"])
    mk.add_argument("--n", type=int, default=64, help="cyclic order")
    mk.add_argument("--M", type=int, default=64, help="chebyshev truncation degree")
    mk.add_argument("--alpha", type=float, default=0.5, help="bessel parameter")
    mk.add_argument("--grid-size", type=int, default=64)
    mk.add_argument("--step", type=float, default=0.5)
    mk.add_argument("--group", choices=["s3", "q8"], default="s3")
    mk.add_argument("--out", required=True, help="output directory")
    mk.set_defaults(func=_cmd_make)

    for cmd, fn in (("check-axioms", _cmd_check_axioms),
                    ("check-conditions", _cmd_check_conditions)):
        ck = sub.add_parser(cmd, help=f"{cmd.replace('-', ' ')} for a stored instance")
        ck.add_argument("--space", required=True)
        ck.add_argument("--table", required=True)
        ck.add_argument("--out", default=None, help="also write the JSON report here")
        ck.set_defaults(func=fn)

    vf = sub.add_parser("verify", help="run one inequality suite")
    vf.add_argument("suite", choices=list(VERIFY_SUITES))
    vf.add_argument("--space", required=True)
    vf.add_argument("--table", required=True)
    vf.add_argument("--kernel", default="power:0.25", help="power:A or power_log:A:B")
    vf.add_argument("--p", type=float, default=2.0)
    vf.add_argument("--seed", type=int, default=0)
    vf.add_argument("--out", default=None, help="also write the JSON report here")
    vf.set_defaults(func=_cmd_verify)

    rp = sub.add_parser("report", help="run a configured experiment bundle")
    rp.add_argument("--bundle", required=True, help="output directory for the bundle")
    rp.add_argument("--config", default=None, help="JSON config path (default config if omitted)")
    rp.add_argument("--max-workers", type=int, default=None)
    rp.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as err:
        print(
            f"config parse error at line {err.lineno}, column {err.colno}: {err.msg}",
            file=sys.stderr,
        )
        return 2
    except USAGE_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
