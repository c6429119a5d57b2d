"""Command-line front end: account, sample, verify, attack, reproduce.

Every file written goes into ``--out`` and existing files are never
overwritten, so a run directory only grows.  Invalid configuration exits
with status 2, failed verification with status 1.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import secrets
import sys

import numpy as np

from . import accounting as acc
from . import harness
from .adaptive import adaptive_sample
from .distributions import RngStream
from .exceptions import DomainError, UnsupportedFeatureError
from .mechanisms import KNGTarget, build_erm_target, gaussian_envelope, knorm_envelope, load_erm_spec
from .samplers import additive_wait_reject, simple_reject, squeeze_reject, truncated_reject

TARGETS = ("gaussian-demo", "kng-demo", "example4-lipschitz", "ridge-erm")
SAMPLERS = ("simple", "truncated", "wait", "squeeze", "adaptive")


class ConfigError(Exception):
    pass


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="privsample", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_required):
        p.add_argument("--seed", type=_seed, required=seed_required)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--config", default=None, help="JSON config; its keys fill unset flags")

    p = sub.add_parser("account", help="eps(delta), delta(eps) and the f_R curve")
    common(p, False)
    p.add_argument("--R", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--p", type=float, help="acceptance probability on D (with --q)")
    p.add_argument("--q", type=float, help="acceptance probability on D'")

    p = sub.add_parser("sample", help="draw samples with runtimes")
    common(p, True)
    p.add_argument("--sampler", choices=SAMPLERS)
    p.add_argument("--target", default=None, help=f"one of {', '.join(TARGETS)}")
    p.add_argument("--erm", default=None, help="ERMSpec JSON for the ridge-erm target")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--delta", type=float, help="failure probability for the truncated sampler")
    p.add_argument("--c", type=float, help="runtime constant for the wait sampler")
    p.add_argument("--events", action="store_true", help="also write per-iteration events (JSON lines)")

    p = sub.add_parser("verify", help="run the certification suite")
    common(p, False)
    p.add_argument("--suite", choices=("quick", "full"), default="quick")
    p.add_argument("--fresh-seed", action="store_true", help="draw a random seed (exploration only)")

    p = sub.add_parser("attack", help="runtime likelihood-ratio attack")
    common(p, True)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--n", type=_positive_int)

    p = sub.add_parser("reproduce", help="epsilon(delta) table and tradeoff-curve data")
    common(p, False)
    return parser


def _apply_config(args) -> None:
    if not args.config:
        return
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r} for {args.command}")
        if getattr(args, attr) in (None, False):
            setattr(args, attr, value)


def _open_new(out_dir: str, name: str):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    if os.path.exists(path):
        raise ConfigError(f"{path} exists; output directories are append-only")
    return path


def _out(args) -> str:
    return args.out or "."


# ---------------------------------------------------------------------------


def cmd_account(args) -> int:
    if args.R is None and args.p is not None and args.q is not None:
        args.R = acc.runtime_R(args.p, args.q)
        print(f"R = {args.R:.17g}")
    if args.R is None:
        raise ConfigError("account needs --R (or --p and --q)")
    R = args.R
    if R < 1:
        raise ConfigError("R must be >= 1")
    if args.delta is not None:
        print(f"{acc.eps_of_delta(R, args.delta):.2f}" if R > 1 else "0.00")
    if args.eps is not None:
        print(f"{acc.delta_of_eps(R, args.eps):.6g}" if R > 1 else "0")
    if args.out:
        curve = acc.f_R_curve(R)
        rows = [(a, b, "f_R") for a, b in zip(curve.alpha, curve.beta)]
        harness.write_csv(_open_new(args.out, f"f_R_{R:g}.csv"), ["alpha", "beta", "source"], rows)
    return 0


def _kng_demo():
    A = np.diag([1.0, 3.0])
    t = KNGTarget.from_gradient(lambda x: A @ np.asarray(x, dtype=float), 2, 1.0, 3.0, [0.0, 0.0])
    # integral of exp(-||A x||) = 2! * pi / det A
    t.log_normalizer = math.log(2.0 * math.pi / 3.0)
    return t


def _resolve_target(args):
    name = args.target or "gaussian-demo"
    if name == "gaussian-demo":
        t = harness.gaussian_demo_target()
        return t, gaussian_envelope(t)
    if name == "kng-demo":
        t = _kng_demo()
        return t, knorm_envelope(t)
    if name == "ridge-erm":
        spec = load_erm_spec(args.erm) if args.erm else harness.ridge_demo_spec()
        t = build_erm_target(spec)
        return t, gaussian_envelope(t)
    if name == "example4-lipschitz":
        return harness.example_lipschitz_target(), None
    raise ConfigError(f"unknown target {name!r}; choose from {', '.join(TARGETS)}")


def cmd_sample(args) -> int:
    if args.sampler is None or args.n is None:
        raise ConfigError("sample needs --sampler and --n")
    target, env = _resolve_target(args)
    rng = RngStream(args.seed, 0)
    if (args.sampler == "adaptive") != (env is None):
        raise ConfigError(f"sampler {args.sampler!r} does not apply to target {args.target!r}")
    events = []
    if args.sampler == "adaptive":
        run = adaptive_sample(target, args.n, rng)
        values, runtimes = run.samples, run.runtimes
        accepted = np.ones(len(runtimes), dtype=bool)
    else:
        traces = []
        for _ in range(args.n):
            if args.sampler == "simple":
                tr = simple_reject(target, env, rng, record_events=args.events)
            elif args.sampler == "squeeze":
                tr = squeeze_reject(target, env, rng, record_events=args.events)
            elif args.sampler == "truncated":
                delta = args.delta if args.delta is not None else 1e-6
                tr = truncated_reject(target, env, math.exp(env.log_ratio), delta, rng, record_events=args.events)
            else:
                if target.log_normalizer is None:
                    raise ConfigError("the wait sampler needs a target with a known normalizer")
                c = args.c if args.c is not None else math.exp(-env.log_ratio)
                tr = additive_wait_reject(target, env, c, rng)
            traces.append(tr)
            events.extend(tr.events or [])
        values = np.array([np.atleast_1d(t.value) for t in traces])
        runtimes = np.array([t.runtime for t in traces])
        accepted = np.array([t.accepted for t in traces])
    d = values.shape[1]
    header = [f"x{i}" for i in range(d)] + ["runtime", "accepted"]
    rows = [list(v) + [int(r), int(a)] for v, r, a in zip(values, runtimes, accepted)]
    stem = f"samples_{args.sampler}_{args.target or 'gaussian-demo'}_seed{args.seed}"
    path = _open_new(_out(args), stem + ".csv")
    harness.write_csv(path, header, rows)
    if events:
        from .samplers import write_events_jsonl

        with open(_open_new(_out(args), stem + "_events.jsonl"), "w") as fh:
            write_events_jsonl(events, fh)
    print(path)
    return 0


def cmd_verify(args) -> int:
    seed = secrets.randbits(63) if args.fresh_seed else (args.seed if args.seed is not None else 7)
    scale = 1.0 if args.suite == "full" else 0.1
    reports = harness.run_suite(seed=seed, scale=scale)
    for r in reports:
        print(r.line())
    if args.out:
        path = _open_new(args.out, f"verify_{args.suite}_seed{seed}.jsonl")
        with open(path, "w") as fh:
            for r in reports:
                fh.write(r.to_json() + "\n")
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed (seed {seed})")
    return 1 if failed else 0


def cmd_attack(args) -> int:
    if args.p is None or args.q is None:
        raise ConfigError("attack needs --p and --q")
    for v in (args.p, args.q):
        if not 0 < v <= 1:
            raise ConfigError("acceptance probabilities must lie in (0, 1]")
    n = args.n or 100_000
    from .distributions import GeometricLaw, geometric_sample

    a = geometric_sample(GeometricLaw(args.p), RngStream(args.seed, 1), n)
    b = geometric_sample(GeometricLaw(args.q), RngStream(args.seed, 2), n)
    res = harness.attack_tradeoff(a, b, args.p, args.q)
    stem = f"attack_p{args.p:g}_q{args.q:g}_seed{args.seed}"
    harness.write_csv(_open_new(_out(args), stem + ".csv"), ["alpha", "beta", "source"], res.curve_rows())
    lr_rows = [(int(k), e, m) for k, e, m in zip(res.log_ratio_ks, res.log_ratio_exact, res.log_ratio_empirical)]
    harness.write_csv(_open_new(_out(args), stem + "_log_ratio.csv"), ["k", "exact", "empirical"], lr_rows)
    summary = {"R": res.R, "sup_gap_empirical": res.sup_gap_empirical, "min_slack_vs_f_R": res.min_slack_vs_f_R,
               "max_gap_vs_f_R": res.max_gap_vs_f_R, "n": n, "seed": args.seed}
    with open(_open_new(_out(args), stem + ".json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary))
    return 0


def cmd_reproduce(args) -> int:
    out = _out(args)
    rows = [(r["R"], r["delta"], r["eps"]) for r in harness.eps_delta_table()]
    harness.write_csv(_open_new(out, "eps_delta_table.csv"), ["R", "delta", "eps"], rows)
    by_q = {}
    for q, a, b, src in harness.tradeoff_comparison_rows():
        by_q.setdefault(q, []).append((a, b, src))
    for q, qrows in by_q.items():
        harness.write_csv(_open_new(out, f"tradeoff_vs_f_R_q{q:g}.csv"), ["alpha", "beta", "source"], qrows)
    for R, delta, eps in rows:
        print(f"R={R:g} delta={delta:g} eps={eps:.3f}")
    return 0


COMMANDS = {
    "account": cmd_account,
    "sample": cmd_sample,
    "verify": cmd_verify,
    "attack": cmd_attack,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError, UnsupportedFeatureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
