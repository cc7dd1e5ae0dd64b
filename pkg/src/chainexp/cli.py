"""Command-line entry point.

Subcommands: analyze, design, simulate, mc, online, coop.  Spec documents
are JSON (see :func:`chainexp.chains.validate_spec` for the schema); states
are 0-indexed everywhere.  Results are written as deterministic JSON
(17-significant-digit floats) embedding a configuration hash and the seed;
checkpoint series go to CSV with header
``n,alpha_hat_mle,alpha_hat_sae,gamma_hat_json``.

Seed precedence: ``--seed`` flag, then the ETI_SEED environment variable,
then the ``--config`` file, then 0.  Exit codes: 1 for configuration
errors, 2 for spec validation failures, 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import specio
from .chains import SpecValidationError, analyze, validate_spec
from .design import optimal_regenerative, solve_optimal_kappa, variance_gap_report
from .online import OnlineEti2Config, OnlineEtiConfig
from .policies import CoopAlternating, Regenerative, SingleChain, StationaryMarkov, Switchback
from .simulate import coop_comparison, monte_carlo, run

CONFIG_EXIT, SPEC_EXIT, RUNTIME_EXIT = 1, 2, 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(CONFIG_EXIT)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _policy_from_json(text: str, n_states: int):
    if text.startswith("@"):
        doc = _load_json(text[1:])
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad policy JSON: {exc}") from exc
    try:
        kind = doc["type"]
        if kind == "markov":
            p1 = doc["p1"]
            arr = np.full(n_states, float(p1)) if np.isscalar(p1) else np.asarray(p1, dtype=float)
            if arr.shape != (n_states,):
                raise ValueError(f"p1 must have {n_states} entries")
            return StationaryMarkov(arr)
        if kind == "regenerative":
            x_r = int(doc["x_r"])
            if not 0 <= x_r < n_states:
                raise ValueError(f"x_r must be in [0, {n_states})")
            return Regenerative(x_r=x_r, p_r=float(doc["p_r"]))
        if kind == "switchback":
            return Switchback(block_length=int(doc.get("block_length", 100)))
        if kind == "single":
            return SingleChain(ell=int(doc["ell"]))
        if kind == "coop":
            return CoopAlternating(n_states=n_states)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad policy config: {exc}") from exc
    raise ConfigError(f"unknown policy type {doc.get('type')!r}")


def _resolve(args, key, config, default, *, env=None):
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    if env is not None and os.environ.get(env) is not None:
        return type(default)(os.environ[env]) if default is not None else os.environ[env]
    if config and key in config:
        return config[key]
    return default


def _seed_of(args, config) -> int:
    return int(_resolve(args, "seed", config, 0, env="ETI_SEED"))


def _emit(doc: dict, out: str | None) -> None:
    text = specio.dumps(doc)
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(checkpoints, path: str | None) -> None:
    if path is None:
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(specio.checkpoint_csv(checkpoints))


def _sanitize_extras(extras: dict) -> dict:
    return {k: v for k, v in extras.items() if k != "stats"}


def _result_doc(res, chash: str, seed: int) -> dict:
    return {
        "config_hash": chash,
        "seed": seed,
        "result": {
            "rep": res.rep,
            "n": res.n,
            "alpha_mle": res.alpha_mle,
            "alpha_sae": res.alpha_sae,
            "gamma_hat": specio.to_jsonable(res.gamma_hat),
            "diagnostics": specio.to_jsonable(res.diagnostics),
            "extras": specio.to_jsonable(_sanitize_extras(res.extras)),
            "checkpoints": [
                {"n": c[0], "alpha_mle": c[1], "alpha_sae": c[2], "gamma_hat": specio.to_jsonable(c[3])}
                for c in res.checkpoints
            ],
        },
    }


def cmd_analyze(args, config) -> int:
    spec = validate_spec(_load_json(args.spec))
    an = analyze(spec)
    doc = {
        "config_hash": specio.config_hash({"command": "analyze", "spec": specio.spec_to_dict(spec)}),
        "seed": None,
        "analysis": specio.to_jsonable(an),
    }
    _emit(doc, args.out)
    return 0


def cmd_design(args, config) -> int:
    spec = validate_spec(_load_json(args.spec))
    an = analyze(spec)
    sol = solve_optimal_kappa(an.pi, an.sigma2, spec.P(1), spec.P(2))
    doc = {
        "config_hash": specio.config_hash(
            {"command": "design", "spec": specio.spec_to_dict(spec), "regenerative": args.regenerative}
        ),
        "seed": None,
        "design": specio.to_jsonable(sol),
    }
    if args.regenerative is not None:
        x_r = int(args.regenerative)
        doc["regenerative"] = specio.to_jsonable(optimal_regenerative(an, x_r))
        doc["variance_gap"] = specio.to_jsonable(variance_gap_report(spec, x_r, an))
    _emit(doc, args.out)
    return 0


def _common_run_params(args, config, spec):
    n = int(_resolve(args, "n", config, None) or 0)
    if n < 1:
        raise ConfigError("--n must be a positive integer")
    seed = _seed_of(args, config)
    ckpt = int(_resolve(args, "checkpoint-every", config, 0))
    return n, seed, ckpt


def cmd_simulate(args, config) -> int:
    spec = validate_spec(_load_json(args.spec))
    n, seed, ckpt = _common_run_params(args, config, spec)
    policy_text = _resolve(args, "policy", config, None)
    if policy_text is None:
        raise ConfigError("--policy is required")
    policy = _policy_from_json(policy_text if isinstance(policy_text, str) else json.dumps(policy_text), spec.n_states)
    chash = specio.config_hash(
        {"command": "simulate", "spec": specio.spec_to_dict(spec), "policy": policy_text, "n": n, "seed": seed, "checkpoint_every": ckpt}
    )
    res = run(spec, policy, n, seed, checkpoint_every=ckpt)
    _emit(_result_doc(res, chash, seed), args.out)
    _write_csv(res.checkpoints, args.csv)
    return 0


def cmd_mc(args, config) -> int:
    spec = validate_spec(_load_json(args.spec))
    n, seed, _ = _common_run_params(args, config, spec)
    reps = int(_resolve(args, "reps", config, None) or 0)
    if reps < 2:
        raise ConfigError("--reps must be >= 2")
    threads = int(_resolve(args, "threads", config, 1))
    policy_text = _resolve(args, "policy", config, None)
    if policy_text is None:
        raise ConfigError("--policy is required")
    policy = _policy_from_json(policy_text if isinstance(policy_text, str) else json.dumps(policy_text), spec.n_states)
    # threads deliberately excluded: it must not affect the output bytes
    chash = specio.config_hash(
        {"command": "mc", "spec": specio.spec_to_dict(spec), "policy": policy_text, "n": n, "reps": reps, "seed": seed}
    )
    summary = monte_carlo(spec, policy, n, reps, seed, threads=threads)
    doc = {"config_hash": chash, "seed": seed, "summary": specio.to_jsonable(summary)}
    _emit(doc, args.out)
    return 0


def cmd_online(args, config) -> int:
    spec = validate_spec(_load_json(args.spec))
    n, seed, ckpt = _common_run_params(args, config, spec)
    algo = _resolve(args, "algo", config, "eti")
    if algo == "eti":
        beta = float(_resolve(args, "beta", config, 0.5))
        resolve = _resolve(args, "resolve", config, "pow2")
        try:
            policy = OnlineEtiConfig(resolve=resolve, beta=beta)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    elif algo == "eti2":
        xr = _resolve(args, "xr", config, None)
        if xr is None:
            raise ConfigError("--xr is required for --algo eti2")
        if not 0 <= int(xr) < spec.n_states:
            raise ConfigError(f"--xr must be in [0, {spec.n_states})")
        policy = OnlineEti2Config(x_r=int(xr))
    else:
        raise ConfigError(f"unknown --algo {algo!r}")
    chash = specio.config_hash(
        {"command": "online", "spec": specio.spec_to_dict(spec), "algo": algo, "n": n, "seed": seed,
         "checkpoint_every": ckpt, "beta": getattr(policy, "beta", None),
         "resolve": getattr(policy, "resolve", None), "x_r": getattr(policy, "x_r", None)}
    )
    res = run(spec, policy, n, seed, checkpoint_every=ckpt)
    _emit(_result_doc(res, chash, seed), args.out)
    _write_csv(res.checkpoints, args.csv)
    return 0


def cmd_coop(args, config) -> int:
    sizes = args.s or (config or {}).get("s") or [8, 32]
    sizes = [int(s) for s in sizes]
    q1 = float(_resolve(args, "q1", config, 0.5))
    q2 = float(_resolve(args, "q2", config, 0.5))
    n = int(_resolve(args, "n", config, 100000))
    reps = int(_resolve(args, "reps", config, 2000))
    seed = _seed_of(args, config)
    threads = int(_resolve(args, "threads", config, 1))
    chash = specio.config_hash(
        {"command": "coop", "s": sizes, "q1": q1, "q2": q2, "n": n, "reps": reps, "seed": seed}
    )
    reports = [
        specio.to_jsonable(coop_comparison(s, q1, q2, n, reps, seed, threads=threads)) for s in sizes
    ]
    doc = {"config_hash": chash, "seed": seed, "reports": reports}
    if len(reports) >= 2:
        doc["ratio_growth"] = reports[-1]["ratio"] / reports[0]["ratio"]
    _emit(doc, args.out)
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="chainexp", description="Two-chain experiments under temporal interference")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, spec_required=True):
        if spec_required:
            sp.add_argument("spec", help="chain spec JSON path")
        sp.add_argument("--config", help="experiment config JSON (defaults for flags)")
        sp.add_argument("--out", help="write the JSON document here instead of stdout")

    sp = sub.add_parser("analyze", help="closed-form ground truth for a spec")
    add_common(sp)
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("design", help="optimal designs for a spec")
    add_common(sp)
    sp.add_argument("--regenerative", metavar="XR", help="also emit the optimal regenerative design at state XR")
    sp.set_defaults(fn=cmd_design)

    sp = sub.add_parser("simulate", help="single seeded run")
    add_common(sp)
    sp.add_argument("--policy", help="policy JSON (inline or @file)")
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--checkpoint-every", type=int)
    sp.add_argument("--csv", help="write the checkpoint series CSV here")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("mc", help="Monte Carlo replications")
    add_common(sp)
    sp.add_argument("--policy", help="policy JSON (inline or @file)")
    sp.add_argument("--n", type=int)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)
    sp.set_defaults(fn=cmd_mc)

    sp = sub.add_parser("online", help="adaptive experimental designs")
    add_common(sp)
    sp.add_argument("--algo", choices=["eti", "eti2"])
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--xr", type=int, help="regeneration state (eti2)")
    sp.add_argument("--beta", type=float, help="forced-exploration exponent (eti)")
    sp.add_argument("--resolve", choices=["pow2", "every-step"], help="design re-solve schedule (eti)")
    sp.add_argument("--checkpoint-every", type=int)
    sp.add_argument("--csv", help="write the checkpoint series CSV here")
    sp.set_defaults(fn=cmd_online)

    sp = sub.add_parser("coop", help="cooperative exploration vs isolation on the cycles example")
    sp.add_argument("--config", help="experiment config JSON (defaults for flags)")
    sp.add_argument("--out", help="write the JSON document here instead of stdout")
    sp.add_argument("--s", action="append", type=int, help="cycle length; repeatable")
    sp.add_argument("--q1", type=float)
    sp.add_argument("--q2", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)
    sp.set_defaults(fn=cmd_coop)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = None
    try:
        if getattr(args, "config", None):
            config = _load_json(args.config)
            config = config.get(args.command, config)
        return args.fn(args, config)
    except SpecValidationError as exc:
        for issue in exc.issues:
            sys.stderr.write(f"spec error: {issue}\n")
        return SPEC_EXIT
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return CONFIG_EXIT
    except Exception as exc:  # runtime failure with diagnostics
        sys.stderr.write(f"runtime error: {type(exc).__name__}: {exc}\n")
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
