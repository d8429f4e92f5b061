"""Command-line front end: config parsing, seed management, subcommand dispatch.

Every output embeds the fully resolved configuration and the tool version,
and seeds are mandatory, so any artifact can be regenerated byte for byte.
Exit codes: 0 = pass/inconclusive, 1 = a verification failed, 2 = bad
configuration or usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from . import __version__, environment, harness, idla, pbm, theory
from .environment import CookieEnvironment
from .rng import philox_stream

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


@dataclass
class RunConfig:
    """Fully resolved invocation: environment, experiment knobs, seed, output."""

    pos_cookies: list = field(default_factory=list)
    neg_cookies: list = field(default_factory=list)
    alpha: Optional[float] = None
    beta: Optional[float] = None
    x: Optional[float] = None
    n: Optional[int] = None
    n_steps: Optional[int] = None
    replicas: Optional[int] = None
    dt: Optional[float] = None
    t_max: Optional[float] = None
    escape_radius: Optional[int] = None
    record_every: Optional[int] = None
    slack_c: Optional[float] = None
    alphas: Optional[list] = None
    betas: Optional[list] = None
    master_seed: Optional[int] = None
    workers: int = 1
    out: Optional[str] = None
    format: str = "json"

    def environment(self) -> CookieEnvironment:
        return CookieEnvironment(tuple(self.pos_cookies), tuple(self.neg_cookies))

    def echo(self) -> dict:
        # deliberately excludes out and workers: neither affects the data,
        # and reports must be byte-identical across worker counts
        data = {
            k: v
            for k, v in asdict(self).items()
            if v is not None and k not in ("out", "workers")
        }
        data["version"] = __version__
        return data


def _sanitize(value):
    """Make a value JSON-clean (no NaN/inf, tuples to lists)."""
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _emit(payload: dict, config: RunConfig) -> None:
    payload = dict(payload)
    payload["config"] = config.echo()
    text = json.dumps(_sanitize(payload), sort_keys=True, indent=2) + "\n"
    _write_text(text, config.out)


def _emit_rows(header: Sequence[str], rows, config: RunConfig) -> None:
    if config.format == "csv":
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(_sanitize(config.echo()), sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        _write_text(buf.getvalue(), config.out)
    else:
        _emit({"columns": list(header), "rows": [list(r) for r in rows]}, config)


def _write_text(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_cookie_list(raw: Optional[str]) -> Optional[list]:
    if raw is None:
        return None
    raw = raw.strip()
    if not raw:
        return []
    return [float(tok) for tok in raw.replace(",", " ").split()]


def _load_config(args: argparse.Namespace) -> RunConfig:
    """File values first, command-line flags win."""
    merged: dict = {}
    path = getattr(args, "config", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise ValueError("config file must hold a JSON object")
        known = set(RunConfig.__dataclass_fields__)
        unknown = set(file_cfg) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    for key in RunConfig.__dataclass_fields__:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if getattr(args, "seed", None) is not None:
        merged["master_seed"] = args.seed
    cfg = RunConfig(**{k: v for k, v in merged.items() if k in RunConfig.__dataclass_fields__})
    if cfg.master_seed is None:
        raise ValueError("a master seed is required (--seed or config master_seed); there is no entropy fallback")
    if not 0 <= cfg.master_seed < 2**64:
        raise ValueError("master seed must fit in 64 unsigned bits")
    if cfg.format not in ("json", "csv"):
        raise ValueError(f"unsupported output format {cfg.format!r}")
    return cfg


def _require(cfg: RunConfig, **defaults):
    for key, value in defaults.items():
        if getattr(cfg, key) is None:
            setattr(cfg, key, value)


def _cmd_theory(args) -> int:
    # analytic values need no seed: pure functions of their arguments
    if args.theory_op == "h":
        value = theory.h_exact(args.alpha, args.beta, args.x)
        payload = {"alpha": args.alpha, "beta": args.beta, "x": args.x, "value": value}
    elif args.theory_op == "fixed-point":
        payload = {"alpha": args.alpha, "beta": args.beta, "p": theory.fixed_point(args.alpha, args.beta)}
    else:
        pos = args.pos_cookies
        neg = args.neg_cookies
        if getattr(args, "config", None):
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
            pos = file_cfg.get("pos_cookies", []) if pos is None else pos
            neg = file_cfg.get("neg_cookies", []) if neg is None else neg
        env = CookieEnvironment(tuple(pos or ()), tuple(neg or ()))
        prediction = theory.predict(env)
        payload = {
            "alpha": environment.alpha(env),
            "beta": environment.beta(env),
            "kind": prediction.kind.value,
            "p": prediction.p,
        }
    text = json.dumps(_sanitize(payload), sort_keys=True) + "\n"
    _write_text(text, getattr(args, "out", None))
    return EXIT_OK


def _cmd_simulate_walk(args) -> int:
    cfg = _load_config(args)
    _require(cfg, n_steps=1000)
    env = cfg.environment()
    environment.ensure_valid(env)
    from .walk import WalkState, step

    rng = philox_stream(cfg.master_seed, "simulate-walk")
    state = WalkState()
    rows = [(0, 0)]
    for _ in range(cfg.n_steps):
        step(env, state, rng)
        rows.append((state.steps, state.position))
    _emit_rows(("step", "position"), rows, cfg)
    return EXIT_OK


def _cmd_simulate_idla(args) -> int:
    cfg = _load_config(args)
    _require(cfg, n_steps=10000)
    env = cfg.environment()
    environment.ensure_valid(env)
    points = idla.run_trajectory(env, cfg.n_steps, cfg.master_seed, record_every=cfg.record_every)
    rows = [(p.n, p.d, p.x) for p in points]
    _emit_rows(("n", "d", "x"), rows, cfg)
    return EXIT_OK


def _cmd_simulate_pbm(args) -> int:
    cfg = _load_config(args)
    _require(cfg, dt=pbm.DEFAULT_DT, t_max=1.0, alpha=0.0, beta=0.0)
    rng = philox_stream(cfg.master_seed, "simulate-pbm")
    path = pbm.sample_path(cfg.alpha, cfg.beta, cfg.t_max, cfg.dt, rng)
    rows = [(s.t, s.y, s.b, s.m, s.i) for s in path]
    _emit_rows(("t", "y", "b", "m", "i"), rows, cfg)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    _require(cfg, n_steps=10000, replicas=8, alphas=[0.0, 0.5], betas=[0.0, 0.5])
    rows = harness.sweep(
        cfg.alphas, cfg.betas, cfg.n_steps, cfg.replicas, cfg.master_seed, workers=cfg.workers
    )
    _emit_rows(
        ("alpha", "beta", "p_theory", "x_mean", "x_stderr"),
        [(r.alpha, r.beta, "" if r.p_theory is None else r.p_theory, r.x_mean, r.x_stderr) for r in rows],
        cfg,
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = _load_config(args)
    env = cfg.environment()
    experiment = args.experiment
    if experiment == "lln":
        _require(cfg, n_steps=10000, replicas=20, slack_c=harness.DEFAULT_SLACK_C)
        report = harness.lln_experiment(
            env, cfg.n_steps, cfg.replicas, cfg.master_seed, slack_c=cfg.slack_c, workers=cfg.workers
        )
        _emit({"experiment": "lln", "report": report.to_dict(), "verdict": report.verdict}, cfg)
        return EXIT_OK if report.verdict in (harness.PASS, harness.INCONCLUSIVE) else EXIT_FAIL
    if experiment == "hn":
        _require(cfg, n=1000, x=0.3, replicas=10000)
        est = harness.estimate_h_n(env, cfg.n, cfg.x, cfg.replicas, cfg.master_seed, workers=cfg.workers)
        payload = {"experiment": "hn", "n": cfg.n, "x": cfg.x, "estimate": est.to_dict()}
        regime = environment.classify(env)
        if regime.tag is environment.RegimeTag.FIXED_POINT:
            h_lim = theory.h_exact(regime.alpha, regime.beta, cfg.x)
            payload["h_limit"] = h_lim
            payload["gap"] = abs(est.mean - h_lim)
        _emit(payload, cfg)
        return EXIT_OK
    if experiment == "transient":
        _require(cfg, replicas=4000, escape_radius=harness.DEFAULT_ESCAPE_RADIUS)
        est = harness.estimate_p_transient(
            env, cfg.replicas, cfg.escape_radius, cfg.master_seed, workers=cfg.workers
        )
        _emit({"experiment": "transient", "report": est.to_dict()}, cfg)
        return EXIT_OK if est.consistent else EXIT_FAIL
    if experiment == "clt":
        _require(cfg, n=10000, replicas=10000, dt=pbm.DEFAULT_DT)
        report = harness.clt_check(env, cfg.n, cfg.replicas, cfg.dt, cfg.master_seed, workers=cfg.workers)
        _emit({"experiment": "clt", "report": report.to_dict()}, cfg)
        return EXIT_OK if report.passed else EXIT_FAIL
    if experiment == "sa":
        _require(cfg, n_steps=2000)
        report = harness.sa_diagnostics(env, cfg.n_steps, cfg.master_seed, workers=cfg.workers)
        _emit({"experiment": "sa", "report": report.to_dict()}, cfg)
        return EXIT_OK if report.within_bound else EXIT_FAIL
    if experiment == "dominance":
        _require(cfg, n=1000, x=0.5, replicas=10000)
        env_lo = CookieEnvironment(
            tuple(args.pos_lo or ()), tuple(args.neg_lo or ())
        )
        report = harness.dominance_check(
            env, env_lo, cfg.n, cfg.x, cfg.replicas, cfg.master_seed, workers=cfg.workers
        )
        _emit({"experiment": "dominance", "report": report.to_dict()}, cfg)
        return EXIT_OK if report.passed else EXIT_FAIL
    raise ValueError(f"unknown experiment {experiment!r}")


def _add_common(parser: argparse.ArgumentParser, *, with_env: bool = True) -> None:
    parser.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
    parser.add_argument("--seed", type=int, help="master seed (required somewhere: flag or config)")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("json", "csv"), dest="format", help="output format")
    parser.add_argument("--workers", type=int, help="parallel workers (results are worker-count invariant)")
    if with_env:
        parser.add_argument("--pos", dest="pos_cookies", type=_parse_cookie_list, help="positive-side cookies, e.g. '0.75,0.75'")
        parser.add_argument("--neg", dest="neg_cookies", type=_parse_cookie_list, help="negative-side cookies")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cookie-idla",
        description="Internal DLA with cookie random walks: simulation and verification",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-walk", help="dump one walk trajectory")
    _add_common(p)
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.set_defaults(func=_cmd_simulate_walk)

    p = sub.add_parser("simulate-idla", help="dump one cluster-boundary trajectory")
    _add_common(p)
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.set_defaults(func=_cmd_simulate_idla)

    p = sub.add_parser("simulate-pbm", help="dump one perturbed-BM path")
    _add_common(p, with_env=False)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.set_defaults(func=_cmd_simulate_pbm)

    p = sub.add_parser("theory", help="analytic values")
    t_sub = p.add_subparsers(dest="theory_op", required=True)
    for op in ("h", "fixed-point"):
        tp = t_sub.add_parser(op)
        tp.add_argument("--alpha", type=float, required=True)
        tp.add_argument("--beta", type=float, required=True)
        if op == "h":
            tp.add_argument("--x", type=float, required=True)
        tp.add_argument("--out")
        tp.set_defaults(func=_cmd_theory)
    tp = t_sub.add_parser("predict")
    _add_common(tp)
    tp.set_defaults(func=_cmd_theory)

    p = sub.add_parser("verify", help="run a verification experiment")
    p.add_argument("experiment", choices=("lln", "hn", "transient", "clt", "sa", "dominance"))
    _add_common(p)
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--x", type=float)
    p.add_argument("--replicas", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--escape-radius", dest="escape_radius", type=int)
    p.add_argument("--slack-c", dest="slack_c", type=float)
    p.add_argument("--pos-lo", dest="pos_lo", type=_parse_cookie_list, help="dominated environment (dominance only)")
    p.add_argument("--neg-lo", dest="neg_lo", type=_parse_cookie_list)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("sweep", help="limit surface over a drift grid")
    _add_common(p, with_env=False)
    p.add_argument("--alphas", type=_parse_cookie_list)
    p.add_argument("--betas", type=_parse_cookie_list)
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.add_argument("--replicas", type=int)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # simulation-level failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
