"""conformal-cantor command line: validate, limits, verify, search, render.

Exit codes: 0 success, 1 verification or certificate failure, 2 input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from conformal_cantor.cantor import covering_ok
from conformal_cantor.certificate import validate_params, verify_certificate
from conformal_cantor.config import Config, ConfigError, load_config
from conformal_cantor.config_space import RelativeConfig, search_intersection
from conformal_cantor.geometry import AffineMap
from conformal_cantor.limits import TruncationError, limit_geometry, transition_affine
from conformal_cantor.report import RunReport
from conformal_cantor.symbolic import NegSequence

OK, FAILED, INPUT_ERROR = 0, 1, 2
MAX_WITNESSES = 50


class InputError(ValueError):
    pass


def parse_complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise InputError(f"expected RE,IM but got {text!r}")


def parse_theta(text: str, cfg: Config) -> NegSequence:
    """Comma-separated letters, oldest first; `a^n` repeats a letter n times."""
    lookup = {str(a): a for a in cfg.system.letters}
    symbols = []
    for tok in text.split(","):
        tok = tok.strip()
        name, _, rep = tok.partition("^")
        if name not in lookup:
            raise InputError(f"unknown letter {name!r} in theta")
        try:
            count = int(rep) if rep else 1
        except ValueError:
            raise InputError(f"bad repeat count in {tok!r}") from None
        if count < 1:
            raise InputError(f"bad repeat count in {tok!r}")
        symbols += [lookup[name]] * count
    theta = NegSequence(tuple(symbols))
    for pair in zip(theta.symbols, theta.symbols[1:]):
        if pair not in cfg.system.subshift.transitions:
            raise InputError(f"theta is inadmissible at {pair!r}")
    return theta


def _need_preset(cfg: Config, what: str) -> None:
    if cfg.params is None:
        raise InputError(f"{what} needs a buzzard preset config")


def cmd_validate(cfg: Config, args) -> tuple:
    rep = RunReport("validate", {"config": cfg.digest})
    problems = cfg.system.check()
    ok = not problems
    rep.add("system.letters", len(cfg.system.letters))
    rep.add("system.affine", cfg.system.is_affine)
    rep.add("system.mu", cfg.system.mu)
    for i, msg in enumerate(problems):
        rep.add(f"system.violation.{i}", msg)
    if cfg.params is not None:
        p = cfg.params
        for name in ("delta", "c0", "c1", "kappa0", "kappa1", "kappa2", "c_prime", "lambda_growth"):
            rep.add(f"param.{name}", getattr(p, name))
        rep.add("param.lambda_max", p.lambda_max)
        rep.add("param.n_max", p.n_max)
        if not covering_ok(p.c0, p.c1):
            rep.add("system.violation.covering", "covering condition c1 < 3c0/(2+c0) violated")
            ok = False
        pr = validate_params(p)
        for i, c in enumerate(pr.checks):
            rep.add(f"check.{i}", f"{'pass' if c.passed else 'FAIL'} | {c.name} | lhs={c.lhs:.17g} rhs={c.rhs:.17g} slack={c.slack:.6e}")
        rep.add("binding.x2", pr.binding_x2)
        rep.add("binding.bound", pr.binding_bound)
        rep.add("binding.delta_limit", pr.delta_limit)
        rep.add("optimum.kappa0", pr.optimal_kappa0)
        rep.add("optimum.x2", pr.optimal_x2)
        ok = ok and pr.passed
    rep.add("status", "pass" if ok else "fail")
    return rep, OK if ok else FAILED


def cmd_limits(cfg: Config, args) -> tuple:
    theta = parse_theta(args.theta or _default_theta(cfg), cfg)
    if args.depth is not None:
        if args.depth < 0:
            raise InputError("depth must be non-negative")
        theta = theta.view(min(args.depth, theta.depth))
    rep = RunReport("limits", {"config": cfg.digest, "theta": theta.symbols, "tol": args.tol})
    sysm = cfg.system
    try:
        k = limit_geometry(sysm, theta, args.tol, cfg.grid)
    except TruncationError as exc:
        rep.add("status", "truncation")
        rep.add("error", str(exc))
        rep.add("achievable_radius", exc.achievable)
        return rep, FAILED
    rep.add("depth", k.depth)
    rep.add("error_radius", k.error_radius)
    if k.exact is not None:
        rep.add("k.alpha", k.exact.alpha)
        rep.add("k.beta", k.exact.beta)
        rep.add("k", str(k.exact))
    else:
        for n, s in enumerate(k.steps, start=1):
            rep.add(f"step.{n}", s)
        base = sysm.base_point(theta.last)
        rep.add("k.derivative_at_base", complex(k.derivative(base)))
    for b in sysm.subshift.successors(theta.last):
        try:
            t = transition_affine(sysm, theta, b, args.tol)
        except TruncationError:
            continue
        rep.add(f"transition.{b}.alpha", t.map.alpha)
        rep.add(f"transition.{b}.beta", t.map.beta)
        rep.add(f"transition.{b}.error_radius", t.error_radius)
    rep.add("status", "ok")
    return rep, OK


def _default_theta(cfg: Config) -> str:
    first = cfg.system.letters[len(cfg.system.letters) // 2]
    return f"{first}^{1 if cfg.system.is_affine else 40}"


def cmd_search(cfg: Config, args) -> tuple:
    alpha = parse_complex(args.alpha) if args.alpha else 1 + 0j
    beta = parse_complex(args.beta) if args.beta else 0j
    if alpha == 0:
        raise InputError("alpha must be non-zero")
    theta = parse_theta(args.theta or _default_theta(cfg), cfg)
    depth = 10 if args.depth is None else args.depth
    if depth < 1:
        raise InputError("depth must be at least 1")
    rc = RelativeConfig(theta, theta, AffineMap(alpha, beta))
    rep = RunReport(
        "search",
        {"config": cfg.digest, "alpha": alpha, "beta": beta, "theta": theta.symbols, "depth": depth, "tol": args.tol},
    )
    try:
        res = search_intersection(cfg.system, cfg.system, rc, depth, tol=args.tol)
    except TruncationError as exc:
        raise InputError(f"theta too short for tol: {exc}") from None
    rep.add("status", res.status)
    rep.add("nodes", res.nodes)
    rep.add("pruned", res.pruned)
    if res.found:
        rep.add("point", res.point)
        rep.add("left_word", res.left_word.symbols)
        rep.add("right_word", res.right_word.symbols)
    else:
        rep.add("certified_depth", res.certified_depth)
        rep.add("deepest_left", res.deepest[0].symbols)
        rep.add("deepest_right", res.deepest[1].symbols)
    return rep, OK if res.status != "budget" else FAILED


def cmd_verify(cfg: Config, args) -> tuple:
    _need_preset(cfg, "verify")
    p = cfg.params
    if args.samples < 1 or args.threads < 1:
        raise InputError("samples and threads must be positive")
    rep = RunReport("verify", {"config": cfg.digest, "samples": args.samples, "seed": args.seed})
    t0 = time.perf_counter()
    vr = verify_certificate(p, args.samples, args.seed, args.threads)
    rep.timings["verify"] = time.perf_counter() - t0
    rep.add("n_samples", vr.n_samples)
    rep.add("n_boundary", vr.n_boundary)
    rep.add("n_interior", vr.n_interior)
    rep.add("n_max", vr.n_max)
    rep.add("max_chain", vr.max_chain)
    rep.add("mean_chain", round(vr.mean_chain, 6))
    rep.add("chain_histogram", ";".join(f"{k}:{v}" for k, v in vr.chain_histogram.items()))
    rep.add("min_initial_margin", vr.min_initial_margin)
    rep.add("min_final_margin", vr.min_final_margin)
    rep.add("failures", len(vr.failures))
    for i, f in enumerate(vr.failures[:MAX_WITNESSES]):
        rep.add(f"witness.{i}", f"{f.kind} | sample={f.index} alpha={f.alpha.real:.17g},{f.alpha.imag:.17g} "
                f"beta={f.beta.real:.17g},{f.beta.imag:.17g} steps={f.steps} | {f.detail}")
    if args.svg:
        from conformal_cantor.plotting import render_certificate_diagram

        counts = render_certificate_diagram(p, vr.traces, args.svg)
        rep.add("svg", args.svg)
        rep.add("svg.arrows", counts["arrows"])
    rep.add("status", "pass" if vr.passed else "fail")
    return rep, OK if vr.passed else FAILED


def cmd_render(cfg: Config, args) -> tuple:
    from conformal_cantor import plotting

    if not args.svg:
        raise InputError("render needs --svg PATH")
    depth = 1 if args.depth is None else args.depth
    if depth < 0:
        raise InputError("depth must be non-negative")
    rep = RunReport("render", {"config": cfg.digest, "target": args.target, "depth": depth})
    if args.target == "cylinders":
        n = plotting.render_cylinders(cfg.system, depth, args.svg)
        rep.add("squares", n)
    elif args.target == "lambda-slice":
        _need_preset(cfg, "lambda-slice")
        from conformal_cantor.horseshoe import HorseshoeMap, unstable_slice_cantor

        try:
            F = HorseshoeMap(cfg.params)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        n = plotting.render_lambda_slice(unstable_slice_cantor(F, depth), cfg.params.c0, args.svg)
        rep.add("squares", n)
    elif args.target == "certificate-diagram":
        _need_preset(cfg, "certificate-diagram")
        vr = verify_certificate(cfg.params, args.samples, args.seed)
        counts = plotting.render_certificate_diagram(cfg.params, vr.traces, args.svg)
        for k, v in counts.items():
            rep.add(k, v)
    else:
        raise InputError(f"unsupported target {args.target!r}")
    rep.add("svg", args.svg)
    return rep, OK


COMMANDS = {
    "validate": cmd_validate,
    "limits": cmd_limits,
    "verify": cmd_verify,
    "search": cmd_search,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conformal-cantor", description=__doc__.splitlines()[0])
    ap.add_argument("--log-level", default="WARNING")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
        return p

    common(sub.add_parser("validate", help="check system invariants and certificate parameters"))
    p = common(sub.add_parser("limits", help="limit geometry and transition affines along theta"))
    p.add_argument("--theta", help="letters oldest first, e.g. '4^20,3'")
    p.add_argument("--depth", type=int)
    p = common(sub.add_parser("verify", help="sample L and check recurrence"))
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--svg", metavar="PATH")
    p = common(sub.add_parser("search", help="intersection search for a relative configuration"))
    p.add_argument("--alpha", metavar="RE,IM")
    p.add_argument("--beta", metavar="RE,IM")
    p.add_argument("--theta")
    p.add_argument("--depth", type=int)
    p = common(sub.add_parser("render", help="SVG figures"))
    p.add_argument("target", choices=["lambda-slice", "certificate-diagram", "cylinders"])
    p.add_argument("--depth", type=int)
    p.add_argument("--svg", metavar="PATH")
    p.add_argument("--samples", type=int, default=2_000)
    p.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        rep, code = COMMANDS[args.command](cfg, args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except ValueError as exc:
        # inadmissible words and malformed systems surface as ValueError from the library
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    rep.timings["total"] = time.perf_counter() - t0
    text = rep.render()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    rep.log_timings()
    return code


if __name__ == "__main__":
    raise SystemExit(main())
