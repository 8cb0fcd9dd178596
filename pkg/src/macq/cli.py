"""Command-line front end.

Subcommands dispatch to the solvers and the simulator and emit a CSV table
plus a single-line JSON summary (schema ``macq.v1``).  By default both go to
stdout (CSV first, JSON last); ``--out-csv`` / ``--out-json`` redirect either
to a file.  Exit codes: 0 success, 2 validation error, 3 solver
non-convergence, 4 instability.  All errors are also printed as single-line
JSON on stderr.

Config files use ``key = value`` lines (``#`` comments allowed).  Keys may be
dotted for grouping (``sim.slots = 200000``); only the last component is
matched against the flag name, and explicit flags win over the file.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time

from . import coupled_chains, evt, gilbert_queue, meanfield, repro, sim
from .core import (BernoulliExceedance, ConvergenceError, GilbertElliott,
                   InstabilityError, StationaryMixture, SystemConfig,
                   ValidationError)

SCHEMA = "macq.v1"


# ---------------------------------------------------------------------------
# formatting

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _emit_csv(header, rows, path):
    text = ",".join(header) + "\n"
    for row in rows:
        text += ",".join(_fmt(v) for v in row) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _emit_json(summary, path):
    text = json.dumps(summary, sort_keys=True) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _summary(command, inputs, outputs, residuals, t0):
    return {"schema": SCHEMA, "command": command, "inputs": inputs,
            "outputs": outputs, "residuals": residuals,
            "runtime_s": time.time() - t0}


# ---------------------------------------------------------------------------
# config file

def _parse_value(raw: str):
    s = raw.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def load_config(path: str) -> dict:
    """Parse a ``key = value`` config file into a flat dict keyed by the
    last dotted component of each key."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValidationError(
                    [f"{path}:{lineno}: expected 'key = value', "
                     f"got {stripped!r}"])
            key, _, raw = stripped.partition("=")
            name = key.strip().split(".")[-1].replace("-", "_")
            if not name:
                raise ValidationError([f"{path}:{lineno}: empty key"])
            out[name] = _parse_value(raw)
    return out


# ---------------------------------------------------------------------------
# argument plumbing

def _add_common(p):
    p.add_argument("--config", help="key = value config file; flags given "
                   "on the command line override it")
    p.add_argument("--out-csv", default="-", metavar="PATH",
                   help="CSV destination ('-' = stdout; default stdout)")
    p.add_argument("--out-json", default="-", metavar="PATH",
                   help="JSON summary destination ('-' = stdout; "
                   "default stdout)")
    p.add_argument("--seed", type=int, default=12345,
                   help="base RNG seed (default 12345)")


def _add_sim_shape(p, slots=1_000_000, reps=1):
    p.add_argument("--slots", type=int, default=slots,
                   help=f"simulated slots per replication "
                   f"(default {slots})")
    p.add_argument("--warmup", type=int, default=-1,
                   help="warmup slots discarded before measuring "
                   "(-1 = 10%% of the horizon; default -1)")
    p.add_argument("--replications", type=int, default=reps,
                   help=f"independent replications (default {reps})")


def _add_channel_flags(p):
    p.add_argument("--p-exc", type=float,
                   help="per-slot exceedance probability (memoryless "
                   "channel; default 1/K)")
    p.add_argument("--alpha", type=float,
                   help="Good->Bad transition probability (selects the "
                   "two-state burst channel together with --beta)")
    p.add_argument("--beta", type=float,
                   help="Bad->Good transition probability")
    p.add_argument("--mu-g", type=float, default=None,
                   help="Good-state rate/location parameter")
    p.add_argument("--sigma-g", type=float, default=1.0,
                   help="Good-state scale parameter (default 1.0)")
    p.add_argument("--mu-b", type=float, default=None,
                   help="Bad-state rate/location parameter")
    p.add_argument("--sigma-b", type=float, default=0.5,
                   help="Bad-state scale parameter (default 0.5)")


def _channel_from(args):
    if args.alpha is not None or args.beta is not None:
        missing = [n for n in ("alpha", "beta", "mu_g", "mu_b")
                   if getattr(args, n) is None]
        if missing:
            raise ValidationError(
                [f"burst channel needs --{n.replace('_', '-')}"
                 for n in missing])
        return GilbertElliott(alpha=args.alpha, beta=args.beta,
                              mu_g=args.mu_g, sigma_g=args.sigma_g,
                              mu_b=args.mu_b, sigma_b=args.sigma_b)
    p = args.p_exc if args.p_exc is not None else 1.0 / args.K
    return BernoulliExceedance(p)


def _mixture_from(args) -> StationaryMixture:
    return StationaryMixture(p=args.p, q=1.0 - args.p, mu_g=args.mu_g,
                             sigma_g=args.sigma_g, mu_b=args.mu_b,
                             sigma_b=args.sigma_b)


def _parse_grid(spec: str):
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ValidationError(
            [f"--grid must be start:stop:step, got {spec!r}"]) from None
    if step <= 0 or stop < start:
        raise ValidationError([f"bad grid {spec!r}"])
    n = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(n)]


# ---------------------------------------------------------------------------
# subcommands

def _cmd_sim(args, t0):
    ch = _channel_from(args)
    cfg = SystemConfig(K=args.K, lambda_total=args.lambda_total,
                       slots=args.slots, warmup=args.warmup,
                       seed=args.seed, replications=args.replications)
    rep = sim.run_sim(cfg, ch)
    d = rep.as_dict()
    header = list(d)
    _emit_csv(header, [tuple(d[h] for h in header)], args.out_csv)
    inputs = {"K": args.K, "lambda_total": args.lambda_total,
              "slots": args.slots, "warmup": args.warmup,
              "replications": args.replications, "seed": args.seed,
              "channel": repr(ch)}
    _emit_json(_summary("sim", inputs, d, {}, t0), args.out_json)
    return 0


def _cmd_model1(args, t0):
    p_exc = args.p_exc if args.p_exc is not None else 1.0 / args.K
    sol = coupled_chains.solve_model1(args.K, args.lambda_total / args.K,
                                      p_exc, tol=args.tol,
                                      max_iter=args.max_iter)
    d = sol.as_dict()
    header = list(d)
    _emit_csv(header, [tuple(d[h] for h in header)], args.out_csv)
    inputs = {"K": args.K, "lambda_total": args.lambda_total,
              "p_exc": p_exc, "tol": args.tol, "max_iter": args.max_iter}
    _emit_json(_summary("model1", inputs, d,
                        {"fixed_point": sol.residual}, t0), args.out_json)
    return 0


def _cmd_model2(args, t0):
    tau = args.tau_per_user if args.tau_per_user is not None \
        else 1.0 / args.K
    sol = meanfield.solve_pcoll(args.lambda_total / args.K, tau, K=args.K,
                                mode=args.mode)
    d = sol.as_dict()
    header = list(d)
    _emit_csv(header, [tuple(d[h] for h in header)], args.out_csv)
    inputs = {"K": args.K, "lambda_total": args.lambda_total,
              "tau_per_user": tau, "mode": args.mode}
    _emit_json(_summary("model2", inputs, d,
                        {"fixed_point": sol.residual}, t0), args.out_json)
    return 0


def _cmd_model3(args, t0):
    sol = gilbert_queue.solve_model3(args.K, args.lambda_total / args.K,
                                     args.mu_g, args.mu_b, args.alpha,
                                     args.beta, tol=args.tol,
                                     max_iter=args.max_iter)
    d = sol.as_dict()
    header = list(d)
    _emit_csv(header, [tuple(d[h] for h in header)], args.out_csv)
    inputs = {"K": args.K, "lambda_total": args.lambda_total,
              "mu_g": args.mu_g, "mu_b": args.mu_b, "alpha": args.alpha,
              "beta": args.beta, "tol": args.tol,
              "max_iter": args.max_iter}
    _emit_json(_summary("model3", inputs, d,
                        {"fixed_point": sol.residual}, t0), args.out_json)
    return 0


def _cmd_evt(args, t0):
    mix = _mixture_from(args)
    c = evt.gumbel_constants(args.K, mix)
    out = {
        "a_K": c.a_K,
        "b_K": c.b_K,
        "expected_max": evt.expected_max(args.K, mix),
        "threshold": evt.threshold_for_one(args.K, mix,
                                           method=args.threshold_method),
        "distributed_capacity": evt.distributed_capacity(
            args.K, mix, asymptotic_slot_prob=not args.finite_slot_prob),
        "utilized_slot_prob": evt.utilized_slot_probability(
            args.K, asymptotic=not args.finite_slot_prob),
    }
    header = list(out)
    _emit_csv(header, [tuple(out[h] for h in header)], args.out_csv)
    inputs = {"K": args.K, "p": args.p, "mu_g": args.mu_g,
              "sigma_g": args.sigma_g, "mu_b": args.mu_b,
              "sigma_b": args.sigma_b,
              "threshold_method": args.threshold_method,
              "finite_slot_prob": args.finite_slot_prob}
    residuals = {}
    if args.threshold_method == "numeric":
        from .core import mixture_sf
        residuals["sf_minus_1_over_K"] = (
            mixture_sf(out["threshold"], mix) - 1.0 / args.K)
    _emit_json(_summary("evt", inputs, out, residuals, t0), args.out_json)
    return 0


def _cmd_sweep(args, t0):
    grid = _parse_grid(args.grid)
    cfg = SystemConfig(K=args.K, lambda_total=args.lambda_total,
                       slots=args.slots, warmup=args.warmup,
                       seed=args.seed, replications=args.replications)
    pts = sim.sweep_threshold(cfg, BernoulliExceedance(0.5), grid)
    header = ["p_exc", "throughput", "mean_delay", "avg_backlogged"]
    rows = [(p, thr, dly, nb) for (p, thr, dly, nb, _) in pts]
    _emit_csv(header, rows, args.out_csv)
    best = max(rows, key=lambda r: r[1])
    inputs = {"K": args.K, "lambda_total": args.lambda_total,
              "grid": args.grid, "slots": args.slots,
              "warmup": args.warmup, "replications": args.replications,
              "seed": args.seed}
    outputs = {"points": len(rows), "best_p_exc": best[0],
               "best_throughput": best[1]}
    _emit_json(_summary("sweep", inputs, outputs, {}, t0), args.out_json)
    return 0


def _cmd_maxcap(args, t0):
    # alpha = 1-p, beta = p makes consecutive states independent draws with
    # stationary Good probability p, so --p alone pins the channel mix
    ch = GilbertElliott(alpha=1.0 - args.p, beta=args.p, mu_g=args.mu_g,
                        sigma_g=args.sigma_g, mu_b=args.mu_b,
                        sigma_b=args.sigma_b)
    mix = StationaryMixture.from_gilbert_elliott(ch)
    c = evt.gumbel_constants(args.K, mix)
    m = sim.sample_max_capacity(args.K, ch, args.samples, mode=args.mode,
                                seed=args.seed)
    mean = float(m.mean())
    predicted = evt.expected_max(args.K, mix)
    header = ["mode", "n_samples", "sample_mean", "predicted_mean",
              "a_K", "b_K"]
    _emit_csv(header, [(args.mode, args.samples, mean, predicted,
                        c.a_K, c.b_K)], args.out_csv)
    inputs = {"K": args.K, "p": args.p, "mu_g": args.mu_g,
              "sigma_g": args.sigma_g, "mu_b": args.mu_b,
              "sigma_b": args.sigma_b, "samples": args.samples,
              "mode": args.mode, "seed": args.seed}
    outputs = {"sample_mean": mean, "predicted_mean": predicted,
               "a_K": c.a_K, "b_K": c.b_K}
    _emit_json(_summary("maxcap", inputs, outputs,
                        {"relative_gap": abs(mean - predicted)
                         / predicted}, t0), args.out_json)
    return 0


def _cmd_exceed(args, t0):
    from .core import GaussianIID
    mix = StationaryMixture(p=1.0, q=0.0, mu_g=args.mu, sigma_g=args.sigma,
                            mu_b=args.mu, sigma_b=args.sigma)
    u, achieved = evt.level_for_intensity(args.n, args.tau, mix)
    ch = GaussianIID(mu=args.mu, sigma=args.sigma, threshold=u)
    pmf = sim.count_exceedances(args.n, args.tau, ch, args.blocks,
                                seed=args.seed)
    header = ["k", "empirical", "poisson"]
    rows = []
    for j in range(max(len(pmf), 8)):
        emp = float(pmf[j]) if j < len(pmf) else 0.0
        ref = math.exp(-args.tau) * args.tau ** j / math.factorial(j)
        rows.append((j, emp, ref))
    _emit_csv(header, rows, args.out_csv)
    inputs = {"n": args.n, "tau": args.tau, "blocks": args.blocks,
              "mu": args.mu, "sigma": args.sigma, "seed": args.seed}
    outputs = {"level": u, "n_times_tail": achieved}
    _emit_json(_summary("exceed", inputs, outputs,
                        {"intensity_gap": achieved - args.tau}, t0),
               args.out_json)
    return 0


def _cmd_repro(args, t0):
    kwargs = {"seed": args.seed}
    if args.slots is not None:
        kwargs["slots"] = args.slots
    if args.replications is not None:
        kwargs["replications"] = args.replications
    if args.K is not None:
        kwargs["K"] = args.K
    res = repro.run_repro(args.id, **kwargs)
    _emit_csv(res.header, res.rows, args.out_csv)
    inputs = {"id": args.id, **kwargs}
    outputs = {"passed": res.passed, "rows": len(res.rows), **res.notes}
    _emit_json(_summary("repro", inputs, outputs, {}, t0), args.out_json)
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="macq",
        description="Analytic models, capacity scaling laws and a slotted "
        "simulator for threshold-based distributed multiple access.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="run the interacting-queue simulator")
    p.add_argument("--K", type=int, required=True, help="number of users")
    p.add_argument("--lambda-total", type=float, required=True,
                   help="total packet arrival rate per slot")
    _add_channel_flags(p)
    _add_sim_shape(p)
    _add_common(p)
    p.set_defaults(fn=_cmd_sim)

    p = sub.add_parser("model1",
                       help="coupled status/queue chain fixed point")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--lambda-total", type=float, required=True)
    p.add_argument("--p-exc", type=float, default=None,
                   help="exceedance probability (default 1/K)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=1000)
    _add_common(p)
    p.set_defaults(fn=_cmd_model1)

    p = sub.add_parser("model2",
                       help="decoupled constant-collision fixed point")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--lambda-total", type=float, required=True)
    p.add_argument("--tau-per-user", type=float, default=None,
                   help="per-slot attempt rate of a backlogged user "
                   "(default 1/K)")
    p.add_argument("--mode", choices=["asymptotic", "exact-K"],
                   default="exact-K")
    _add_common(p)
    p.set_defaults(fn=_cmd_model2)

    p = sub.add_parser("model3",
                       help="two-state burst-channel queue fixed point")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--lambda-total", type=float, required=True)
    p.add_argument("--mu-g", type=float, required=True,
                   help="per-user Good-state service rate")
    p.add_argument("--mu-b", type=float, required=True,
                   help="per-user Bad-state service rate")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=500)
    _add_common(p)
    p.set_defaults(fn=_cmd_model3)

    p = sub.add_parser("evt", help="extreme-value capacity constants")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--p", type=float, required=True,
                   help="stationary Good-state probability")
    p.add_argument("--mu-g", type=float, required=True)
    p.add_argument("--sigma-g", type=float, required=True)
    p.add_argument("--mu-b", type=float, required=True)
    p.add_argument("--sigma-b", type=float, required=True)
    p.add_argument("--threshold-method",
                   choices=["closed_form", "numeric"],
                   default="closed_form")
    p.add_argument("--finite-slot-prob", action="store_true",
                   help="use the finite-K utilized-slot probability "
                   "(1-1/K)^(K-1) instead of its limit 1/e")
    _add_common(p)
    p.set_defaults(fn=_cmd_evt)

    p = sub.add_parser("sweep",
                       help="simulate a grid of exceedance probabilities")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--lambda-total", type=float, required=True)
    p.add_argument("--grid", required=True, metavar="START:STOP:STEP",
                   help="inclusive exceedance-probability grid")
    _add_sim_shape(p, slots=1_000_000, reps=1)
    _add_common(p)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("maxcap",
                       help="sample per-slot maximum capacities")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--p", type=float, required=True,
                   help="stationary Good-state probability")
    p.add_argument("--mu-g", type=float, required=True)
    p.add_argument("--sigma-g", type=float, required=True)
    p.add_argument("--mu-b", type=float, required=True)
    p.add_argument("--sigma-b", type=float, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--mode", choices=["stationary", "evolving"],
                   default="stationary")
    _add_common(p)
    p.set_defaults(fn=_cmd_maxcap)

    p = sub.add_parser("exceed",
                       help="empirical exceedance-count distribution")
    p.add_argument("--n", type=int, required=True,
                   help="draws per block")
    p.add_argument("--tau", type=float, required=True,
                   help="target mean exceedances per block")
    p.add_argument("--blocks", type=int, default=20_000)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(fn=_cmd_exceed)

    p = sub.add_parser("repro",
                       help="run a canned model-vs-simulation experiment")
    p.add_argument("id", choices=sorted(repro.REPROS),
                   help="experiment identifier")
    p.add_argument("--K", type=int, default=None,
                   help="override the scenario's user count / count cap")
    p.add_argument("--slots", type=int, default=None)
    p.add_argument("--replications", type=int, default=None)
    _add_common(p)
    p.set_defaults(fn=_cmd_repro)

    return ap


def _apply_config(ap, argv):
    """If --config is present, load the file and install its values as
    parser defaults so explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return ap.parse_args(argv)
    values = load_config(known.config)
    if argv and not argv[0].startswith("-"):
        for sp in ap._subparsers._group_actions[0].choices.values():
            for action in sp._actions:
                if action.dest in values:
                    action.default = values[action.dest]
                    action.required = False
    return ap.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    t0 = time.time()
    try:
        args = _apply_config(ap, argv)
        return args.fn(args, t0)
    except ValidationError as exc:
        _err("ValidationError", exc)
        return 2
    except ConvergenceError as exc:
        _err("ConvergenceError", exc)
        return 3
    except InstabilityError as exc:
        _err("InstabilityError", exc)
        return 4


def _err(kind, exc):
    sys.stderr.write(json.dumps(
        {"error": kind, "message": str(exc)}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
