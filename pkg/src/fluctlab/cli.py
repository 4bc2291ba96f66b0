"""Command-line front end.

Every command is a thin shell over one library call: parse arguments,
run, emit CSV or JSON, map failures to exit codes.  Contract: 1 for
usage and configuration problems, 2 when an input violates a
mathematical assumption, 3 when a numeric certificate cannot be met,
and 4 from `verify` when a criterion measures out of band.  CSV output
is UTF-8 with '.' decimals and plain newlines; JSON is key-sorted so
identical runs emit identical bytes.
"""

from __future__ import annotations

import contextlib
import json
import math
import sys

import click

from .errors import AssumptionViolated, CertificateFailure, ConfigError

FMT = "%.17g"


def _fnum(v) -> str:
    return FMT % float(v)


@contextlib.contextmanager
def _out_stream(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _emit_json(doc: dict, path=None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    with _out_stream(path) as fh:
        fh.write(text)


def _csv(fh, header, rows) -> None:
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(_fnum(v) if isinstance(v, float) else str(v)
                          for v in row) + "\n")


class LawType(click.ParamType):
    name = "law"

    def convert(self, value, param, ctx):
        from . import steplaw
        try:
            return steplaw.parse_law(value)
        except Exception as exc:
            self.fail(f"bad law {value!r}: {exc}", param, ctx)


class KernelType(click.ParamType):
    name = "kernel"

    def convert(self, value, param, ctx):
        from . import chain
        try:
            spec = json.loads(value) if value.lstrip().startswith("{") \
                else {"family": value}
            return chain.kernel_from_spec(spec)
        except Exception as exc:
            self.fail(f"bad kernel {value!r}: {exc}", param, ctx)


LAW = LawType()
KERNEL = KernelType()


def _boundary(gconst, gsqrt, n):
    from .killedwalk import BoundarySpec
    if gsqrt is not None and gconst is not None:
        raise click.UsageError("give at most one of --gconst / --gsqrt")
    if gsqrt is not None:
        return BoundarySpec.from_callable(lambda k: gsqrt * math.sqrt(k), n)
    return BoundarySpec.constant(gconst or 0, n)


@click.group()
def cli():
    """Exact and simulated fluctuation theory for killed walks and chains.

    Set FLUCTLAB_THREADS to cap numeric thread pools; set
    FLUCTLAB_FORCE_PURE=1 to skip the compiled kernels.
    """


# ------------------------------------------------------------------ exact

@cli.group()
def exact():
    """Exact DP profiles of killed lattice walks."""


@exact.command("survival")
@click.option("--law", type=LAW, required=True)
@click.option("--x", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--out", default="-")
def exact_survival(law, x, n, out):
    """Per-step survival ledger of the walk started at x, killed at <= 0."""
    from .killedwalk import profile_to_csv, survival_profile
    prof = survival_profile(law, x, n)
    with _out_stream(out) as fh:
        profile_to_csv(prof, fh)


@exact.command("conditional")
@click.option("--law", type=LAW, required=True)
@click.option("--x", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--out", default="-")
def exact_conditional(law, x, n, out):
    """Endpoint law at time n conditioned on survival."""
    from .killedwalk import conditional_pmf
    pmf = conditional_pmf(law, x, n)
    rows = [(int(y), float(p)) for y, p in zip(pmf.sites(), pmf.probs)
            if p > 0.0]
    with _out_stream(out) as fh:
        _csv(fh, ("y", "prob"), rows)


@exact.command("boundary")
@click.option("--law", type=LAW, required=True)
@click.option("--n", type=int, required=True)
@click.option("--gconst", type=int, default=None,
              help="constant boundary level (default 0)")
@click.option("--gsqrt", type=float, default=None,
              help="boundary a*sqrt(k), floored to the lattice")
@click.option("--out", default="-")
def exact_boundary(law, n, gconst, gsqrt, out):
    """Survival ledger under a moving boundary g(k)."""
    from .killedwalk import moving_boundary_profile, profile_to_csv
    spec = _boundary(gconst, gsqrt, n)
    prof = moving_boundary_profile(law, spec, n)
    for remark in prof.remarks:
        click.echo(f"note: {remark}", err=True)
    with _out_stream(out) as fh:
        profile_to_csv(prof, fh)


# ----------------------------------------------------------------- oracle

@cli.group()
def oracle():
    """Closed-form reference values next to their DP counterparts."""


@oracle.command("refl")
@click.option("--x", type=int, required=True)
@click.option("--y", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--out", default="-")
def oracle_refl(x, y, n, out):
    """Reflection-difference pmf of the killed unit walk vs the DP."""
    from .killedwalk import survival_profile
    from .oracles import simple_refl_pmf
    from .steplaw import ssrw
    ref = simple_refl_pmf(x, y, n)
    prof = survival_profile(ssrw(), x, n, snapshots=(n,))
    dp = float(prof.snapshots[n].at(y))
    _emit_json({"x": x, "y": y, "n": n, "oracle": ref, "dp": dp,
                "diff": abs(ref - dp)}, out)


@oracle.command("hitting")
@click.option("--law", type=LAW, required=True)
@click.option("--x", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--out", default="-")
def oracle_hitting(law, x, n, out):
    """Cyclic-shift first-passage pmf vs the DP absorption mass."""
    from .killedwalk import survival_profile
    from .oracles import hitting_time_pmf
    ref = hitting_time_pmf(law, x, n)
    prof = survival_profile(law, x, n)
    dp = float(prof.absorbed_mass[n - 1])
    _emit_json({"x": x, "n": n, "oracle": ref, "dp": dp,
                "diff": abs(ref - dp)}, out)


# ----------------------------------------------------------------- series

@cli.group()
def series():
    """Generating-function routes and their cross-checks."""


@series.command("wh")
@click.option("--law", type=LAW, required=True)
@click.option("--N", "--n", "order", type=int, default=200,
              metavar="N", help="series order")
@click.option("--out", default="-")
def series_wh(law, order, out):
    """Residual of the two-factor identity at the requested order."""
    from .wienerhopf import wh_identity_residual
    r = wh_identity_residual(law, order)
    _emit_json({"order": order, "residual": r, "threshold": 1e-10,
                "passed": bool(r < 1e-10)}, out)


@series.command("gap")
@click.option("--law", type=LAW, required=True)
@click.option("--N", "--n", "order", type=int, default=200, metavar="N")
@click.option("--out", default="-")
def series_gap(law, order, out):
    """Max gap between series survival and DP survival through order N."""
    from .wienerhopf import spitzer_vs_dp_gap
    g = spitzer_vs_dp_gap(law, order)
    _emit_json({"order": order, "max_gap": g, "threshold": 1e-10,
                "passed": bool(g < 1e-10)}, out)


@series.command("factor")
@click.option("--law", type=LAW, required=True)
@click.option("--u", type=float, required=True)
@click.option("--N", "--n", "order", type=int, default=60, metavar="N")
@click.option("--out", default="-")
def series_factor(law, u, order, out):
    """Measure-level factorisation discrepancy and its truncation defect."""
    from .wienerhopf import dual_factorisation_check
    disc, defect = dual_factorisation_check(law, u, order)
    _emit_json({"u": u, "order": order, "discrepancy": disc,
                "defect": defect,
                "passed": bool(disc <= 1e-9 + defect)}, out)


# --------------------------------------------------------------- harmonic

@cli.group()
def harmonic():
    """Harmonic functions, majorants, and renewal quantities."""


@harmonic.command("v")
@click.option("--law", type=LAW, required=True)
@click.option("--x", type=int, required=True)
@click.option("--horizon", type=int, default=4000)
@click.option("--out", default="-")
def harmonic_v(law, x, horizon, out):
    """Certified bracket for V(x) = x + E[absorption depth]."""
    from .harmonic import estimate_v
    value, half = estimate_v(law, x, horizon=horizon)
    _emit_json({"x": x, "value": value, "half_width": half}, out)


@harmonic.command("margin")
@click.option("--law", type=LAW, required=True)
@click.option("--xmax", type=float, default=30.0)
@click.option("--step", type=float, default=0.25)
@click.option("--out", default="-")
def harmonic_margin(law, xmax, step, out):
    """Worst one-step defect of the superharmonic majorant on a grid."""
    import numpy as np
    from .harmonic import build_majorant, superharmonic_margin
    maj = build_majorant(law)
    xs = np.arange(0.0, xmax + step / 2, step)
    worst = superharmonic_margin(law, xs, maj)
    _emit_json({"A": maj.A, "R": maj.R, "x0": maj.x0, "xmax": xmax,
                "step": step, "worst_defect": worst,
                "passed": bool(worst <= 1e-10)}, out)


@harmonic.command("renewal")
@click.option("--law", type=LAW, required=True)
@click.option("--xmax", type=int, required=True)
@click.option("--out", default="-")
def harmonic_renewal(law, xmax, out):
    """Renewal function of the descending ladder magnitudes."""
    from .wienerhopf import renewal_function
    u, cert = renewal_function(law, xmax)
    click.echo(f"certified truncation error <= {cert:.3e}", err=True)
    with _out_stream(out) as fh:
        _csv(fh, ("x", "renewal"), [(i, float(v)) for i, v in enumerate(u)])


# --------------------------------------------------------------- simulate

def _sequence(family, law):
    from . import universal
    if family == "iid":
        if law is None:
            raise click.UsageError("--family iid needs --law")
        return universal.IidSequence(law)
    if family == "marginal":
        return universal.MarginalJumpSequence()
    if family == "cauchy":
        return universal.CauchySequence()
    raise click.UsageError(f"unknown family {family!r}")


@cli.group()
def simulate():
    """Monte Carlo estimates with counter-based, worker-free seeding."""


@simulate.command("passage")
@click.option("--family", type=click.Choice(["iid", "marginal"]),
              default="iid")
@click.option("--law", type=LAW, default=None)
@click.option("--n", type=int, required=True)
@click.option("--trials", type=int, default=100000)
@click.option("--seed", type=int, default=0)
@click.option("--gconst", type=float, default=None)
@click.option("--gsqrt", type=float, default=None)
@click.option("--out", default="-")
def simulate_passage(family, law, n, trials, seed, gconst, gsqrt, out):
    """Survival probability under a boundary, with a Wilson interval."""
    from . import universal
    seq = _sequence(family, law)
    if gconst is not None and gsqrt is not None:
        raise click.UsageError("give at most one of --gconst / --gsqrt")
    if gsqrt is not None:
        bnd = lambda k: gsqrt * math.sqrt(k)   # noqa: E731
    else:
        level = gconst or 0.0
        bnd = lambda k: level                  # noqa: E731
    est = universal.simulate_passage(seq, bnd, n, trials, seed=seed)
    doc = {"family": family, "n": n, "trials": trials, "seed": seed,
           "survivors": est.survivors, "p_hat": est.p_hat,
           "ci_lo": est.ci_lo, "ci_hi": est.ci_hi, "ug_hat": est.ug_hat}
    if est.survivors >= 100:
        scale = math.sqrt(seq.variance_sum(n))
        doc["ks_rayleigh"] = universal.ks_rayleigh_sample(
            est.endpoints - float(bnd(n)), scale)
    _emit_json(doc, out)


@simulate.command("divergence")
@click.option("--family", type=click.Choice(["iid", "marginal", "cauchy"]),
              default="marginal")
@click.option("--law", type=LAW, default=None)
@click.option("--n1", type=int, default=10 ** 3)
@click.option("--n2", type=int, default=10 ** 6)
@click.option("--eps", type=float, default=0.5)
@click.option("--out", default="-")
def simulate_divergence(family, law, n1, n2, eps, out):
    """Cumulative diffusive-scale jump rate at two checkpoints."""
    from .universal import divergence_diagnostic
    rep = divergence_diagnostic(_sequence(family, law),
                                checkpoints=(n1, n2), eps=eps)
    _emit_json({"family": family, "eps": eps,
                "checkpoints": list(rep.checkpoints),
                "values": list(rep.values), "ratio": rep.ratio(),
                "slope": rep.slope, "intercept": rep.intercept}, out)


# ------------------------------------------------------------------ chain

@cli.group("chain")
def chain_grp():
    """State-dependent chains: envelopes, tails, conditioning."""


@chain_grp.command("validate")
@click.option("--kernel", type=KERNEL, required=True)
@click.option("--majorant",
              type=click.Choice(["const", "wrapped", "pareto-log",
                                 "inverse-square"]),
              default="const")
@click.option("--bound", type=float, default=None,
              help="certain-region bound (default: kernel jump bound)")
@click.option("--tail-c", type=float, default=None,
              help="tail constant for the heavy-tailed majorants")
@click.option("--out", default="-")
def chain_validate(kernel, majorant, bound, tail_c, out):
    """Check kernel assumptions against a tail majorant and build the
    superharmonic envelope; exits 2 when no valid radius exists."""
    from . import chain
    b = kernel.jump_bound() if bound is None else bound
    if majorant == "const":
        maj = chain.constant_majorant(b)
    elif majorant == "wrapped":
        maj = chain.wrapped_majorant(b, *(()
                                          if tail_c is None else (tail_c,)))
    elif majorant == "pareto-log":
        maj = chain.pareto_log_majorant(*(()
                                          if tail_c is None else (tail_c,)))
    else:
        maj = chain.inverse_square_majorant()
    rep = chain.kernel_validate(kernel, maj)
    rep.raise_if_failed()
    w = chain.build_chain_W(maj)
    drift = chain.drift_check(w, kernel)
    doc = {"kernel": kernel.family, "majorant": maj.label,
           "validated": True, "caveat": rep.caveat,
           "A": w.A, "R": w.R,
           "drift_max": max(drift.values()),
           "superharmonic": bool(max(drift.values()) <= 1e-10)}
    _emit_json(doc, out)


@chain_grp.command("survival")
@click.option("--kernel", type=KERNEL, required=True)
@click.option("--x", type=float, required=True)
@click.option("--n", type=int, required=True)
@click.option("--trials", type=int, default=10 ** 6)
@click.option("--seed", type=int, default=0)
@click.option("--method", type=click.Choice(["auto", "dp", "mc"]),
              default="auto")
@click.option("--out", default="-")
def chain_survival_cmd(kernel, x, n, trials, seed, method, out):
    """Tail probability and the theorem ratio sqrt(n) P / (sqrt(2/pi) V)."""
    from .chain import chain_survival
    rep = chain_survival(kernel, x, n, trials=trials, seed=seed,
                         method=method)
    _emit_json({"kernel": kernel.family, "x": rep.x, "n": rep.n,
                "method": rep.method, "trials": rep.trials,
                "p_hat": rep.p_hat, "sigma": rep.sigma,
                "v_value": rep.v.value, "v_half_width": rep.v.half_width,
                "ratio": rep.ratio, "ratio_sigma": rep.ratio_sigma,
                "in_window": rep.in_window,
                "upper_constant": rep.upper_constant}, out)


@chain_grp.command("v")
@click.option("--kernel", type=KERNEL, required=True)
@click.option("--x", type=float, required=True)
@click.option("--trials", type=int, default=200000)
@click.option("--horizon", type=int, default=10000)
@click.option("--seed", type=int, default=0)
@click.option("--method", type=click.Choice(["auto", "dp", "mc"]),
              default="auto")
@click.option("--out", default="-")
def chain_v_cmd(kernel, x, trials, horizon, seed, method, out):
    """Harmonic-function estimate x + E[depth at absorption]."""
    from .chain import chain_V
    est = chain_V(kernel, x, n_max=horizon, trials=trials, seed=seed,
                  method=method)
    _emit_json({"kernel": kernel.family, "x": est.x, "value": est.value,
                "sigma": est.sigma, "trunc": est.trunc,
                "half_width": est.half_width, "method": est.method,
                "survivor_fraction": est.survivor_fraction}, out)


@chain_grp.command("doob")
@click.option("--kernel", type=KERNEL, required=True)
@click.option("--x", type=float, required=True)
@click.option("--n", type=int, required=True)
@click.option("--particles", type=int, default=50000)
@click.option("--seed", type=int, default=0)
@click.option("--out", default="-")
def chain_doob(kernel, x, n, particles, seed, out):
    """KS distance of the conditioned chain from its scaling limit."""
    from .chain import doob_limit_check
    ks = doob_limit_check(kernel, x, n, particles=particles, seed=seed)
    _emit_json({"kernel": kernel.family, "x": x, "n": n, "ks": ks}, out)


@chain_grp.command("clt")
@click.option("--kernel", type=KERNEL, required=True)
@click.option("--x", type=float, default=0.0)
@click.option("--n", type=int, required=True)
@click.option("--trials", type=int, default=100000)
@click.option("--seed", type=int, default=0)
@click.option("--out", default="-")
def chain_clt(kernel, x, n, trials, seed, out):
    """Normality and unit-variance audit of the unkilled chain."""
    from .chain import clt_diagnostic
    rep = clt_diagnostic(kernel, x, n, trials=trials, seed=seed)
    _emit_json({"kernel": kernel.family, "x": x, "n": n, "ks": rep.ks,
                "var_ratio": rep.var_ratio, "var_sigma": rep.var_sigma,
                "method": rep.method}, out)


# ----------------------------------------------------------------- verify

@cli.command("verify")
@click.argument("level", type=click.Choice(["quick", "full", "all"]))
@click.option("--seed", type=int, default=0)
@click.option("--only", type=int, multiple=True,
              help="run only these criterion numbers")
@click.option("--elapsed", is_flag=True,
              help="include timings in the JSON (breaks byte-identity)")
@click.option("--out", default="-")
def verify(level, seed, only, elapsed, out):
    """Run the acceptance criteria; exit 0 only when every one passes."""
    from . import acceptance
    lvl = "full" if level == "all" else level
    numbers = list(only) if only else None
    results = acceptance.run_suite(lvl, seed=seed, numbers=numbers)
    click.echo(acceptance.format_table(results), err=True)
    _emit_json(acceptance.suite_report(results, seed, lvl,
                                       include_elapsed=elapsed), out)
    if not all(r.passed for r in results):
        raise SystemExit(4)


# --------------------------------------------------------------- plotdata

@cli.group()
def plotdata():
    """Plain data tables for external plotting; no rendering here."""


@plotdata.command("tail-ratio")
@click.option("--law", type=LAW, required=True)
@click.option("--x", type=int, default=1)
@click.option("--nmax", type=int, default=10000)
@click.option("--points", type=int, default=24)
@click.option("--out", default="-")
def plotdata_tail_ratio(law, x, nmax, points, out):
    """(n, ratio, lower_CI, upper_CI) for sqrt(n) P(tau>n)/(sqrt(2/pi) V)."""
    import numpy as np
    from .harmonic import estimate_v
    from .killedwalk import survival_profile
    prof = survival_profile(law, x, nmax)
    v, vw = estimate_v(law, x)
    pref = math.sqrt(2.0 / math.pi)
    grid = np.unique(np.geomspace(10, nmax, points).astype(np.int64))
    rows = []
    for n in grid:
        p = float(prof.survival[n])
        ratio = math.sqrt(n) * p / (pref * v)
        err = ratio * (vw / v) + math.sqrt(n) * float(prof.loss[n]) / (pref * v)
        rows.append((int(n), ratio, ratio - err, ratio + err))
    with _out_stream(out) as fh:
        _csv(fh, ("n", "ratio", "lower_CI", "upper_CI"), rows)


@plotdata.command("conditional-cdf")
@click.option("--law", type=LAW, required=True)
@click.option("--x", type=int, default=1)
@click.option("--n", type=int, default=10000)
@click.option("--out", default="-")
def plotdata_conditional_cdf(law, x, n, out):
    """(v, empirical, rayleigh) overlay of the scaled endpoint CDF."""
    import numpy as np
    from .killedwalk import conditional_pmf
    from .oracles import rayleigh_cdf
    pmf = conditional_pmf(law, x, n)
    scale = math.sqrt(law.variance * n)
    sites = pmf.sites().astype(np.float64)
    keep = pmf.probs > 0.0
    vs = sites[keep] / scale
    emp = np.cumsum(pmf.probs[keep])
    rows = [(float(v), float(e), rayleigh_cdf(float(v)))
            for v, e in zip(vs, emp)]
    with _out_stream(out) as fh:
        _csv(fh, ("v", "empirical", "rayleigh"), rows)


@plotdata.command("lindeberg")
@click.option("--family", type=click.Choice(["iid", "marginal"]),
              default="marginal")
@click.option("--law", type=LAW, default=None)
@click.option("--nmax", type=int, default=10 ** 5)
@click.option("--points", type=int, default=12)
@click.option("--eps", default="0.05,0.1,0.2,0.5,1.0",
              help="comma-separated epsilon grid")
@click.option("--out", default="-")
def plotdata_lindeberg(family, law, nmax, points, eps, out):
    """(n, eps, L_n(eps)) surface of the Lindeberg functional."""
    import numpy as np
    from .universal import lindeberg_function
    seq = _sequence(family, law)
    try:
        eps_grid = [float(e) for e in eps.split(",") if e.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad --eps list: {exc}")
    grid = np.unique(np.geomspace(10, nmax, points).astype(np.int64))
    rows = [(int(n), e, lindeberg_function(seq, int(n), e))
            for n in grid for e in eps_grid]
    with _out_stream(out) as fh:
        _csv(fh, ("n", "eps", "L"), rows)


# -------------------------------------------------------------------- run

def _record_for(cfg):
    from ._backend import BACKEND_NAME
    from .config import ResultRecord
    return ResultRecord.for_config(cfg, BACKEND_NAME)


def _run_exact_survival(cfg, rec):
    from .killedwalk import profile_to_csv, survival_profile
    p = cfg.params
    prof = survival_profile(cfg.resolve_law(), int(p["x"]), int(p["n"]))
    rec.put("p_survival", float(prof.survival[-1]),
            bound=float(prof.loss[-1]))
    rec.put_table("profile", ("n", "survival", "absorbed", "E_partial_V",
                              "U_g", "loss_bound"), list(prof.csv_rows()))
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            profile_to_csv(prof, fh)


def _run_series_wh(cfg, rec):
    from .wienerhopf import wh_identity_residual
    order = int(cfg.params.get("N", 200))
    r = wh_identity_residual(cfg.resolve_law(), order)
    rec.put("residual", r, bound=0.0)
    rec.criteria["residual_below_1e-10"] = bool(r < 1e-10)


def _run_harmonic_v(cfg, rec):
    from .harmonic import estimate_v
    p = cfg.params
    value, half = estimate_v(cfg.resolve_law(), int(p["x"]),
                             horizon=int(p.get("horizon", 4000)))
    rec.put("v", value, bound=half)


def _run_chain_survival(cfg, rec):
    from .chain import chain_survival
    p = cfg.params
    rep = chain_survival(cfg.resolve_kernel(), float(p["x"]), int(p["n"]),
                         trials=int(p.get("trials", 10 ** 6)),
                         seed=cfg.seed, method=p.get("method", "auto"))
    rec.put("p_survival", rep.p_hat, bound=rep.sigma)
    rec.put("v", rep.v.value, bound=rep.v.half_width)
    rec.put("ratio", rep.ratio, bound=rep.ratio_sigma)


def _run_chain_v(cfg, rec):
    from .chain import chain_V
    p = cfg.params
    est = chain_V(cfg.resolve_kernel(), float(p["x"]),
                  n_max=int(p.get("horizon", 10000)),
                  trials=int(p.get("trials", 200000)), seed=cfg.seed,
                  method=p.get("method", "auto"))
    rec.put("v", est.value, bound=est.half_width)


def _run_simulate_passage(cfg, rec):
    from .universal import IidSequence, simulate_passage
    p = cfg.params
    seq = IidSequence(cfg.resolve_law())
    level = float(p.get("gconst", 0.0))
    est = simulate_passage(seq, lambda k: level, int(p["n"]),
                           int(p.get("trials", 100000)), seed=cfg.seed)
    rec.put("p_hat", est.p_hat,
            bound=0.5 * (est.ci_hi - est.ci_lo))
    rec.put("ug_hat", est.ug_hat)


def _run_verify(cfg, rec, level):
    from . import acceptance
    results = acceptance.run_suite(level, seed=cfg.seed)
    for r in results:
        rec.criteria[f"{r.number:02d}-{r.name}"] = r.passed
        rec.put(f"margin-{r.number:02d}", r.margin)


_RUNNERS = {
    "exact.survival": _run_exact_survival,
    "series.wh": _run_series_wh,
    "harmonic.v": _run_harmonic_v,
    "chain.survival": _run_chain_survival,
    "chain.v": _run_chain_v,
    "simulate.passage": _run_simulate_passage,
    "verify.quick": lambda cfg, rec: _run_verify(cfg, rec, "quick"),
    "verify.full": lambda cfg, rec: _run_verify(cfg, rec, "full"),
}


@cli.command("run")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--store", default=None,
              help="append the result record to this JSONL store")
def run_config(config_path, store):
    """Run one experiment described by a TOML/JSON config file."""
    from . import config as configmod
    cfg = configmod.load(config_path)
    if cfg.operation not in _RUNNERS:
        known = ", ".join(sorted(_RUNNERS))
        raise ConfigError(
            f"unknown operation {cfg.operation!r}; known: {known}")
    rec = _record_for(cfg)
    _RUNNERS[cfg.operation](cfg, rec)
    click.echo(json.dumps(dict(rec.core(), created=rec.created),
                          sort_keys=True, indent=2))
    if store:
        configmod.ResultStore(store).append(rec)
    if rec.criteria and not rec.passed():
        raise SystemExit(4)


def main(argv=None):
    """Console entry point with the documented exit-code mapping."""
    try:
        return cli.main(args=argv, standalone_mode=False) or 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.UsageError as exc:
        exc.show()
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except AssumptionViolated as exc:
        click.echo(f"assumption violated: {exc}", err=True)
        sys.exit(2)
    except CertificateFailure as exc:
        click.echo(f"certificate failure: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
