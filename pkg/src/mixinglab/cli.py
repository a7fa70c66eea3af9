"""Command-line entry point: ``mixinglab {constants,sweep,figures,verify}``."""

import argparse
import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
import io
import json
import math
import os
from pathlib import Path
import sys
import time

import numpy as np

from . import __version__, chain, coupling, dynsys, isoperimetry, rbm, spectral
from .dynsys import Regime, RegimeError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_REGIME = 3
EXIT_HORIZON = 4

DEFAULT_CS = ("1", "cstar", "-8")
FIGURE_IDS = ("sys-chain", "chain-stationary", "deriv2")


@dataclass
class SweepRecord:
    c: float
    n: int
    tau: object
    gap_K2: float
    phi_upper: float
    runtime_ms: object
    seed: int
    status: str


class UsageError(Exception):
    pass


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return "" if v is None else str(v)


def parse_c(token):
    if token.lower() in ("cstar", "c_star", "c*"):
        return dynsys.c_star()
    try:
        return float(token)
    except ValueError:
        raise UsageError(f"not a coupling value: {token!r}") from None


def _split(values):
    out = []
    for v in values:
        out.extend(t for t in v.split(",") if t)
    return out


def parse_n(token):
    try:
        n = int(token)
    except ValueError:
        raise UsageError(f"not an integer: {token!r}") from None
    if not 1 <= n <= chain.MAX_DENSE_N:
        raise UsageError(f"n must lie in [1, {chain.MAX_DENSE_N}], got {n}")
    return n


def worker_count():
    raw = os.environ.get("MIXINGLAB_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"MIXINGLAB_THREADS must be an integer, got {raw!r}") from None


def sweep_cell(c, n, eps, seed, t_max=None):
    """Exact mixing time, spectral gap of K^2 and interval-cut conductance
    for one (c, n). Failures become a status string, not an exception."""
    start = time.perf_counter()
    params = chain.ChainParams(c, n)
    tau = gap = phi = math.nan
    try:
        kernel = chain.build_kernel(params)
        pi = chain.stationary(params)
        tau = chain.exact_mixing_time(params, eps, t_max=t_max, kernel=kernel, pi=pi)
        gap = spectral.spectrum(kernel).gap_K2
        phi = spectral.conductance_interval(kernel, pi).phi
        status = "ok" if tau is not None else "horizon"
    except Exception as exc:  # recorded per cell, the sweep continues
        status = f"error: {type(exc).__name__}: {exc}"
    ms = int(round(1000 * (time.perf_counter() - start)))
    return SweepRecord(
        c=c, n=n, tau="horizon" if tau is None else tau, gap_K2=gap,
        phi_upper=phi, runtime_ms=ms, seed=seed, status=status,
    )


def run_sweep(cs, ns, eps, seed, workers=1, t_max=None):
    cells = [(c, n) for c in cs for n in ns]
    args = [(c, n, eps, seed, t_max) for c, n in cells]
    if workers <= 1 or len(cells) <= 1:
        return [sweep_cell(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
        # map preserves submission order, so rows come out in (c, n) order
        return list(pool.map(sweep_cell, *zip(*args)))


def _header(command, seed):
    parts = [f"mixinglab {__version__}", f"command: {command}"]
    if seed is not None:
        parts.append(f"seed: {seed}")
    return "# " + " | ".join(parts) + "\n"


def write_csv(path, command, seed, columns, rows):
    buf = io.StringIO()
    buf.write(_header(command, seed))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    data = buf.getvalue()
    if path is None or str(path) == "-":
        sys.stdout.write(data)
    else:
        Path(path).write_text(data)


def cmd_constants(args):
    const = dynsys.solve_critical_constants()
    out = {
        "x_star": float(f"{const.x_star:.12g}"),
        "c_star": float(f"{const.c_star:.12g}"),
        "x0_residual": dynsys.x0_residual(const.x_star),
    }
    if args.c:
        out["fixed_points"] = {}
        for token in _split(args.c):
            c = parse_c(token)
            rep = dynsys.report(c)
            out["fixed_points"][token] = {
                "c": float(f"{c:.12g}"),
                "fixed_point": float(f"{rep.fixed_point:.12g}"),
                "deriv_at_fp": float(f"{rep.deriv_at_fp:.12g}"),
                "regime": dynsys.classify_c(c).value,
            }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_sweep(args):
    tokens = _split(args.c)
    cs = [parse_c(t) for t in tokens]
    ns = [parse_n(t) for t in _split(args.n)]
    if not 0 < args.eps < 1:
        raise UsageError(f"--eps must lie in (0, 1), got {args.eps}")
    if args.regime:
        want = Regime(args.regime.capitalize())
        bad = [t for t, c in zip(tokens, cs) if dynsys.classify_c(c) is not want]
        if bad:
            raise RegimeError(f"c values {bad} are not in the {want.value} regime")
    records = run_sweep(cs, ns, args.eps, args.seed, worker_count(), args.t_max)
    if not args.timings:
        for r in records:
            r.runtime_ms = None
    command = (
        f"mixinglab sweep --c {','.join(tokens)} --n {','.join(map(str, ns))} "
        f"--eps {args.eps!r} --seed {args.seed}"
    )
    write_csv(args.out, command, args.seed, [f.name for f in fields(SweepRecord)], [astuple(r) for r in records])
    if args.required and any(r.status == "horizon" for r in records):
        return EXIT_HORIZON
    return EXIT_OK


def autocorrelation(xs, max_lag):
    """Biased lag autocovariance normalised by the lag-0 value."""
    xs = np.asarray(xs, dtype=float)
    d = xs - xs.mean()
    var = d @ d
    if var == 0:
        return np.where(np.arange(max_lag + 1) == 0, 1.0, np.nan)
    return np.array([d[: d.size - k] @ d[k:] / var for k in range(max_lag + 1)])


def figure_sys_chain(cs, n, seed, steps=10**5, burn_in=10**3, t_iter=30, max_lag=50):
    iterates = np.array([dynsys.iterate(c, 0.5, t_iter) for c in cs]).T
    rng = np.random.default_rng(seed)
    acfs = []
    for c in cs:
        # binomial draws have the same law as counting n uniforms below m_c(x)
        x, traj = n // 2, np.empty(steps, dtype=np.int64)
        for t in range(burn_in + steps):
            x = int(rng.binomial(n, dynsys.m(c, x / n)))
            if t >= burn_in:
                traj[t - burn_in] = x
        acfs.append(autocorrelation(traj / n, max_lag))
    return {
        "sys_chain_iterates.csv": (["t"], np.arange(t_iter + 1), iterates),
        "sys_chain_acf.csv": (["lag"], np.arange(max_lag + 1), np.array(acfs).T),
    }


def figure_chain_stationary(cs, n, grid=1001):
    xs = np.linspace(0, 1, grid)
    pmf = np.array([chain.stationary(chain.ChainParams(c, n)) for c in cs]).T
    m2 = np.array([dynsys.m(c, dynsys.m(c, xs)) for c in cs]).T
    return {
        "chain_stationary_pmf.csv": (["x"], np.arange(n + 1) / n, pmf),
        "chain_stationary_m2.csv": (["x"], xs, m2),
    }


def figure_deriv2(n=25, grid=401):
    xs = np.linspace(0.1, 0.5, grid)
    params = chain.ChainParams(dynsys.c_star(), n)
    return {"deriv2.csv": (["x"], xs, isoperimetry.d2_log_omega(params, xs)[:, None])}


def cmd_figures(args):
    if args.id not in FIGURE_IDS:
        raise UsageError(f"unknown figure id {args.id!r}; choose from {', '.join(FIGURE_IDS)}")
    tokens = _split(args.c) if args.c else list(DEFAULT_CS)
    cs = [parse_c(t) for t in tokens]
    if args.id == "sys-chain":
        tables = figure_sys_chain(cs, args.n, args.seed)
        value_cols = [f"c={t}" for t in tokens]
    elif args.id == "chain-stationary":
        tables = figure_chain_stationary(cs, args.n)
        value_cols = [f"c={t}" for t in tokens]
    else:
        tables = figure_deriv2()
        value_cols = ["d2_log_omega_25"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    command = f"mixinglab figures --id {args.id}"
    if args.id != "deriv2":
        command += f" --c {','.join(tokens)} --n {args.n} --seed {args.seed}"
    for name, (key, col, values) in tables.items():
        rows = ([float(a)] + [float(v) for v in b] for a, b in zip(col, values))
        write_csv(out / name, command, args.seed, key + value_cols, rows)
        print(out / name)
    return EXIT_OK


def _suites():
    cs = dynsys.c_star()
    P = chain.ChainParams

    def hoeffding():
        reps = [chain.hoeffding_check(P(c, n), (0.05, 0.1, 0.2, 0.3)) for c in (1, cs, -8) for n in (10, 50, 200)]
        return all(r.ok for r in reps), f"min window slack {min(r.min_window_slack for r in reps):.3g}"

    def cheeger():
        worst = math.inf
        for c in (1, cs, -8):
            for n in (4, 6, 8, 10):
                k = chain.build_kernel(P(c, n))
                phi = spectral.conductance_bruteforce(k).phi
                g = spectral.spectrum(k).gap_K2
                worst = min(worst, g - phi * phi / 8, phi - g)
        return worst >= -1e-12, f"min slack {worst:.3g}"

    def secondorder():
        vals = {c: dynsys.sup_m2_prime(c) for c in (1, -4, -5.5)}
        return all(v < 1 for v in vals.values()), f"max (m^2)' {max(vals.values()):.4f}"

    def identities():
        res = max(abs(r) for r in dynsys.critical_identities())
        return res <= 1e-9, f"max residual {res:.2e}"

    def contraction():
        rng = np.random.default_rng(0)
        reps = [coupling.contraction_check(P(c, 50), 5, 40, 10**4, rng) for c in (1, cs + 0.5)]
        return all(r.mc_agrees and r.bound_holds for r in reps), "MC within 4 SE of closed form"

    def drift():
        reps = [coupling.drift_check(P(c, n)) for c in (0, 1, 3) for n in (50, 100)]
        return all(r.ok for r in reps), f"min slack {min(r.min_slack for r in reps):.3g}"

    def geometric():
        r = coupling.geometric_bound_check(P(1, 100))
        return r.decays and r.monotone and abs(r.rho_hat - r.lambda2_sq) < 0.05, f"rho_hat {r.rho_hat:.4f} vs {r.lambda2_sq:.4f}"

    def slow():
        r = coupling.slow_mixing_witness(P(-8, 30), 10)
        return r.bound_holds, f"psi {r.psi:.3g}, escape at t=10 {r.escape[-1]:.3g}"

    def close():
        reps = [coupling.close_coupling_check(P(cs, n)) for n in (25, 100)]
        return all(r.ok for r in reps), f"max two-step TV {max(r.max_two_step_tv for r in reps):.4f}"

    def logconc():
        r = isoperimetry.logconc_defect_check(P(cs, 25))
        return r.ok and r.max_d2 > 0, f"max d2 log omega {r.max_d2:.4f}"

    def iso():
        r = isoperimetry.iso_partition_check(P(cs, 25))
        return r.ok, f"{r.checked} partitions, min log slack {r.min_slack:.3g}"

    def n_infty():
        g = float(np.max(dynsys.n_infty_g(np.linspace(1e-6, 1 - 1e-6, 10**5))))
        return g <= 1e-12, f"max g {g:.3g}"

    def k2t():
        worst = min(chain.k2t_check(P(cs, n)) for n in (10, 25))
        return worst >= 0, f"min slack {worst:.3g}"

    def m2t():
        r = dynsys.m2t_check()
        return r >= 1, f"min ratio {r:.4f}"

    def equivalence():
        reps = [rbm.equivalence_check(c, 3, 10) for c in (1, -3)]
        return all(r.ok for r in reps), f"max error {max(r.max_error for r in reps):.2e}"

    return {
        "critical-identities": identities, "secondorder": secondorder, "hoeffding": hoeffding,
        "cheeger": cheeger, "contraction": contraction, "drift": drift, "geometric": geometric,
        "exp": slow, "close": close, "logconc": logconc, "iso": iso, "n-infty": n_infty,
        "k2t": k2t, "m2t": m2t, "equivalence": equivalence,
    }


def cmd_verify(args):
    suites = _suites()
    if args.suite == "all":
        names = list(suites)
    elif args.suite in suites:
        names = [args.suite]
    else:
        raise UsageError(f"unknown suite {args.suite!r}; choose from all, {', '.join(suites)}")
    failed = 0
    for name in names:
        ok, detail = suites[name]()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if not failed else EXIT_FAILED


def build_parser():
    p = argparse.ArgumentParser(prog="mixinglab", description=__doc__)
    p.add_argument("--version", action="version", version=f"mixinglab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("constants", help="critical constants and fixed points")
    s.add_argument("--c", nargs="*", default=[], help="coupling values (numbers or cstar)")
    s.set_defaults(func=cmd_constants)

    s = sub.add_parser("sweep", help="exact mixing times over a (c, n) grid")
    s.add_argument("--c", nargs="+", required=True)
    s.add_argument("--n", nargs="+", required=True)
    s.add_argument("--eps", type=float, default=0.25)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--out", default="-")
    s.add_argument("--t-max", type=int, default=None, help="override the regime horizon")
    s.add_argument("--regime", choices=["attractive", "critical", "repelling"])
    s.add_argument("--required", action="store_true", help="exit 4 if any cell hits the horizon")
    s.add_argument("--timings", action="store_true", help="fill runtime_ms (breaks byte-identity)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("figures", help="data behind the figures")
    s.add_argument("--id", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--c", nargs="*")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=1)
    s.set_defaults(func=cmd_figures)

    s = sub.add_parser("verify", help="run the numerical checks")
    s.add_argument("--suite", default="all")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mixinglab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RegimeError as exc:
        print(f"mixinglab: regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME


if __name__ == "__main__":
    sys.exit(main())
