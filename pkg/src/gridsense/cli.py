"""Command-line experiment runner.

Every file-producing subcommand writes a '#'-prefixed metadata line with
the resolved configuration and master seed before the CSV header, so a
given command line reproduces its output byte for byte.  Exit codes: 0
success, 1 usage error, 2 runtime or model-violation error.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import _svg
from .deployment import (
    LAW_NAMES,
    distribution_for_law,
    event_labels,
    exponent_report,
    optimal_distribution,
    required_samples,
)
from .detection import monte_carlo_error
from .divergence import (
    EstimationError,
    constrained_kl_min,
    decade_slope,
    zero_event_kl_min,
)
from .fields import (
    effective_bandwidth,
    embedded_field,
    field_from_json_dict,
    field_to_json_dict,
    flipped_field,
    grid_samples,
    level_set_profile,
    random_field,
    scaled_field,
    shifted_field,
)
from .noisy import noisy_experiment


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; this tool reserves 2
    for runtime errors, so usage errors exit with 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text):
    values = [int(tok) for tok in str(text).split(",") if tok.strip()]
    if not values:
        raise ValueError("empty integer list")
    return values


def _str_list(text):
    values = [tok.strip() for tok in str(text).split(",") if tok.strip()]
    if not values:
        raise ValueError("empty list")
    return values


def _meta(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _format_cell(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


def _write_csv(path, header, rows, meta):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def _sibling(path, suffix):
    stem, ext = os.path.splitext(path)
    return f"{stem}{suffix}{ext or '.csv'}"


def _log_spaced(n_min, n_max, points):
    if n_min < 1 or n_max < n_min or points < 1:
        raise ValueError("need 1 <= n_min <= n_max and at least one point")
    raw = np.logspace(math.log10(n_min), math.log10(n_max), points)
    return [int(v) for v in np.unique(np.round(raw).astype(np.int64))]


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_field(args):
    rng = np.random.default_rng(args.seed)
    field = random_field(args.b, rng, amplitude_bound=args.amplitude_bound)
    record = field_to_json_dict(field)
    record["meta"] = _meta(args)
    text = json.dumps(record, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_error_sweep(args):
    laws = args.laws
    for law in laws:
        if law not in LAW_NAMES:
            raise ValueError(f"unknown law {law!r}; expected one of {', '.join(LAW_NAMES)}")
    if args.n_grid is not None:
        n_values = sorted(set(args.n_grid))
    else:
        n_values = _log_spaced(args.n_min, args.n_max, args.n_points)
    rng = np.random.default_rng(args.seed)
    # one placement per law for the whole sweep; the random law is drawn
    # once here so every n sees the same placement
    dists = {law: distribution_for_law(law, args.b, rng) for law in laws}
    rows = []
    for law in laws:
        for n in n_values:
            est = monte_carlo_error(None, dists[law], n, args.trials, rng)
            rows.append([law, args.b, n, args.trials, est.e_hat, est.half_width, args.seed])
    meta = _meta(args)
    _write_csv(
        args.out,
        ["law", "b", "n", "trials", "e_hat", "ci_half_width", "seed"],
        rows,
        meta,
    )
    plot_rows = [
        [law, b, n, math.log10(n), math.log10(e_hat)]
        for law, b, n, _, e_hat, _, _ in rows
        if e_hat > 0.0
    ]
    _write_csv(
        _sibling(args.out, "_loglog"),
        ["law", "b", "n", "log10_n", "log10_e_hat"],
        plot_rows,
        meta,
    )
    if args.svg:
        series = []
        for law in laws:
            xs = [r[2] for r in rows if r[0] == law and r[4] > 0.0]
            ys = [r[4] for r in rows if r[0] == law and r[4] > 0.0]
            if xs:
                series.append((law, xs, ys))
        _svg.line_chart(
            series, args.svg, title=f"detection error, b={args.b}",
            x_label="n (log10)", y_label="error probability (log10)",
            log_x=True, log_y=True,
        )
    return 0


def cmd_sample_size(args):
    rng = np.random.default_rng(args.seed)
    dist = distribution_for_law(args.law, args.b, rng)
    print(required_samples(dist, args.epsilon))
    return 0


def _bisect_error_curve(dist, target, tol, trials, rng, n_cap):
    """Binary search for n with empirical error inside [target-tol, target+tol].

    Returns (history_rows, n_star, estimate, warning_or_None); rows are
    (step, n_lo, n_hi, n_probed, e_hat, ci_half_width, accepted).
    """
    rows = []
    step = 0
    if dist.grid_size == 1:
        est = monte_carlo_error(None, dist, 1, trials, rng)
        rows.append((step, 1, 1, 1, est.e_hat, est.half_width, True))
        return rows, 1, est, None
    lo = dist.grid_size
    hi = max(4 * dist.grid_size, 16)
    while True:
        est = monte_carlo_error(None, dist, hi, trials, rng)
        accepted = abs(est.e_hat - target) <= tol
        rows.append((step, lo, hi, hi, est.e_hat, est.half_width, accepted))
        step += 1
        if accepted:
            return rows, hi, est, None
        if est.e_hat < target:
            break
        lo = hi
        hi *= 2
        if hi > n_cap:
            return rows, hi // 2, est, f"error stayed above target up to the n cap {n_cap}"
    best = (abs(est.e_hat - target), hi, est)
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        est = monte_carlo_error(None, dist, mid, trials, rng)
        accepted = abs(est.e_hat - target) <= tol
        rows.append((step, lo, hi, mid, est.e_hat, est.half_width, accepted))
        step += 1
        if accepted:
            return rows, mid, est, None
        if abs(est.e_hat - target) < best[0]:
            best = (abs(est.e_hat - target), mid, est)
        if est.e_hat > target:
            lo = mid
        else:
            hi = mid
    return rows, best[1], best[2], (
        "bracket exhausted before reaching the target band; reporting the closest probe"
    )


def cmd_threshold_search(args):
    target, tol = args.target, args.tolerance
    if not (0.0 < target - tol and target + tol < 1.0):
        raise ValueError("target +/- tolerance must stay inside (0, 1)")
    rng = np.random.default_rng(args.seed)
    all_rows = []
    for b in args.b:
        dist = optimal_distribution(b)
        rows, n_star, est, warning = _bisect_error_curve(
            dist, target, tol, args.trials, rng, args.n_cap
        )
        all_rows += [[b, *row] for row in rows]
        line = f"b={b} n_star={n_star} e_hat={est.e_hat!r} ci_half_width={est.half_width!r}"
        if warning:
            line += f" (warning: {warning})"
        print(line)
    _write_csv(
        args.out,
        ["b", "step", "n_lo", "n_hi", "n_probed", "e_hat", "ci_half_width", "accepted"],
        all_rows,
        _meta(args),
    )
    return 0


def cmd_noisy(args):
    rng = np.random.default_rng(args.seed)
    results = noisy_experiment(
        args.b, args.n, args.sigma, args.fields, rng,
        tol=args.tol, max_iter=args.max_iter, restarts=args.restarts,
    )
    meta = _meta(args)
    rows = [
        [r.field_id, args.b, args.n, args.sigma, r.distortion, r.d_g,
         r.overlapping, r.iterations, r.converged, args.seed]
        for r in results
    ]
    _write_csv(
        args.out,
        ["field_id", "b", "n", "sigma", "distortion", "d_g", "overlapping",
         "iterations", "converged", "seed"],
        rows,
        meta,
    )

    finite = np.array([r.distortion for r in results if math.isfinite(r.distortion)])
    if finite.size:
        top = max(float(finite.max()), args.bin_width)
        edges = np.arange(0.0, math.ceil(top / args.bin_width) * args.bin_width
                          + args.bin_width / 2, args.bin_width)
        counts, edges = np.histogram(finite, bins=edges)
    else:
        counts, edges = np.array([], dtype=int), np.array([0.0, args.bin_width])
    _write_csv(
        _sibling(args.out, "_distortion_hist"),
        ["bin_left", "bin_right", "count"],
        [[left, right, int(c)] for left, right, c in zip(edges[:-1], edges[1:], counts)],
        meta,
    )

    d_gs = np.array([r.d_g for r in results if math.isfinite(r.d_g)])
    if d_gs.size:
        dg_counts, dg_edges = np.histogram(d_gs, bins=20)
    else:
        dg_counts, dg_edges = np.array([], dtype=int), np.array([0.0, 1.0])
    _write_csv(
        _sibling(args.out, "_dg_hist"),
        ["bin_left", "bin_right", "count"],
        [[left, right, int(c)] for left, right, c in
         zip(dg_edges[:-1], dg_edges[1:], dg_counts)],
        meta,
    )

    low = sum(
        1 for r in results
        if math.isfinite(r.distortion) and r.distortion < args.low_threshold
    )
    fraction = low / len(results)
    print(f"low-distortion fraction (D < {args.low_threshold!r}): {fraction!r} "
          f"({low}/{len(results)} fields)")
    if args.svg and finite.size:
        _svg.histogram(
            edges, counts, args.svg,
            title=f"distortion, b={args.b}, sigma={args.sigma}",
            x_label="distortion", y_label="fields",
        )
    return 0


def cmd_ambiguity_demo(args):
    rng = np.random.default_rng(args.seed)
    if args.field:
        with open(args.field, "r", encoding="utf-8") as fh:
            inner = field_from_json_dict(json.load(fh))
        if inner.b > args.b:
            raise ValueError("loaded field has a larger bandwidth than --b")
    else:
        inner = random_field(args.field_b, rng)
    field = embedded_field(inner, args.b)
    bandwidth = effective_bandwidth(field)
    for m in args.scales:
        if m < 1:
            raise ValueError("scales must be positive integers")
        if m * bandwidth > args.b:
            raise ValueError(
                f"scale {m} times effective bandwidth {bandwidth} exceeds b={args.b}"
            )
    variants = [
        ("measure_g", field),
        ("measure_shift", shifted_field(field, args.shift)),
        ("measure_flip", flipped_field(field, args.shift)),
    ]
    variants += [
        (f"measure_scale_{m}", scaled_field(field, m, args.b)) for m in args.scales
    ]
    base_values = grid_samples(field).values
    span = float(base_values.max() - base_values.min())
    lo = float(base_values.min()) - 0.05 * span
    hi = float(base_values.max()) + 0.05 * span
    thetas = np.linspace(lo, hi, args.theta_points)
    profiles = {
        name: level_set_profile(f, thetas, args.resolution) for name, f in variants
    }
    names = [name for name, _ in variants]
    rows = [
        [float(theta)] + [float(profiles[name][i]) for name in names]
        for i, theta in enumerate(thetas)
    ]
    _write_csv(args.out, ["theta"] + names, rows, _meta(args))
    table = np.column_stack([profiles[name] for name in names])
    worst = float(np.max(table.max(axis=1) - table.min(axis=1)))
    print(f"max measure discrepancy across variants: {worst!r} "
          f"(grid quantum {1.0 / args.resolution!r})")
    return 0


def cmd_exponent_check(args):
    if args.b > 5:
        raise ValueError("the numeric minimizer is only wired up for b <= 5")
    rng = np.random.default_rng(args.seed)
    dist = distribution_for_law(args.law, args.b, rng)
    report = exponent_report(dist)
    labels = event_labels(args.b)
    numeric = [zero_event_kl_min(dist)[1]]
    numeric += [constrained_kl_min(dist, i)[1] for i in range(2 * args.b)]

    slope_text = ""
    if args.slope_trials > 0:
        slope_text = _monte_carlo_slope(dist, report.min_exponent, args.slope_trials, rng)

    min_index = int(np.argmin(report.exponents))
    rows = []
    for i, label in enumerate(labels):
        closed = float(report.exponents[i])
        num = float(numeric[i])
        if math.isinf(closed) and math.isinf(num):
            diff = 0.0
        else:
            diff = abs(closed - num)
        rows.append([
            args.b, args.law, label, closed, num, diff,
            slope_text if i == min_index else "",
        ])
    _write_csv(
        args.out,
        ["b", "law", "event", "closed_form", "numeric", "abs_diff",
         "monte_carlo_slope"],
        rows,
        _meta(args),
    )
    return 0


def _monte_carlo_slope(dist, min_exponent, trials, rng):
    """Empirical decay slope from a sweep sized off the closed-form rate."""
    if not math.isfinite(min_exponent) or min_exponent <= 0.0:
        return ""
    n_hi = max(int(math.ceil(13.3 / min_exponent)), 40)
    n_values = _log_spaced(max(n_hi // 10, dist.grid_size), n_hi, 10)
    curve = [
        (n, monte_carlo_error(None, dist, n, trials, rng).e_hat) for n in n_values
    ]
    try:
        return repr(decade_slope(curve))
    except EstimationError:
        return ""


# ---------------------------------------------------------------------------
# parser plumbing


def _build_parser():
    parser = _ArgumentParser(
        prog="gridsense",
        description="Experiments on reconstructing bandlimited fields from "
                    "location-unaware sensor readings.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True,
                                       parser_class=_ArgumentParser)
    registry = {}

    def register(name, func, help_text):
        sp = subparsers.add_parser(name, help=help_text)
        sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        sp.add_argument("--config", default=None,
                        help="JSON file of option defaults; explicit flags win")
        sp.set_defaults(func=func)
        registry[name] = sp
        return sp

    sp = register("gen-field", cmd_gen_field, "draw a random field and write it as JSON")
    sp.add_argument("--b", type=int, required=True, help="bandwidth parameter")
    sp.add_argument("--amplitude-bound", type=float, default=1.0,
                    help="uniform range for coefficient parts (default 1)")
    sp.add_argument("--out", default=None, help="output path (default stdout)")

    sp = register("error-sweep", cmd_error_sweep,
                  "Monte Carlo detection error across laws and sample sizes")
    sp.add_argument("--b", type=int, required=True)
    sp.add_argument("--laws", type=_str_list, default=list(LAW_NAMES),
                    help="comma-separated subset of optimal,linear,cubic,random")
    sp.add_argument("--n-grid", type=_int_list, default=None,
                    help="explicit comma-separated n values (overrides the log grid)")
    sp.add_argument("--n-min", type=int, default=100)
    sp.add_argument("--n-max", type=int, default=10000)
    sp.add_argument("--n-points", type=int, default=10)
    sp.add_argument("--trials", type=int, default=2000)
    sp.add_argument("--out", required=True, help="CSV output path")
    sp.add_argument("--svg", default=None, help="optional SVG chart path")

    sp = register("sample-size", cmd_sample_size,
                  "sufficient sample count for a target error probability")
    sp.add_argument("--b", type=int, required=True)
    sp.add_argument("--law", default="optimal", choices=list(LAW_NAMES))
    sp.add_argument("--epsilon", type=float, required=True)

    sp = register("threshold-search", cmd_threshold_search,
                  "binary search for the n hitting a target error probability")
    sp.add_argument("--b", type=_int_list, required=True,
                    help="comma-separated bandwidth parameters")
    sp.add_argument("--target", type=float, default=0.01)
    sp.add_argument("--tolerance", type=float, default=0.001)
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--n-cap", type=int, default=1_000_000)
    sp.add_argument("--out", required=True, help="CSV output path (search history)")

    sp = register("noisy", cmd_noisy,
                  "noisy-reading reconstruction over random fields")
    sp.add_argument("--b", type=int, required=True)
    sp.add_argument("--n", type=int, default=10000)
    sp.add_argument("--sigma", type=float, default=0.05)
    sp.add_argument("--fields", type=int, default=200)
    sp.add_argument("--low-threshold", type=float, default=0.1,
                    help="distortion below this counts as a good reconstruction")
    sp.add_argument("--bin-width", type=float, default=0.1,
                    help="distortion histogram bin width")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-iter", type=int, default=500)
    sp.add_argument("--restarts", type=int, default=3,
                    help="independent mixture seedings per field; the fit "
                         "with the best final log-likelihood wins")
    sp.add_argument("--out", required=True, help="per-field CSV output path")
    sp.add_argument("--svg", default=None, help="optional SVG histogram path")

    sp = register("ambiguity-demo", cmd_ambiguity_demo,
                  "level-set measures under shift, flip, and integer scaling")
    sp.add_argument("--b", type=int, default=3, help="container bandwidth")
    sp.add_argument("--field-b", type=int, default=1,
                    help="bandwidth of the random base field")
    sp.add_argument("--field", default=None,
                    help="JSON field file to use instead of a random field")
    sp.add_argument("--shift", type=float, default=0.3)
    sp.add_argument("--scales", type=_int_list, default=[2, 3])
    sp.add_argument("--theta-points", type=int, default=50)
    sp.add_argument("--resolution", type=int, default=100_000)
    sp.add_argument("--out", required=True, help="CSV output path")

    sp = register("exponent-check", cmd_exponent_check,
                  "closed-form exponents against the numeric minimizer")
    sp.add_argument("--b", type=int, required=True)
    sp.add_argument("--law", default="optimal", choices=list(LAW_NAMES))
    sp.add_argument("--slope-trials", type=int, default=0,
                    help="Monte Carlo trials per sweep point for the slope "
                         "column (0 skips the sweep)")
    sp.add_argument("--out", required=True, help="CSV output path")

    return parser, registry


def _config_location(argv):
    """Subcommand name and --config path found by scanning raw argv.

    The scan runs before argparse so config values can satisfy required
    options; argparse would reject the command line first otherwise.
    """
    command, path = None, None
    for i, token in enumerate(argv):
        if command is None and not token.startswith("-"):
            command = token
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    return command, path


def _apply_config_defaults(subparser, path):
    """Install config-file values as the subcommand's option defaults.

    Explicit flags still win, because defaults only fill in options that
    are absent from the command line; a configured value also satisfies
    a required option.
    """
    with open(path, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError("config file must hold a JSON object")
    actions = {a.dest: a for a in subparser._actions}
    unknown = set(config) - set(actions) - {"config"}
    if unknown:
        raise ValueError(
            f"config keys not recognized for {subparser.prog.split()[-1]}: "
            + ", ".join(sorted(unknown))
        )
    for key, value in config.items():
        if key == "config":
            continue
        action = actions[key]
        if isinstance(value, str) and action.type not in (None, str):
            value = action.type(value)
        action.default = value
        action.required = False


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, registry = _build_parser()
    command, config_path = _config_location(argv)
    try:
        if config_path is not None and command in registry:
            _apply_config_defaults(registry[command], config_path)
    except (ValueError, OSError) as exc:
        print(f"gridsense: error: {exc}", file=sys.stderr)
        return 1
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"gridsense: error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"gridsense: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
