"""Command-line front end.

Subcommands: ``simulate``, ``qpt``, ``validate``, ``characterize``,
``boundary`` and ``report``. Options may also come from a JSON file given
with ``--config`` (keys are option names with ``_`` for ``-``); flags on the
command line take precedence over it, and it over built-in defaults.

Exit codes: 0 success, 2 invalid input, 3 infeasible data, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formats, svg
from .channels import D2Channel, QubitChannel, UnphysicalChannelError, amplitude_damping, dephase, DEPOLARIZING, IDENTITY
from .geometry import DEFAULT_DIRECTIONS, boundary, delta
from .optimize import InfeasibleError, worker_count
from .simulate import exact_frequencies, expand, frequencies, grid_settings, simulate_counts, to_points, tomography_settings

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4


class InputError(ValueError):
    pass


DEFAULTS = {
    "simulate": {"channel": None, "lambda_": None, "visibility": None, "d": None, "c3": 0.0, "grid": 0,
                 "tomography": False, "shots": 100000, "seed": None, "out": "counts.json", "correlations": None, "exact": False},
    "qpt": {"restrict_d2": False, "general": False, "restarts": 1000, "general_restarts": 20, "seed": 0,
            "out": "channel.json", "report": None},
    "validate": {"channel": None, "lambda_": None, "visibility": None, "d": None, "c3": 0.0, "k": 2.0, "n": DEFAULT_DIRECTIONS,
                 "restarts": 200, "seed": 0, "ranges": False, "out": "verdict.json", "figure": None},
    "characterize": {"k": 0.0, "n": DEFAULT_DIRECTIONS, "restarts": 200, "seed": 0, "reference": None,
                     "out": "fit.json", "figure": None},
    "boundary": {"channel": None, "lambda_": None, "visibility": None, "d": None, "c3": 0.0, "n": DEFAULT_DIRECTIONS,
                 "out": "boundary.csv", "region": None, "figure": None},
    "report": {"labels": None},
}


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)
    threads: int = None

    def __getattr__(self, name):
        try:
            return self.__dict__["options"][name]
        except KeyError:
            raise AttributeError(name) from None


# --- parsing ---------------------------------------------------------------


def _channel_args(p):
    p.add_argument("--channel", help="ad, identity, depolarizing, d2, or a channel JSON file")
    p.add_argument("--lambda", dest="lambda_", type=float, help="damping for --channel ad")
    p.add_argument("--visibility", type=float, help="dephasing visibility applied to d1, d2")
    p.add_argument("--d", type=float, nargs=3, metavar=("D1", "D2", "D3"), help="semi-axes for --channel d2")
    p.add_argument("--c3", type=float, help="shift for --channel d2")


def build_parser():
    # every default is None so that the config file can fill in what flags leave open
    ap = argparse.ArgumentParser(prog="dichannel", description=__doc__.split("\n")[0], argument_default=None)
    ap.add_argument("--config", help="JSON file with option values")
    ap.add_argument("--threads", type=int, help="worker processes (default: $DICHANNEL_THREADS or 1)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample counts for a channel")
    _channel_args(p)
    p.add_argument("--grid", type=int, help="n for the n x n grid of state pairs and measurements")
    p.add_argument("--tomography", action="store_const", const=True, help="add the 18 Pauli tomography settings")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="counts JSON")
    p.add_argument("--correlations", help="also write correlation points (CSV)")
    p.add_argument("--exact", action="store_const", const=True, help="correlation points from exact probabilities")

    p = sub.add_parser("qpt", help="maximum-likelihood process tomography")
    p.add_argument("counts")
    p.add_argument("--restrict-d2", dest="restrict_d2", action="store_const", const=True)
    p.add_argument("--general", action="store_const", const=True)
    p.add_argument("--restarts", type=int)
    p.add_argument("--general-restarts", dest="general_restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="fitted channel JSON")
    p.add_argument("--report", help="fit report JSON")

    p = sub.add_parser("validate", help="DI-TV: test a channel hypothesis against correlations")
    p.add_argument("data", help="correlations CSV or counts JSON")
    _channel_args(p)
    p.add_argument("--k", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ranges", action="store_const", const=True, help="also compute parameter ranges")
    p.add_argument("--out")
    p.add_argument("--figure")

    p = sub.add_parser("characterize", help="DI-CC: minimal correlation set containing the data")
    p.add_argument("data", help="correlations CSV or counts JSON")
    p.add_argument("--k", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--reference", help="channel JSON drawn for comparison and used for delta")
    p.add_argument("--out")
    p.add_argument("--figure")

    p = sub.add_parser("boundary", help="correlation-set boundary of a channel")
    _channel_args(p)
    p.add_argument("--n", type=int)
    p.add_argument("--out", help="boundary CSV")
    p.add_argument("--region", help="region JSON")
    p.add_argument("--figure")

    p = sub.add_parser("report", help="tabulate verdict and characterization reports")
    p.add_argument("files", nargs="+")
    p.add_argument("--labels", nargs="+")
    return ap


def load_config(argv=None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    file_opts = {}
    if args.get("config"):
        try:
            file_opts = json.loads(Path(args["config"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args['config']}: {exc}") from None
        if not isinstance(file_opts, dict):
            raise InputError("config file must hold a JSON object")
        file_opts = {k.replace("-", "_"): v for k, v in file_opts.items()}
        if "lambda" in file_opts:
            file_opts["lambda_"] = file_opts.pop("lambda")
    opts = dict(DEFAULTS[command])
    for k, v in file_opts.items():
        if k in opts or k in args:
            opts[k] = v
    for k, v in args.items():
        if v is not None:
            opts[k] = v
    threads = opts.pop("threads", None)
    opts.pop("config", None)
    return RunConfig(command, opts, threads)


# --- helpers ---------------------------------------------------------------


def channel_from_options(cfg: RunConfig, required=True):
    kind = cfg.channel
    if kind is None:
        if required:
            raise InputError("a channel is required (--channel)")
        return None
    if kind in ("ad", "amplitude-damping"):
        if cfg.lambda_ is None:
            raise InputError("--channel ad needs --lambda")
        if not 0.0 <= cfg.lambda_ <= 1.0:
            raise UnphysicalChannelError(f"lambda={cfg.lambda_} outside [0, 1]")
        ch = amplitude_damping(cfg.lambda_)
    elif kind == "identity":
        ch = IDENTITY
    elif kind == "depolarizing":
        ch = DEPOLARIZING
    elif kind == "d2":
        if cfg.d is None:
            raise InputError("--channel d2 needs --d D1 D2 D3")
        ch = formats.channel_from_doc({"kind": "d2", "d": list(cfg.d), "c3": cfg.c3 or 0.0})
    elif Path(kind).is_file():
        ch = formats.read_channel(kind)
    else:
        raise InputError(f"unknown channel {kind!r} (not a kind and not a file)")
    if cfg.visibility is not None:
        if not isinstance(ch, D2Channel):
            raise InputError("--visibility needs a D2 channel")
        if not 0.0 <= cfg.visibility <= 1.0:
            raise UnphysicalChannelError(f"visibility={cfg.visibility} outside [0, 1]")
        ch = dephase(ch, cfg.visibility)
    return ch


def load_data(path):
    """Correlation points from a CSV file or from the frequencies of a counts file."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    if path.suffix.lower() == ".json":
        return to_points(frequencies(formats.read_counts(path)))
    return formats.read_correlations(path)


def informational_rank(settings):
    """Rank of the linear map from ``(A, b)`` to the outcome probabilities (12 is complete)."""
    rows = [np.concatenate([np.outer(s.effect.vec, s.state).ravel(), s.effect.vec]) for s in settings]
    if not rows:
        return 0
    return int(np.linalg.matrix_rank(np.array(rows), tol=1e-9))


def _say(msg):
    print(msg, file=sys.stderr)


# --- commands --------------------------------------------------------------


def cmd_simulate(cfg: RunConfig):
    if cfg.seed is None:
        raise InputError("--seed is required")
    if cfg.shots < 1:
        raise InputError("--shots must be >= 1")
    ch = channel_from_options(cfg)
    if isinstance(ch, QubitChannel) and not ch.is_physical():
        raise UnphysicalChannelError("channel is not completely positive")
    settings = []
    if cfg.grid:
        if cfg.grid < 2:
            raise InputError("--grid must be >= 2")
        settings.extend(expand(grid_settings(cfg.grid)))
    if cfg.tomography or not settings:
        offset_in = 2 * cfg.grid if cfg.grid else 0
        offset_meas = cfg.grid or 0
        for s in tomography_settings():
            settings.append(type(s)(s.input_id + offset_in, s.meas_id + offset_meas, s.state, s.effect))
    counts = simulate_counts(ch, settings, cfg.shots, cfg.seed)
    counts.meta["grid"] = cfg.grid
    counts.meta["tomography"] = bool(cfg.tomography or not cfg.grid)
    formats.write_counts(cfg.out, counts)
    _say(f"wrote {len(settings)} settings to {cfg.out}")
    if cfg.correlations:
        if cfg.exact:
            data = to_points(exact_frequencies(ch, settings))
        else:
            data = to_points(frequencies(counts))
        formats.write_correlations(cfg.correlations, data)
        _say(f"wrote {len(data)} correlation points to {cfg.correlations}")
    return EXIT_OK


def cmd_qpt(cfg: RunConfig):
    from .tomography import choi_fidelity, fit_d2, fit_general

    path = Path(cfg.counts)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    counts = formats.read_counts(path)
    freqs = frequencies(counts)
    rank = informational_rank(freqs.settings)
    if rank < 12:
        raise InputError(f"settings do not determine the channel (rank {rank} of 12); include tomography settings")
    run_d2 = cfg.restrict_d2 or not cfg.general
    run_general = cfg.general or not cfg.restrict_d2
    workers = worker_count(cfg.threads)
    fits = {}
    d2fit = gfit = None
    if run_d2:
        d2fit = fit_d2(freqs, restarts=cfg.restarts, seed=cfg.seed, workers=workers)
        fits["d2"] = {
            "channel": formats.channel_doc(d2fit.channel),
            "u": d2fit.u.tolist(),
            "v": d2fit.v.tolist(),
            "loglik": d2fit.loglik,
            "kkt_residual": d2fit.result.kkt_residual,
            "restarts": d2fit.restarts,
            "seed": d2fit.seed,
        }
        _say("d2 fit: d = ({:.4f}, {:.4f}, {:.4f}), c3 = {:.4f}, loglik = {:.6g}".format(*d2fit.channel.as_tuple(), d2fit.loglik))
    if run_general:
        gfit = fit_general(freqs, restarts=cfg.general_restarts, seed=cfg.seed, start=d2fit, workers=workers)
        fits["general"] = {
            "channel": formats.channel_doc(gfit.channel),
            "loglik": gfit.loglik,
            "kkt_residual": gfit.result.kkt_residual,
            "restarts": gfit.restarts,
            "seed": gfit.seed,
        }
        _say(f"general fit: loglik = {gfit.loglik:.6g}")
    doc = {"kind": "fit", "fits": fits, "counts": str(path)}
    if d2fit is not None and gfit is not None:
        fid = choi_fidelity(d2fit.affine(), gfit.channel)
        doc["fidelity"] = fid
        print(f"choi fidelity (general vs d2): {fid:.6f}")
    formats.write_channel(cfg.out, d2fit.channel if d2fit is not None else gfit.channel)
    if cfg.report:
        formats.write_report(cfg.report, doc)
    return EXIT_OK


def _nonempty(data, path):
    if len(data) == 0:
        raise InputError(f"{path}: no correlation points")
    return data


def cmd_validate(cfg: RunConfig):
    from .protocols import NotValidatedError, di_cc, di_tv, parameter_ranges

    hyp = channel_from_options(cfg)
    if not isinstance(hyp, D2Channel):
        raise InputError("validation needs a D2 channel hypothesis")
    data = _nonempty(load_data(cfg.data), cfg.data)
    fit = di_cc(data, restarts=cfg.restarts, seed=cfg.seed, n=cfg.n, workers=cfg.threads)
    verdict = di_tv(hyp, data, k=cfg.k, reference_region=fit.region, n=cfg.n)
    if cfg.ranges:
        try:
            verdict.ranges = parameter_ranges(hyp, data, verdict.delta, fit.region, n=cfg.n)
        except NotValidatedError as exc:
            _say(f"ranges not computed: {exc}")
    doc = formats.verdict_doc(verdict)
    try:
        from .geometry import mu

        doc["mu"] = mu(hyp.transverse, abs(hyp.d3), abs(hyp.c3))
    except ZeroDivisionError:
        doc["mu"] = None
    formats.write_report(cfg.out, doc)
    state = "validated" if verdict.validated else f"falsified ({len(verdict.offenders)} offending points)"
    print(f"hypothesis {state}; delta = {verdict.delta:.4g}")
    if cfg.figure:
        region = boundary(hyp, cfg.n)
        svg.write(cfg.figure, svg.figure(
            [(region.polygon, "#d62728", "hypothesis"), (fit.region.polygon, "#2ca02c", "minimal set")],
            data.p, [o.index for o in verdict.offenders], title="DI-TV",
        ))
    return EXIT_OK


def cmd_characterize(cfg: RunConfig):
    from .protocols import di_cc

    data = _nonempty(load_data(cfg.data), cfg.data)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = di_cc(data, restarts=cfg.restarts, seed=cfg.seed, k=cfg.k, n=cfg.n, workers=cfg.threads)
    for w in caught:
        _say(f"warning: {w.message}")
    doc = formats.class_doc(fit)
    curves = [(fit.region.polygon, "#2ca02c", "minimal set")]
    if cfg.reference:
        ref = formats.read_channel(cfg.reference)
        if not isinstance(ref, D2Channel):
            raise InputError("reference must be a D2 channel")
        ref_region = boundary(ref, cfg.n)
        doc["delta"] = delta(ref_region, fit.region)
        curves.append((ref_region.polygon, "#d62728", "reference"))
    formats.write_report(cfg.out, doc)
    r = fit.report
    print(f"d2 = {r.d2:.4f}, d3 = {r.d3:.4f}, c3 = {r.c3:.4f}, mu = {r.mu:.4f}, area = {fit.area:.6f}")
    if cfg.figure:
        svg.write(cfg.figure, svg.figure(curves, data.p, title="DI-CC"))
    return EXIT_OK


def cmd_boundary(cfg: RunConfig):
    ch = channel_from_options(cfg)
    if not isinstance(ch, D2Channel):
        from .channels import canonicalize

        if not ch.is_physical():
            raise UnphysicalChannelError("channel is not completely positive")
        ch = canonicalize(ch)[0]
    if cfg.n < 64:
        raise InputError("--n must be >= 64")
    region = boundary(ch, cfg.n)
    formats.write_boundary(cfg.out, region)
    if cfg.region:
        formats.write_region(cfg.region, region)
    if cfg.figure:
        svg.write(cfg.figure, svg.figure([(region.polygon, "#d62728", "boundary")]))
    print(f"{len(region.polygon)} vertices, area = {region.area():.6f}")
    return EXIT_OK


def _fmt(x, digits=3):
    return "-" if x is None else f"{x:.{digits}f}"


def _range(r):
    return "(-, -)" if r is None else f"({r[0]:+.3f}, {r[1]:+.3f})"


def report_table(docs, labels=None) -> str:
    """Rows in the column order parameters, ranges, delta, mu."""
    labels = list(labels or [chr(ord("A") + i) for i in range(len(docs))])
    lines = []
    verdicts = [(l, d) for l, d in zip(labels, docs) if d["kind"] == "verdict"]
    classes = [(l, d) for l, d in zip(labels, docs) if d["kind"] == "class"]
    if verdicts:
        lines.append("validation")
        lines.append(f"{'':3} {'(d1, d2, d3, c3)':34} {'parameter ranges (d1; d2; d3; c3)':60} {'delta':>7} {'mu':>7}")
        for label, d in verdicts:
            hyp = d["hypothesis"] or []
            params = "(" + ", ".join(f"{x:.3f}" for x in hyp) + ")"
            rg = d.get("ranges") or {}
            ranges = ", ".join(_range(rg.get(k)) for k in ("d1", "d2", "d3", "c3"))
            lines.append(f"{label:3} {params:34} {ranges:60} {_fmt(d['delta']):>7} {_fmt(d.get('mu')):>7}")
    if classes:
        lines.append("characterization")
        lines.append(f"{'':3} {'(d2, d3, c3)':26} {'delta':>7} {'mu':>7}")
        for label, d in classes:
            params = f"({d['d2']:.3f}, {d['d3']:.3f}, {d['c3']:.3f})"
            lines.append(f"{label:3} {params:26} {_fmt(d.get('delta')):>7} {_fmt(d['mu']):>7}")
    for label, d in zip(labels, docs):
        if d["kind"] == "fit":
            lines.append(f"{label}: fits {sorted(d['fits'])}, fidelity {_fmt(d.get('fidelity'), 4)}")
    return "\n".join(lines)


def cmd_report(cfg: RunConfig):
    docs = []
    for f in cfg.files:
        if not Path(f).is_file():
            raise InputError(f"no such file: {f}")
        docs.append(formats.read_report(f))
    if cfg.labels and len(cfg.labels) != len(docs):
        raise InputError("--labels must name every file")
    print(report_table(docs, cfg.labels))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "qpt": cmd_qpt,
    "validate": cmd_validate,
    "characterize": cmd_characterize,
    "boundary": cmd_boundary,
    "report": cmd_report,
}


def main(argv=None) -> int:
    from .protocols import InfeasibleDataError

    try:
        cfg = load_config(argv)
        return COMMANDS[cfg.command](cfg)
    except SystemExit as exc:
        # argparse reports usage errors with status 2
        return int(exc.code or 0)
    except InfeasibleDataError as exc:
        _say(f"infeasible: {exc}")
        for i in exc.witnesses:
            _say(f"  witness {i}")
        return EXIT_INFEASIBLE
    except (InputError, UnphysicalChannelError, formats.FormatError, FileNotFoundError) as exc:
        _say(f"error: {exc}")
        return EXIT_INPUT
    except (InfeasibleError, RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        _say(f"numeric failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
