"""Command-line entry point: ``rydswitch <subcommand>``.

Tables are tab-separated with a ``#`` comment block describing the model
and run. Each run also writes ``<output>.manifest.json`` (or a JSON line on
stderr when writing to stdout).
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, acceptance, eit, fitting, montecarlo as mc, params, storage_switch as ss
from .config import ConfigError, available_presets, load_config, load_preset

EXIT_OK, EXIT_ACCEPTANCE, EXIT_USAGE, EXIT_CONFIG, EXIT_VALIDITY, EXIT_NONCONVERGED = 0, 1, 2, 3, 4, 5
MHZ = 2e6 * math.pi


class ValidityEscalation(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def render_table(columns, rows, comments=()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write("\t".join(columns) + "\n")
    for r in rows:
        buf.write("\t".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _emit(args, text: str, summary: dict | None = None):
    out = getattr(args, "output", None)
    manifest = {
        "subcommand": args.command,
        "preset": getattr(args, "preset", None),
        "config": getattr(args, "config", None),
        "seed": getattr(args, "seed", None),
        "output": out or "-",
        "version": __version__,
        "argv": sys.argv[1:],
        "output_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if summary is not None:
        manifest["summary"] = summary
    if out:
        Path(out).write_text(text)
        Path(out + ".manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    else:
        sys.stdout.write(text)
        if not getattr(args, "no_manifest", False):
            sys.stderr.write(json.dumps(manifest, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _provenance(args, extra=()):
    lines = [f"rydswitch {__version__} {args.command}"]
    if getattr(args, "config", None):
        lines.append(f"config: {args.config}")
    elif getattr(args, "preset", None):
        lines.append(f"preset: {args.preset}")
    if getattr(args, "seed", None) is not None:
        lines.append(f"seed: {args.seed}")
    lines.extend(extra)
    return lines


def _load(args):
    if getattr(args, "config", None):
        return load_config(args.config)
    return load_preset(args.preset)


def _parse_assignments(items) -> dict:
    out = {}
    for item in items or ():
        for part in item.split(","):
            if not part.strip():
                continue
            if "=" not in part:
                raise ConfigError(f"expected name=value, got {part!r}")
            k, v = part.split("=", 1)
            out[k.strip()] = _coerce(v.strip())
    return out


def _coerce(v: str):
    low = v.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return float(v)
    except ValueError:
        return v


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_DERIVE_ROWS = (
    # field, index, label, scale, unit, reference key
    ("rms_radii", 0, "sigma_x", 1e-6, "um", "rms_radius_x"),
    ("rms_radii", 1, "sigma_y", 1e-6, "um", "rms_radius_y"),
    ("rms_radii", 2, "sigma_z", 1e-6, "um", "rms_radius_z"),
    ("peak_density", None, "rho_p", 1e18, "1e12/cm^3", "peak_density"),
    ("E_field_gate", None, "E_c,g", 1e6, "MV/m", "E_field_gate"),
    ("E_field_target", None, "E_c,t", 1e6, "MV/m", "E_field_target"),
    ("dipole_gate", None, "d_g", None, "e a0", None),
    ("dipole_target", None, "d_t", None, "e a0", None),
    ("rabi_gate", None, "Omega_c,g/2pi", MHZ, "MHz", "rabi_gate"),
    ("rabi_target", None, "Omega_c,t/2pi", MHZ, "MHz", "rabi_target"),
    ("blockade_radius_gate", None, "r_b,g", 1e-6, "um", "blockade_radius_gate"),
    ("blockade_radius_target", None, "r_b,t", 1e-6, "um", "blockade_radius_target"),
    ("cross_section_target", None, "sigma_t", 1e-13, "1e-13 m^2", None),
    ("absorption_length", None, "l_a", 1e-6, "um", "absorption_length"),
    ("group_velocity", None, "v_g (formula)", 1e3, "km/s", "group_velocity"),
    ("group_velocity_delay", None, "v_g (delay)", 1e3, "km/s", "group_velocity_delay"),
    ("transparency_width_gate", None, "Delta_T,g/2pi", MHZ, "MHz", "transparency_width_gate"),
    ("transparency_width_target", None, "Delta_T,t/2pi", MHZ, "MHz", "transparency_width_target"),
    ("od_eit_gate", None, "OD_EIT,g", 1.0, "", "od_eit_gate"),
    ("od_eit_target", None, "OD_EIT,t", 1.0, "", "od_eit_target"),
    ("correlation_time", None, "tau_c (prediction)", 1e-6, "us", "correlation_time"),
    ("dipole_potential", None, "V0/kB", 1e-6 * 1.380649e-23, "uK", "dipole_potential"),
    ("time_avg_potential", None, "<V0>/kB", 1e-6 * 1.380649e-23, "uK", "time_avg_potential"),
)


def cmd_derive(args) -> int:
    pre = _load(args)
    d = params.derive(pre.experiment)
    e_a0 = params.CONSTANTS.e_charge * params.CONSTANTS.a0
    ref_scale = {"dipole_potential": 1e-6, "time_avg_potential": 1e-6}
    rows = []
    for fld, idx, label, scale, unit, ref_key in _DERIVE_ROWS:
        v = getattr(d, fld)
        v = v[idx] if idx is not None else v
        v = v / (scale if scale is not None else e_a0)
        ref = pre.reference.get(ref_key) if ref_key else None
        if ref is not None:
            ref = ref / ref_scale.get(ref_key, scale)
            dev = (v - ref) / ref
        else:
            ref = dev = ""
        rows.append((label, v, unit, ref, dev))
    rows.append(("r_b,t / v_g (delay)", d.blockade_radius_target / d.group_velocity_delay / 1e-6, "us", "", ""))
    text = render_table(("quantity", "value", "unit", "reference", "rel_dev"), rows,
                        _provenance(args, ["derived from raw inputs; reference = published rounded values"]))
    _emit(args, text, {k: v for k, v in d.as_dict().items()})
    return EXIT_OK


def cmd_spectrum(args) -> int:
    pre = _load(args)
    sec = pre.section("spectrum")
    sec.update(_parse_assignments(args.set))
    model = fitting.get_model("eit_transmission")
    x = np.linspace(args.start, args.stop, args.points)
    y = model(x, **{k: float(v) for k, v in sec.items() if k in model.params})
    text = render_table(("delta_s/2pi [MHz]", "T"), zip(x, y), _provenance(
        args, ["T = exp(-OD / (1 + (2(D - D0)/G)^2)) + T0 exp(-4 ln2 (D - D1)^2 / DT^2)",
               "parameters: " + ", ".join(f"{k}={v}" for k, v in sorted(sec.items()))]))
    _emit(args, text)
    return EXIT_OK


_CURVE_SECTIONS = {
    "transmitted_mean": "propagation", "extinction_vs_ng_full": "storage", "extinction_vs_ng_rapid": "storage_rapid",
    "herald_probability": "herald", "postselected_extinction_vs_ng": "postselection",
    "extinction_post_vs_nt": "switch", "extinction_total_vs_nt": "switch", "eit_transmission": "spectrum",
}


def cmd_curve(args) -> int:
    model = fitting.get_model(args.model)
    pre = _load(args)
    p = dict(model.defaults)
    sec = pre.section(_CURVE_SECTIONS.get(args.model, ""))
    p.update({k: float(v) for k, v in sec.items() if k in model.params})
    p.update(_parse_assignments(args.set))
    unknown = set(p) - set(model.params)
    if unknown:
        raise ConfigError(f"unknown parameters for {args.model}: {sorted(unknown)}")
    x = np.linspace(args.start, args.stop, args.points)
    with warnings.catch_warnings(), fitting.validity_warnings():
        if args.strict:
            warnings.simplefilter("error", ss.ModelValidityWarning)
        y = model(x, **p)
    cols = [model.x_label, model.y_label]
    comments = _provenance(args, [f"model {model.name}: {model.doc}",
                                  "parameters: " + ", ".join(f"{k}={_fmt(v)}" for k, v in p.items())])
    if args.noise:
        rng = np.random.default_rng(args.seed)
        sig = args.noise * np.abs(y) + args.noise_floor
        y = y + rng.normal(size=y.size) * sig
        rows = zip(x, y, sig)
        cols.append("sigma")
        comments.append(f"synthetic: relative noise {args.noise}, floor {args.noise_floor}")
    else:
        rows = zip(x, y)
    _emit(args, render_table(cols, rows, comments))
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    pre = _load(args)
    sec = pre.section("montecarlo")
    sec.update(_parse_assignments(args.set))
    scenario = mc.Scenario(**sec)
    batch = mc.simulate_cycles(args.cycles, scenario, args.seed, workers=args.workers)
    ex = mc.analytic_cycle_expectation(scenario)
    tot = batch.totals()
    rows = []

    def add(name, est, analytic, measured=""):
        rows.append((name, est.value, est.se, est.shot_noise_se, analytic, measured))

    eps = mc.estimate_extinction(batch)
    add("eps", eps, ex.eps, pre.section("measured").get("eps_total", ""))
    if tot["heralds"] and batch.heralded[~batch.reference].any():
        try:
            add("eps_post", mc.estimate_extinction(batch, postselect=True), ex.eps_post,
                pre.section("measured").get("eps_post", ""))
        except Exception:  # no clicks in heralded cycles
            pass
    if args.sample_cycles and len(batch) >= 2 * args.sample_cycles:
        add("eps_per_sample", mc.estimate_extinction_per_sample(batch, args.sample_cycles), ex.eps)
    add("p_h", mc.herald_rate(batch), ex.p_herald)
    sig = ~batch.reference
    add("p_stored", mc.estimate_fraction(batch.column(2)[sig] >= 1), ex.p_stored)
    # worker count stays out of the table so outputs match across worker counts
    comments = _provenance(args, [f"cycles: {args.cycles}",
                                  "scenario: " + ", ".join(f"{k}={_fmt(v)}" for k, v in scenario.as_dict().items()),
                                  "se: empirical; shot_se: Poisson counting on clicks; "
                                  "measured: experimental value, not a model target"])
    text = render_table(("quantity", "estimate", "se", "shot_se", "analytic", "measured"), rows, comments)
    if args.records:
        recs = batch.to_records()[: args.records]
        text += "\n" + render_table(
            ("cycle", "reference", "gate_in", "excitations", "stored", "target_in", "transmitted", "detected",
             "herald", "background_herald"),
            [(r.rng_stream_id, r.reference, r.gate_in, r.excitations, r.stored, r.target_in, r.target_transmitted,
              r.target_detected, r.herald_detected, r.background_herald) for r in recs])
    if args.g2:
        g = mc.estimate_g2(mc.blockaded_clicks(args.g2_cycles, args.g2_mean, args.g2_window,
                                               float(pre.section("g2").get("tau_c", 0.23)), args.seed),
                           args.g2_bin, tau_max=args.g2_taumax)
        text += "\n" + render_table(("tau [us]", "g2", "se", "coincidences", "low_stats"), g.rows(),
                                    ["g2 of a blockaded-transit click simulation"])
    _emit(args, text, {**tot, "eps": eps.value, "eps_se": eps.se, "workers": args.workers})
    return EXIT_OK


def _is_float(s) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _read_data(path):
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.replace(",", " ").split())
    # drop a header line of column names
    if rows and not _is_float(rows[0][0]):
        rows = rows[1:]
    try:
        arr = np.array(rows, dtype=float)
    except ValueError:
        raise ConfigError(f"{path}: ragged or non-numeric data") from None
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ConfigError(f"{path}: no data rows")
    if arr.shape[1] < 2:
        raise ConfigError(f"{path}: need at least x and y columns")
    sig = arr[:, 2] if arr.shape[1] >= 3 else None
    return fitting.DataSeries(arr[:, 0], arr[:, 1], sig)


def cmd_fit(args) -> int:
    data = _read_data(args.data)
    model = fitting.get_model(args.model)
    free = tuple(s.strip() for s in args.free.split(",") if s.strip())
    fixed = {k: float(v) for k, v in _parse_assignments(args.fix).items()}
    init = {k: float(v) for k, v in _parse_assignments(args.init).items()}
    bounds = {}
    for k, v in _parse_assignments(args.bound).items():
        lo, hi = str(v).split(":")
        bounds[k] = (float(lo), float(hi))
    with warnings.catch_warnings():
        if args.strict:
            warnings.simplefilter("error", ss.ModelValidityWarning)
        res = fitting.fit(fitting.FitProblem(model, free, fixed, init, bounds), data, max_iter=args.max_iter)
    rows = [(k, res.values[k], res.std_errors.get(k, ""), "free" if k in free else "fixed") for k in res.values]
    comments = _provenance(args, [f"model {model.name}: {model.doc}", f"data: {args.data} ({len(data)} points)",
                                  f"converged: {res.converged} ({res.diagnostics['reason']}), "
                                  f"iterations: {res.iterations}, chi2: {res.chi2:.6g}, dof: {res.dof}"])
    _emit(args, render_table(("parameter", "value", "std_error", "status"), rows, comments),
          {"values": res.values, "std_errors": res.std_errors, "converged": res.converged, "chi2": res.chi2,
           "iterations": res.iterations, "diagnostics": res.diagnostics})
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_acceptance(args) -> int:
    buf = io.StringIO()
    results = acceptance.run_all(verbose=args.verbose, stream=buf)
    n_fail = sum(1 for r in results if not r.report_only and not r.passed)
    buf.write(f"# {len(results) - n_fail}/{len(results)} criteria without failures\n")
    _emit(args, buf.getvalue(), {f"criterion_{r.number}": r.status() for r in results})
    return EXIT_OK if n_fail == 0 else EXIT_ACCEPTANCE


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rydswitch", description="Rydberg single-photon switch models.",
                                epilog="exit codes: 0 ok, 1 acceptance failure, 2 usage, 3 config error, "
                                       "4 validity warning with --strict, 5 fit did not converge")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--preset", default="paper-2014",
                       help="named preset (searched in $RYDSWITCH_PRESET_DIR, then built-ins)")
        g.add_argument("--config", help="INI config file with unit suffixes")
        sp.add_argument("-o", "--output", help="output file (default stdout); a .manifest.json is written next to it")
        sp.add_argument("--no-manifest", action="store_true", help="suppress the manifest line on stderr")
        sp.add_argument("--strict", action="store_true", help="turn model-validity warnings into exit code 4")
        if seed:
            sp.add_argument("--seed", type=int, default=0, help="random seed")

    sp = sub.add_parser("derive", help="derived-parameter report")
    common(sp)
    sp.set_defaults(func=cmd_derive)

    sp = sub.add_parser("spectrum", help="EIT transmission spectrum table")
    common(sp)
    sp.add_argument("--start", type=float, default=-20.0, help="first detuning / 2pi in MHz")
    sp.add_argument("--stop", type=float, default=20.0, help="last detuning / 2pi in MHz")
    sp.add_argument("--points", type=int, default=201)
    sp.add_argument("--set", action="append", help="override spectrum parameters, name=value[,...]")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("curve", help="evaluate a registered model on a sweep")
    common(sp, seed=True)
    sp.add_argument("model", help="model name; `rydswitch presets` lists them")
    sp.add_argument("--start", type=float, default=0.0)
    sp.add_argument("--stop", type=float, default=4.0)
    sp.add_argument("--points", type=int, default=41)
    sp.add_argument("--set", action="append", help="parameter overrides name=value[,...]")
    sp.add_argument("--noise", type=float, default=0.0, help="relative Gaussian noise for synthetic data")
    sp.add_argument("--noise-floor", type=float, default=0.0, help="absolute noise added to the relative part")
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("montecarlo", help="simulate gate-target cycles")
    common(sp, seed=True)
    sp.add_argument("-n", "--cycles", type=int, default=100_000)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--set", action="append", help="scenario overrides name=value[,...]")
    sp.add_argument("--sample-cycles", type=int, default=1000,
                    help="cycles per atomic sample for the per-sample estimator (0 disables)")
    sp.add_argument("--records", type=int, default=0, help="append the first N cycle records")
    sp.add_argument("--g2", action="store_true", help="append a g2 table of blockaded transit clicks")
    sp.add_argument("--g2-cycles", type=int, default=50_000)
    sp.add_argument("--g2-mean", type=float, default=2.0, help="mean incoming photons per window")
    sp.add_argument("--g2-window", type=float, default=20.0, help="window length in us")
    sp.add_argument("--g2-bin", type=float, default=0.05, help="bin width in us")
    sp.add_argument("--g2-taumax", type=float, default=1.0, help="largest |tau| in us")
    sp.set_defaults(func=cmd_montecarlo)

    sp = sub.add_parser("fit", help="fit a registered model to x y [sigma] data")
    common(sp)
    sp.add_argument("model")
    sp.add_argument("data", help="whitespace-delimited file; '#' comments and one header line allowed")
    sp.add_argument("--free", required=True, help="comma-separated free parameters")
    sp.add_argument("--fix", action="append", help="fixed values name=value[,...]")
    sp.add_argument("--init", action="append", help="initial values name=value[,...]")
    sp.add_argument("--bound", action="append", help="bounds name=lo:hi[,...]")
    sp.add_argument("--max-iter", type=int, default=200)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("acceptance", help="run the acceptance suite")
    sp.add_argument("-o", "--output")
    sp.add_argument("--no-manifest", action="store_true")
    sp.add_argument("-v", "--verbose", action="store_true", help="print every check")
    sp.set_defaults(func=cmd_acceptance)

    sp = sub.add_parser("presets", help="list available presets and models")
    sp.set_defaults(func=lambda a: (print("presets: " + ", ".join(available_presets())),
                                    print("models: " + ", ".join(fitting.available_models())), EXIT_OK)[-1])
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            if getattr(args, "strict", False):
                warnings.simplefilter("error", ss.ModelValidityWarning)
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (mc.ScenarioError, params.DomainError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    except ss.ModelValidityWarning as exc:
        print(f"validity warning escalated: {exc}", file=sys.stderr)
        return EXIT_VALIDITY
    except fitting.FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
