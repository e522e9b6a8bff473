"""Batch front end: ``mqbqr validate <cfg>`` and ``mqbqr run <cfg>``.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import formulas, losses, simulator, small_signal
from .config import ConfigError, RunConfig, load, preset_path
from .control import (AnfisController, ProfileStep, PvPanel, anfis_train, clone_pid,
                      closed_loop_simulate, default_model, demo_dataset, fit_panel,
                      linear_dataset, nominal_pid, pv_operating_point)
from .control.anfis import DEFAULT_LR
from .control.closed_loop import write_closed_loop_csv, write_rmse_csv, write_training_csv
from .csvio import write_csv
from .errors import ConverterError, NumericalError
from .model import STATE_NAMES, SourceInputs

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


def _kv_csv(path, rows):
    return write_csv(path, ["quantity", "value"], rows)


# ---------------------------------------------------------------------------
# scenario handlers; each returns the list of files it wrote

def run_simulate(cfg: RunConfig):
    b = cfg.block
    p = cfg.params
    sc = simulator.SimConfig(steps_per_phase=b.get("steps_per_phase", 64))
    out = cfg.output_dir
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        ss = simulator.find_steady_state(p, cfg.variant, SourceInputs.from_params(p), sc,
                                         x_ref=b.get("x_ref"))
    files = [simulator.write_waveform_csv(ss.cycle, out / "waveform.csv")]
    bal = simulator.balance_check(ss)
    rows = [("D", p.D), ("spectral_radius", ss.rho), ("one_minus_rho", 1.0 - ss.rho),
            ("fixed_point_residual", ss.residual),
            ("n_conserved", len(ss.invariants))]
    rows += [(f"x0_{n}", v) for n, v in zip(STATE_NAMES, ss.x_periodic)]
    rows += ss.measurements.as_rows()
    rows += [(f"balance_rel_{n}", v) for n, v in zip(STATE_NAMES, bal.relative)]
    rows += [("warning", str(w.message)) for w in caught]
    files.append(_kv_csv(out / "measurements.csv", rows))
    if b.get("duties"):
        files.append(simulator.write_sweep_csv(
            simulator.sweep(p, b["duties"], cfg.variant, sc), out / "sweep.csv"))
    return files


def run_design(cfg: RunConfig):
    b = cfg.block
    p = cfg.params
    out = cfg.output_dir
    Vin = b.get("Vin", p.Vpv)
    Vo = b.get("Vo", formulas.ideal_gain(p.D) * Vin)
    D = formulas.duty_for_output(Vin, Vo)
    files = []
    rows = [("Vin", Vin), ("Vo", Vo), ("D", D), ("ideal_gain", formulas.ideal_gain(D))]
    if b.get("ripple"):
        spec = formulas.SizingSpec(Vin=Vin, Vo=Vo, D=D, fs=b.get("fs", p.fs), R=b.get("R", p.R),
                                   **b["ripple"])
        rows += list(formulas.size_components(spec).items())
    files.append(_kv_csv(out / "design.csv", rows))
    if b.get("pv"):
        pv = dict(b["pv"])
        n = int(pv.pop("n_points", 40))
        panel = PvPanel(**pv)
        fit = fit_panel(panel)
        V = np.linspace(0, panel.Voc, n)
        I = [pv_operating_point(panel, v, fit) for v in V]
        files.append(write_csv(out / "pv_curve.csv", ["V", "I", "P"],
                               [(v, i, v * i) for v, i in zip(V, I)]))
        files.append(_kv_csv(out / "pv_fit.csv", [
            ("I0", fit.I0), ("n_Vt", fit.a), ("fit_residual", fit.residual),
            ("Vmp_times_Imp", panel.Vmp * panel.Imp), ("Pmax_rated", panel.Pmax),
            ("Pmax_conflict", panel.pmax_conflict)]))
    return files


def run_stress(cfg: RunConfig):
    b = cfg.block
    p = cfg.params
    D = b.get("D", p.D)
    Vo = b.get("Vo", formulas.ideal_gain(D) * p.Vpv)
    Io = b.get("Io", Vo / p.R)
    rep = formulas.device_stress_report(D, Io, p.Vpv, p.Vbat, Vo)
    rows = []
    for k, v in {**rep.voltages(), **rep.currents()}.items():
        rows.append((k, v, rep.alternates.get(k, ""), rep.flags.get(k, "")))
    return [write_csv(cfg.output_dir / "stress.csv", ["quantity", "value", "alternate", "flag"], rows)]


def run_bode(cfg: RunConfig):
    b = cfg.block
    p = cfg.params
    u = SourceInputs.from_params(p)
    avg = small_signal.assemble_averaged(p, cfg.variant)
    which = small_signal.TFInput(b.get("input", "SourceVoltage"))
    x_op = small_signal.equilibrium(avg, u)
    tf = small_signal.transfer_function(avg, which, x_op, u)
    f = np.logspace(np.log10(b.get("f_min", 0.1)), np.log10(b.get("f_max", 1e5)),
                    b.get("n_points", 200))
    G = small_signal.frequency_response(tf, f)
    out = cfg.output_dir
    n = len(tf.den)
    files = [small_signal.write_bode_csv(f, G, out / "bode.csv")]
    num = np.concatenate([np.zeros(n - len(tf.num)), tf.num])
    files.append(write_csv(out / "transfer_function.csv", ["power", "num", "den"],
                           [(n - 1 - k, num[k], tf.den[k]) for k in range(n)]))
    files.append(_kv_csv(out / "operating_point.csv",
                         [(nm, v) for nm, v in zip(STATE_NAMES, x_op)]
                         + [("dc_gain", tf.dc_gain()), ("units", tf.units),
                            ("origin_cancellations", tf.n_origin_cancel)]))
    return files


def run_losses(cfg: RunConfig):
    b = cfg.block
    out = cfg.output_dir
    mode = b.get("copper_mode", "linear")
    if b.get("from_waveforms"):
        ss = simulator.find_steady_state(cfg.params, cfg.variant)
        br = losses.breakdown_from_waveforms(ss, cfg.params, copper_mode=mode)
    else:
        inp = b.get("inputs", "published")
        li = losses.PUBLISHED_LOSS_INPUTS if inp == "published" else losses.LossInputs(**inp)
        br = losses.loss_breakdown(li, mode)
    files = [losses.write_loss_csv(br, out / "losses.csv")]
    P_out = b.get("P_out", 200.0)
    rows = [("P_out", P_out), ("P_total", br.P_total), ("efficiency", losses.efficiency(P_out, br))]
    if b.get("P_total_override") is not None:
        rows += [("P_total_override", b["P_total_override"]),
                 ("efficiency_override", losses.efficiency(P_out, b["P_total_override"]))]
    files.append(_kv_csv(out / "efficiency.csv", rows))
    return files


def run_compare(cfg: RunConfig):
    rows = formulas.topology_comparison(cfg.block.get("D", 0.5))
    out = cfg.output_dir
    md = out / "compare.md"
    md.parent.mkdir(parents=True, exist_ok=True)
    md.write_text(formulas.comparison_markdown(rows))
    return [formulas.comparison_csv(rows, out / "compare.csv"), md]


def run_train(cfg: RunConfig):
    b = cfg.block
    out = cfg.output_dir
    kind = b.get("dataset", "linear")
    n = b.get("n_samples", 200)
    if kind == "linear":
        data = linear_dataset(n, cfg.seed)
    elif kind == "demo":
        data = demo_dataset(n, cfg.seed)
    else:
        data = None
    epochs = b.get("epochs", 200)
    lr = b.get("learning_rate") or DEFAULT_LR
    if data is None:
        model, hist, data = clone_pid(cfg.params, 52.0, 2.0, cfg.seed, epochs=epochs)
    else:
        nominal = b.get("nominal") or float(np.mean([s.duty for s in data]))
        model = default_model(b.get("K", 5), nominal, b.get("e_scale", 1.0), b.get("de_scale", 1.0))
        model, hist = anfis_train(model, data, epochs, lr)
    files = [write_training_csv(data, out / "training_set.csv"),
             write_rmse_csv(hist, out / "rmse.csv")]
    mpath = out / "anfis_model.json"
    mpath.write_text(json.dumps({
        "mf_e": model.mf_e.tolist(), "mf_de": model.mf_de.tolist(),
        "consequents": model.conseq.tolist(), "e_scale": model.e_scale,
        "de_scale": model.de_scale}, indent=1) + "\n")
    files.append(mpath)
    return files


def run_closedloop(cfg: RunConfig):
    b = cfg.block
    p = cfg.params
    Vref = b.get("Vref", 52.0)
    horizon = b.get("horizon", 2.0)
    profile = [ProfileStep(st["t"], {k: v for k, v in st.items() if k != "t"})
               for st in b.get("profile", [])]
    if b.get("controller", "pid") == "pid":
        ctrl = nominal_pid(p, Vref, b.get("gains"))
    else:
        an = b.get("anfis") or {}
        model, _, _ = clone_pid(p, Vref, an.get("train_horizon", horizon), cfg.seed,
                                   epochs=an.get("epochs", 200))
        ctrl = AnfisController(model, 0.05, 0.95)
    res = closed_loop_simulate(p, ctrl, Vref, horizon, profile, cfg.variant)
    out = cfg.output_dir
    files = [write_closed_loop_csv(res, out / "closedloop.csv", b.get("stride", 50))]
    n_tail = max(1, len(res.Vo) // 10)
    files.append(_kv_csv(out / "metrics.csv", [
        ("settling_time", res.settling_time), ("overshoot_pct", res.overshoot),
        ("steady_state_error", res.steady_state_error),
        ("tail_max_abs_error", float(np.max(np.abs(res.Vo[-n_tail:] - Vref)))),
        ("duty_min", float(res.duty.min())), ("duty_max", float(res.duty.max()))]))
    return files


HANDLERS = {
    "simulate": run_simulate, "design": run_design, "stress": run_stress, "bode": run_bode,
    "losses": run_losses, "compare": run_compare, "train": run_train, "closedloop": run_closedloop,
}


def _resolve(path: str) -> Path:
    p = Path(path)
    if not p.exists() and not p.suffix:
        cand = preset_path(path)
        if cand.exists():
            return cand
    return p


def cmd_validate(path, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        load(_resolve(path))
    except ConfigError as exc:
        for where, msg in exc.problems:
            print(f"error: {where}: {msg}", file=stream)
        return EXIT_INVALID
    print("ok", file=stream)
    return EXIT_OK


def cmd_run(path, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        cfg = load(_resolve(path))
    except ConfigError as exc:
        for where, msg in exc.problems:
            print(f"error: {where}: {msg}", file=stream)
        return EXIT_INVALID
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    try:
        files = HANDLERS[cfg.scenario](cfg)
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=stream)
        return EXIT_NUMERIC
    except (ConverterError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {cfg.scenario}: {exc}", file=stream)
        return EXIT_INVALID
    for f in files:
        print(f, file=stream)
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="mqbqr", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in ("validate", "run"):
        sp = sub.add_parser(name)
        sp.add_argument("config", help="JSON config path or shipped preset name")
    args = ap.parse_args(argv)
    return cmd_validate(args.config) if args.cmd == "validate" else cmd_run(args.config)


if __name__ == "__main__":
    sys.exit(main())
