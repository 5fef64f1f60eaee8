"""Command-line front door for the virtual testbed.

Every command is deterministic given its inputs and seed (except `serve`),
and fixed scenario + seed reproduce byte-identical CSV artifacts.  Errors
leave as machine-readable JSON {code, message, context} on stderr with a
nonzero exit code.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import beamform, cell, control
from .errors import RisError
from .geometry import all_off
from .optimizer import OptimizerSettings
from .testbed import Scenario, Testbed, load_scenario, write_pattern_csv, write_trace_csv


def _fail(exc: RisError, exit_code: int = 1):
    click.echo(json.dumps(exc.to_json()), err=True)
    sys.exit(exit_code)


def _load_scenario(path) -> Scenario:
    return load_scenario(path) if path else Scenario()


def _load_config(path, geom) -> np.ndarray:
    with open(path) as fh:
        return control.config_from_hex(fh.read().strip(), geom.rows, geom.cols)


def _save_config(bits, path):
    with open(path, "w") as fh:
        fh.write(control.config_to_hex(bits) + "\n")


def _parse_band(text: str) -> tuple:
    try:
        lo, hi = (float(part) for part in text.split(":"))
        return lo, hi
    except ValueError as exc:
        raise RisError("BAD_ARG", f"band must be 'lo:hi' in Hz, got {text!r}") from exc


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except RisError as exc:
            _fail(exc)


@click.group(cls=_Group)
@click.version_option()
def main():
    """Virtual n78-band reconfigurable-surface testbed."""


@main.group(name="cell")
def cell_group():
    """Unit-cell model checks."""


@cell_group.command("validate")
@click.option("--model", "model_path", type=click.Path(exists=True), default=None,
              help="Anchor-table JSON (packaged default model if omitted).")
@click.option("--band", default="3.7e9:3.8e9", show_default=True, help="lo:hi in Hz.")
@click.option("--mag-floor", default=-3.0, show_default=True, help="Magnitude floor in dB.")
@click.option("--phase-center", default=180.0, show_default=True)
@click.option("--phase-tol", default=20.0, show_default=True)
@click.option("--grid", default=101, show_default=True, help="Evaluation grid points.")
def cell_validate(model_path, band, mag_floor, phase_center, phase_tol, grid):
    """Check the two-state reflection response over a band; exit 0 iff pass."""
    model = cell.load_model(model_path) if model_path else cell.default_model()
    report = model.validate_band(_parse_band(band), mag_floor, phase_center, phase_tol, grid)
    click.echo(json.dumps(report.to_json(), indent=2))
    sys.exit(0 if report.pass_ else 1)


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None)
@click.option("--theta", required=True, type=float, help="Target polar angle, degrees.")
@click.option("--phi", default=0.0, show_default=True, type=float)
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output .hex file.")
def codebook(scenario_path, theta, phi, out_path):
    """Quantize an array-theory steering codebook for the scenario feed."""
    sc = _load_scenario(scenario_path)
    if not 0.0 <= theta < 90.0:
        raise RisError("BAD_ARG", f"theta must be in [0, 90), got {theta}")
    ideal = beamform.ideal_element_phase_deg(sc.geometry, sc.placement.tx_pos,
                                             theta, phi % 360.0, sc.f_probe)
    bits = beamform.quantize_codebook(ideal, sc.model, sc.f_probe)
    _save_config(bits, out_path)
    click.echo(json.dumps({"theta_deg": theta, "phi_deg": phi, "out": str(out_path),
                           "on_bits": int(bits.sum()), "elements": int(bits.size)}))


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Config hex file (all-OFF if omitted).")
@click.option("--theta-min", default=-90.0, show_default=True)
@click.option("--theta-max", default=90.0, show_default=True)
@click.option("--step", default=0.25, show_default=True, help="Grid step, degrees.")
@click.option("--phi", default=0.0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output CSV.")
def pattern(scenario_path, config_path, theta_min, theta_max, step, phi, out_path):
    """Far-field cut of a configuration (normalized to 0 dB peak)."""
    sc = _load_scenario(scenario_path)
    bits = _load_config(config_path, sc.geometry) if config_path else all_off(sc.geometry)
    grid = np.arange(theta_min, theta_max + step / 2, step)
    rows = beamform.radiation_pattern(sc.geometry, bits, sc.model, sc.placement.tx_pos,
                                      sc.f_probe, grid, phi)
    write_pattern_csv(rows, out_path)
    peak = beamform.pattern_peak_deg(rows)
    click.echo(json.dumps({"out": str(out_path), "peak_theta_deg": peak, "points": len(rows)}))


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None)
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def apply(scenario_path, config_path):
    """Apply a config through the control plane; print block census and power."""
    sc = _load_scenario(scenario_path)
    tb = Testbed(sc)
    bits = _load_config(config_path, sc.geometry)
    report = tb.apply(bits)
    click.echo(json.dumps({
        "blocks": {str(a): s for a, s in report.items()},
        "census": tb.chain.block_summary(),
        "power_db": tb.current_power_db,
    }, indent=2))
    if any(status != "ok" for status in report.values()):
        sys.exit(1)


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None)
@click.option("--passes", default=3, show_default=True)
@click.option("--epsilon-db", default=0.0, show_default=True)
@click.option("--order", default="row-major", show_default=True,
              type=click.Choice(["row-major", "random"]))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_spec", required=True,
              help="trace CSV path, or 'trace.csv,final.hex' to also save the config.")
def optimize(scenario_path, passes, epsilon_db, order, seed, out_spec):
    """Greedy power maximization from the all-OFF configuration."""
    sc = _load_scenario(scenario_path)
    tb = Testbed(sc)
    settings = OptimizerSettings(passes=passes, epsilon_db=epsilon_db,
                                 element_order=order, seed=seed)
    trace = tb.run_optimization(settings)
    parts = [p.strip() for p in out_spec.split(",") if p.strip()]
    write_trace_csv(trace, parts[0])
    outputs = {"trace": parts[0]}
    if len(parts) > 1:
        _save_config(tb.final_config, parts[1])
        outputs["final"] = parts[1]
    click.echo(json.dumps({
        "out": outputs,
        "probes": len(trace.entries),
        "baseline_db": trace.entries[0].power_db,
        "final_db": trace.accepted_powers()[-1],
        "improvement_db": trace.improvement_db(),
    }))


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None)
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--baseline", default="off", show_default=True,
              help="'off' for all-OFF, or a config hex file path.")
@click.option("--out", "out_path", required=True, type=click.Path())
def sweep(scenario_path, config_path, baseline, out_path):
    """Frequency sweep of a config against a baseline over the scenario grid."""
    sc = _load_scenario(scenario_path)
    tb = Testbed(sc)
    bits = _load_config(config_path, sc.geometry)
    bits_base = None if baseline == "off" else _load_config(baseline, sc.geometry)
    rows = tb.run_sweep(bits, bits_base, out_path=out_path)
    deltas = [a - b for _, a, b in rows]
    click.echo(json.dumps({"out": str(out_path), "points": len(rows),
                           "max_delta_db": max(deltas), "min_delta_db": min(deltas)}))


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--console", "console_dir", type=click.Path(), default=None,
              help="Directory with the built operator console (served at /ui).")
def serve(scenario_path, host, port, console_dir):
    """Run the testbed HTTP service."""
    from .service import serve as run_service

    run_service(_load_scenario(scenario_path), host=host, port=port, console_dir=console_dir)


@main.group()
def frames():
    """Wire-frame codec debugging."""


@frames.command("encode")
@click.option("--dest", required=True, help="Block address 0-15 or 'broadcast'.")
@click.option("--opcode", required=True,
              type=click.Choice(["set_config", "get_status", "status_reply", "ping", "pong", "reset"]))
@click.option("--payload", default="", help="Payload as hex.")
def frames_encode(dest, opcode, payload):
    """Encode a frame; prints wire bytes as hex."""
    dest_byte = control.BROADCAST if dest == "broadcast" else int(dest, 0)
    op = getattr(control, f"OP_{opcode.upper()}")
    try:
        body = bytes.fromhex(payload)
    except ValueError as exc:
        raise RisError("BAD_HEX", f"invalid payload hex: {exc}") from exc
    raw = control.encode_frame(control.Frame(dest=dest_byte, opcode=op, payload=body))
    click.echo(raw.hex())


@frames.command("decode")
@click.argument("hex_bytes")
def frames_decode(hex_bytes):
    """Decode wire bytes; prints the frame as JSON."""
    try:
        raw = bytes.fromhex(hex_bytes)
    except ValueError as exc:
        raise RisError("BAD_HEX", f"invalid hex: {exc}") from exc
    frame = control.decode_frame(raw)
    names = {control.OP_SET_CONFIG: "set_config", control.OP_GET_STATUS: "get_status",
             control.OP_STATUS_REPLY: "status_reply", control.OP_PING: "ping",
             control.OP_PONG: "pong", control.OP_RESET: "reset"}
    click.echo(json.dumps({
        "version": frame.version,
        "dest": "broadcast" if frame.dest == control.BROADCAST else frame.dest,
        "opcode": names[frame.opcode],
        "payload_hex": frame.payload.hex(),
    }))


if __name__ == "__main__":
    main()
