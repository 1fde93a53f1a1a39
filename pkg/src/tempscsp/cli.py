"""Command line front end.

Verbs:

* ``run``     - batch pipeline over a CSV signal: writes extrema records
                (JSON lines), a dense response map (CSV matrix) and a
                per-level scale profile (CSV).
* ``stream``  - incremental pipeline over a sample stream on stdin; emits
                provisional and confirmed extremum events as JSON lines.
                Confirmed events match batch mode exactly.
* ``tables``  - recompute reference tables and check every entry against
                its tolerance; exit status 0 only if all checks pass.
* ``demo``    - canned experiments (chirp / two-sine / blink) writing
                plot-ready data files.

Configuration is a flat, typed key-value document with dotted section
names (JSON object, e.g. {"ladder.c": 1.414, "detector.order": 2}).
Unknown keys and wrong types are rejected with the offending field path.
Command line flags mirror the config keys and override the file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import models, normalization, scalespace, selection, spatiotemporal, tables

__all__ = ["PipelineConfig", "ConfigError", "main", "run_signal", "run_stream"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""


class InputError(ValueError):
    """Malformed input file; the message carries the line number."""


# key -> (type, default, help)
_SCHEMA = {
    "kernel.family": (str, "limit", "smoothing family: limit | uniform | gaussian"),
    "ladder.c": (float, math.sqrt(2.0), "scale ratio of the logarithmic ladder"),
    "ladder.tau_max": (float, 4096.0, "coarsest variance of the ladder"),
    "ladder.levels": (int, 16, "number of exposed scale levels"),
    "ladder.pre_stages": (int, 8, "extra stages below the finest level"),
    "ladder.mu": (float, 1.0, "stage time constant (uniform family)"),
    "input.dt": (float, 1.0, "sample period for single-column input"),
    "detector.kind": (str, "extrema",
                      "extrema | quasi-quadrature | scale-profile"),
    "detector.order": (int, 2, "derivative order for extrema detection"),
    "normalization.mode": (str, "variance", "variance | lp"),
    "normalization.gamma": (float, 0.75, "variance normalization exponent"),
    "normalization.p": (float, 0.0,
                        "lp exponent; 0 derives it from gamma"),
    "quasi.Gamma": (float, 0.0, "quasi-quadrature time-decay exponent"),
    "postfilter.enabled": (bool, True, "suppress duplicate scale responses"),
    "delay.compensation": (bool, True, "report delay-compensated times"),
}

_CHOICES = {
    "kernel.family": ("limit", "uniform", "gaussian"),
    "detector.kind": ("extrema", "quasi-quadrature", "scale-profile"),
    "normalization.mode": ("variance", "lp"),
}


@dataclass
class PipelineConfig:
    """Typed flat configuration; keys are the dotted schema names."""

    values: dict

    @classmethod
    def default(cls) -> "PipelineConfig":
        return cls(values={k: v for k, (_, v, _) in _SCHEMA.items()})

    @classmethod
    def from_mapping(cls, mapping: dict) -> "PipelineConfig":
        cfg = cls.default()
        for key, value in mapping.items():
            cfg.set(key, value)
        return cfg

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config parse error: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a flat object")
        return cls.from_mapping(doc)

    def set(self, key: str, value) -> None:
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        typ = _SCHEMA[key][0]
        if typ is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, typ) or (typ is int and isinstance(value, bool)):
            raise ConfigError(f"{key}: expected {typ.__name__}, "
                              f"got {type(value).__name__}")
        if key in _CHOICES and value not in _CHOICES[key]:
            raise ConfigError(f"{key}: must be one of {_CHOICES[key]}")
        self.values[key] = value

    def __getitem__(self, key: str):
        return self.values[key]

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.values, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_signal_csv(path):
    """Read a one- or two-column CSV signal; returns (values, dt or None).

    A non-numeric first line is treated as a header.  Two-column files are
    (t, value) with a uniform sample period (relative tolerance 1e-9).
    """
    times, values = [], []
    n_cols = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",") if p.strip() != ""]
            if lineno == 1:
                try:
                    [float(p) for p in parts]
                except ValueError:
                    continue      # header line
            try:
                nums = [float(p) for p in parts]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: not numeric: {line!r}") from exc
            if n_cols is None:
                if len(nums) not in (1, 2):
                    raise InputError(f"{path}:{lineno}: expected 1 or 2 columns")
                n_cols = len(nums)
            if len(nums) != n_cols:
                raise InputError(f"{path}:{lineno}: inconsistent column count")
            if n_cols == 1:
                values.append(nums[0])
            else:
                times.append(nums[0])
                values.append(nums[1])
    if not values:
        raise InputError(f"{path}: empty input (no samples)")
    if n_cols == 1:
        return np.asarray(values), None
    t = np.asarray(times)
    steps = np.diff(t)
    if len(steps) == 0:
        raise InputError(f"{path}: need at least two samples")
    dt = steps[0]
    if dt <= 0 or np.any(np.abs(steps - dt) > 1e-9 * max(abs(dt), 1.0)):
        raise InputError(f"{path}: time column is not uniformly sampled")
    return np.asarray(values), float(dt)


def _build_space(cfg: PipelineConfig, signal, dt: float):
    family = cfg["kernel.family"]
    if family == "uniform":
        ladder = scalespace.uniform_ladder(cfg["ladder.mu"], cfg["ladder.levels"])
        return scalespace.smooth(signal, ladder, dt)
    if family == "limit":
        ladder = scalespace.logarithmic_ladder(
            cfg["ladder.c"], cfg["ladder.tau_max"], cfg["ladder.levels"],
            cfg["ladder.pre_stages"])
        return scalespace.smooth(signal, ladder, dt)
    taus = scalespace.logarithmic_ladder(
        cfg["ladder.c"], cfg["ladder.tau_max"], cfg["ladder.levels"]).taus
    return scalespace.smooth_gaussian(signal, taus, dt)


def _norm_spec(cfg: PipelineConfig, order: int) -> normalization.NormalizationSpec:
    if cfg["normalization.mode"] == "variance":
        return normalization.NormalizationSpec.variance(order, cfg["normalization.gamma"])
    p = cfg["normalization.p"]
    if p == 0.0:
        p = normalization.gamma_to_p(order, cfg["normalization.gamma"])
    return normalization.NormalizationSpec.lp(order, p)


def _extremum_record(e: selection.ScaleSpaceExtremum, compensate: bool) -> dict:
    return {
        "t": e.time,
        "t_compensated": e.delay_compensated_time if compensate else e.time,
        "sigma_hat": e.sigma_hat,
        "tau_hat": e.tau_hat,
        "level": e.level_index,
        "polarity": e.polarity,
        "value": e.value,
        "suppressed": e.suppressed,
    }


def run_signal(cfg: PipelineConfig, input_path, out_dir) -> dict:
    """Batch pipeline: returns a summary dict and writes result files."""
    import pathlib
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    signal, dt_file = read_signal_csv(input_path)
    dt = dt_file if dt_file is not None else cfg["input.dt"]
    space = _build_space(cfg, signal, dt)

    summary = {"n_samples": len(signal), "dt": dt,
               "taus": [float(x) for x in space.taus]}
    kind = cfg["detector.kind"]
    if kind == "extrema":
        stack = normalization.normalize_plane(space, _norm_spec(cfg, cfg["detector.order"]))
        extrema = selection.detect_extrema(stack)
        if cfg["postfilter.enabled"]:
            extrema = selection.post_filter(extrema, stack)
        comp = cfg["delay.compensation"]
        with open(out / "extrema.jsonl", "w") as fh:
            for e in extrema:
                fh.write(json.dumps(_extremum_record(e, comp)) + "\n")
        np.savetxt(out / "dense_map.csv", stack.planes, delimiter=",")
        profile = selection.scale_profile(np.abs(stack.planes))
        summary["n_extrema"] = len(extrema)
        summary["n_surviving"] = sum(not e.suppressed for e in extrema)
    else:
        s1 = normalization.normalize_plane(space, _norm_spec(cfg, 1))
        s2 = normalization.normalize_plane(space, _norm_spec(cfg, 2))
        qmap = selection.quasi_quadrature(
            s1, s2, selection.QuasiQuadratureSpec(Gamma=cfg["quasi.Gamma"]))
        np.savetxt(out / "dense_map.csv", qmap, delimiter=",")
        profile = selection.scale_profile(qmap)
        peaks = selection.profile_peaks(profile, space.taus)
        summary["profile_peaks"] = [
            {"sigma_hat": math.sqrt(tau), "level": k, "value": v}
            for tau, k, v in peaks]
    np.savetxt(out / "profile.csv",
               np.column_stack([space.taus, profile]), delimiter=",",
               header="tau,sum", comments="")
    with open(out / "meta.json", "w") as fh:
        json.dump({"config": cfg.values, "summary": summary}, fh, indent=2)
    return summary


class _StreamRunner:
    """Incremental detection with confirmation once coarser-level data allows.

    Maintains the growing level and normalized derivative planes one sample
    at a time; a 3x3 extremum candidate at time j is emitted provisionally
    as soon as column j+1 exists, and finalized through the same suppression
    walk as batch mode once the forward walk horizon at the coarser level is
    buffered (or the stream ends).
    """

    def __init__(self, cfg: PipelineConfig, dt: float):
        if cfg["kernel.family"] == "gaussian":
            raise ConfigError("kernel.family: streaming requires a causal family")
        self.cfg = cfg
        self.dt = dt
        if cfg["kernel.family"] == "uniform":
            self.ladder = scalespace.uniform_ladder(cfg["ladder.mu"], cfg["ladder.levels"])
        else:
            self.ladder = scalespace.logarithmic_ladder(
                cfg["ladder.c"], cfg["ladder.tau_max"], cfg["ladder.levels"],
                cfg["ladder.pre_stages"])
        self.state = scalespace.stream_init(self.ladder, dt)
        self.order = cfg["detector.order"]
        self.spec = _norm_spec(cfg, self.order)
        # Input-independent per-level data, shared with batch mode.
        probe = scalespace.TemporalScaleSpace(
            dt=dt, taus=self.ladder.taus.copy(),
            levels=np.zeros((self.ladder.n_levels, 3)), kind="causal",
            ladder=self.ladder)
        self.prefactors = normalization.level_prefactors(probe, self.spec)
        self.delays = probe.delays
        self.bounds = np.maximum((8.0 * self.delays / dt).astype(int), 4)
        self.cols: list = []
        self.pending: list = []
        self.events: list = []

    def _planes(self) -> np.ndarray:
        return np.column_stack(self.cols)

    def _stack(self) -> normalization.NormalizedStack:
        levels = self._planes()
        space = scalespace.TemporalScaleSpace(
            dt=self.dt, taus=self.ladder.taus.copy(), levels=levels,
            kind="causal", ladder=self.ladder)
        space._delays = self.delays
        deriv = scalespace.temporal_derivative(space, self.order)
        return normalization.NormalizedStack(
            planes=deriv * self.prefactors[:, None], spec=self.spec,
            space=space, prefactors=self.prefactors)

    def push(self, sample: float) -> list:
        self.state, outputs = scalespace.stream_step(self.state, sample)
        self.cols.append(outputs)
        fresh = []
        n = len(self.cols)
        if n >= 3 and n >= self.order + 2:
            stack = self._stack()
            j = n - 2
            for e in selection.detect_extrema(stack):
                if e.time_index == j:
                    horizon = j + int(self.bounds[min(e.level_index + 1,
                                                      len(self.bounds) - 1)]) + 1
                    self.pending.append((horizon, e))
                    fresh.append({"status": "provisional",
                                  **_extremum_record(e, self.cfg["delay.compensation"])})
            fresh.extend(self._confirm(n))
        self.events.extend(fresh)
        return fresh

    def _confirm(self, n: int, flush: bool = False) -> list:
        done, keep = [], []
        for horizon, e in self.pending:
            (done if (n > horizon or flush) else keep).append((horizon, e))
        self.pending = keep
        if not done:
            return []
        stack = self._stack()
        out = []
        for _, e in done:
            final = selection.post_filter([e], stack)[0]
            rec = _extremum_record(final, self.cfg["delay.compensation"])
            rec["status"] = "suppressed" if final.suppressed else "confirmed"
            out.append(rec)
        return out

    def finish(self) -> list:
        fresh = self._confirm(len(self.cols), flush=True)
        self.events.extend(fresh)
        return fresh


def run_stream(cfg: PipelineConfig, lines, emit) -> None:
    """Drive the incremental pipeline from an iterable of text lines.

    Lines hold either a bare sample value or ``t,value`` with uniform,
    strictly increasing timestamps.  Each event record is passed to
    ``emit``.
    """
    runner = None
    prev_t = None
    dt = cfg["input.dt"]
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p for p in line.split(",") if p.strip() != ""]
        try:
            nums = [float(p) for p in parts]
        except ValueError:
            if lineno == 1:
                continue
            raise InputError(f"stdin:{lineno}: not numeric: {line!r}")
        if len(nums) == 2:
            t, v = nums
            if prev_t is not None:
                step = t - prev_t
                if step <= 0:
                    raise InputError(f"stdin:{lineno}: non-monotone timestamp")
                if runner is None:
                    dt = step
                elif abs(step - dt) > 1e-9 * max(abs(dt), 1.0):
                    raise InputError(f"stdin:{lineno}: non-uniform timestamp")
            if prev_t is None:
                prev_t = t
                first_value = v
                continue
            prev_t = t
            if runner is None:
                runner = _StreamRunner(cfg, dt)
                for rec in runner.push(first_value):
                    emit(rec)
            for rec in runner.push(v):
                emit(rec)
        elif len(nums) == 1:
            if runner is None:
                runner = _StreamRunner(cfg, dt)
            for rec in runner.push(nums[0]):
                emit(rec)
        else:
            raise InputError(f"stdin:{lineno}: expected 1 or 2 columns")
    if runner is None:
        raise InputError("stdin: empty input (no samples)")
    for rec in runner.finish():
        emit(rec)


# ---------------------------------------------------------------------------
# Demos
# ---------------------------------------------------------------------------

def demo_chirp(out_dir) -> dict:
    """Scale selection on a frequency-sweep signal, causal and Gaussian."""
    import pathlib
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dt = 1.0
    sig = models.generate(models.ModelSignal("chirp", a=200.0, b=1000.0),
                          dt, 1400.0)
    results = {}
    for name in ("limit", "gaussian"):
        if name == "limit":
            ladder = scalespace.logarithmic_ladder(math.sqrt(2.0), 512.0 ** 2, 18)
            space = scalespace.smooth(sig, ladder, dt)
        else:
            taus = scalespace.logarithmic_ladder(math.sqrt(2.0), 512.0 ** 2, 18).taus
            space = scalespace.smooth_gaussian(sig, taus, dt)
        stack = normalization.normalize_plane(
            space, normalization.NormalizationSpec.lp(2, 2.0 / 3.0))
        extrema = selection.post_filter(selection.detect_extrema(stack), stack)
        surv = [e for e in extrema if not e.suppressed and e.polarity == "min"]
        with open(out / f"chirp_extrema_{name}.jsonl", "w") as fh:
            for e in sorted(surv, key=lambda e: e.time):
                fh.write(json.dumps(_extremum_record(e, True)) + "\n")
        results[name] = len(surv)
    return results


def demo_two_sine(out_dir) -> dict:
    """Quasi-quadrature scale profile of a two-component sine mixture."""
    import pathlib
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dt = 1.0
    T = 8.0
    n = int(3.2 * 300 * T)
    t = np.arange(n) * dt
    sig = np.sin(2 * math.pi * t / T) + np.sin(2 * math.pi * t / (300 * T))
    ladder = scalespace.logarithmic_ladder(math.sqrt(2.0), (4.0 * 300 * T) ** 2, 28)
    space = scalespace.smooth(sig, ladder, dt)
    s1 = normalization.normalize_plane(space, normalization.NormalizationSpec.lp(1, 1.0))
    s2 = normalization.normalize_plane(space, normalization.NormalizationSpec.lp(2, 1.0))
    qmap = selection.quasi_quadrature(s1, s2)
    profile = selection.scale_profile(qmap)
    np.savetxt(out / "two_sine_profile.csv",
               np.column_stack([space.taus, profile]), delimiter=",",
               header="tau,sum", comments="")
    peaks = selection.profile_peaks(profile, space.taus)
    peaks.sort(key=lambda p: p[2], reverse=True)
    top = sorted(math.sqrt(p[0]) for p in peaks[:2])
    return {"sigma_hats": top,
            "ratio": top[1] / top[0] if len(top) == 2 else None}


def demo_blink(out_dir) -> dict:
    """Joint spatio-temporal scale selection on a synthetic blink volume."""
    import pathlib
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s0, K0, mu = 6.0, 8, 1.0
    vol = spatiotemporal.blink_generator(s0, K0, mu, frames=96,
                                         height=33, width=33)
    spatiotemporal.write_volume(out / "blink.vol", vol)
    s_list = [s0 * f for f in (0.25, 0.5, 1.0, 2.0, 4.0)]
    ladder = scalespace.uniform_ladder(mu, 24)
    space = spatiotemporal.smooth_volume(vol, s_list, ladder)
    resp = spatiotemporal.operator_lgn(space, n=2, gamma_s=1.0, gamma_tau=0.75)
    strength = np.abs(resp).max(axis=(2, 3, 4))
    j, k = np.unravel_index(int(np.argmax(strength)), strength.shape)
    result = {"s_hat": float(space.s_list[j]), "s0": s0,
              "K_hat": int(k + 1), "K0": K0}
    with open(out / "blink_selection.json", "w") as fh:
        json.dump(result, fh, indent=2)
    return result


# ---------------------------------------------------------------------------
# Argument parsing and entry point
# ---------------------------------------------------------------------------

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flat dotted keys)")
    for key, (typ, default, help_text) in _SCHEMA.items():
        if typ is bool:
            parser.add_argument(f"--{key}", type=_parse_bool, default=None,
                                metavar="BOOL", help=help_text)
        else:
            parser.add_argument(f"--{key}", type=typ, default=None,
                                help=help_text)


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _config_from_args(args) -> PipelineConfig:
    cfg = (PipelineConfig.from_file(args.config) if args.config
           else PipelineConfig.default())
    for key in _SCHEMA:
        value = vars(args).get(key)
        if value is not None:
            cfg.set(key, value)
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tempscsp",
        description="Time-causal temporal scale-space and scale selection")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="batch pipeline over a CSV signal")
    p_run.add_argument("input", help="CSV file: value or t,value per line")
    p_run.add_argument("--out", default="out", help="output directory")
    _add_config_flags(p_run)

    p_stream = sub.add_parser("stream", help="incremental pipeline over stdin")
    _add_config_flags(p_stream)

    p_tables = sub.add_parser("tables", help="reference table checks")
    tables_sub = p_tables.add_subparsers(dest="tables_verb", required=True)
    p_repr = tables_sub.add_parser("reproduce", help="recompute a table")
    p_repr.add_argument("table", choices=sorted(tables.all_tables()) + ["all"])

    p_demo = sub.add_parser("demo", help="canned experiments")
    p_demo.add_argument("name", choices=["chirp", "two-sine", "blink"])
    p_demo.add_argument("--out", default="out", help="output directory")

    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            cfg = _config_from_args(args)
            summary = run_signal(cfg, args.input, args.out)
            print(json.dumps(summary, indent=2))
            return 0
        if args.verb == "stream":
            cfg = _config_from_args(args)
            run_stream(cfg, sys.stdin,
                       lambda rec: print(json.dumps(rec), flush=True))
            return 0
        if args.verb == "tables":
            selected = (sorted(tables.all_tables()) if args.table == "all"
                        else [args.table])
            ok = True
            for name in selected:
                print(f"== {name} ==")
                ok &= tables.run_checks(tables.all_tables()[name]())
            return 0 if ok else 1
        if args.verb == "demo":
            fn = {"chirp": demo_chirp, "two-sine": demo_two_sine,
                  "blink": demo_blink}[args.name]
            print(json.dumps(fn(args.out), indent=2))
            return 0
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unhandled verb")


if __name__ == "__main__":
    sys.exit(main())
