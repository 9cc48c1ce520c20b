"""Command-line front end.

Configuration is a flat ``key = value`` text with dotted section prefixes
(``grid.n = 1024``).  Command-line flags and ``--set key=value`` override file
keys.  Every run directory receives its data files plus one ``manifest.json``.

Exit codes: 0 success, 2 configuration error, 3 blow-up, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
import tempfile
import time
import traceback
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, data
from .dynamics import SIGN_CONVENTIONS, PhysParams, State, StepperConfig, simulate
from .errors import BlowUpError, ConfigurationError
from .experiments import (
    ORACLES,
    DriftReport,
    ScanConfig,
    almost_conservation_scan,
    convergence_study,
    gwp_threshold,
)
from .functionals import functional_report, modified_e, modified_l, rate_report
from .spacetime import ACCEPTANCE_IDS, CATALOG, EstimateParams, check_gates, measure_estimate
from .spectral import M_TRANSITION, IParams, SpectralGrid

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_INTERNAL = 0, 2, 3, 4
OUTPUT_ENV = "SCHKDV_OUTPUT_DIR"
COMMANDS = ("simulate", "conserve", "iscan", "estimates", "converge", "gwp-threshold")
DATA_FAMILIES = ("gaussian", "sech", "rough", "zero", "soliton", "plane_wave")

# ---------------------------------------------------------------------------
# schema


def _pi_float(text: str) -> float:
    t = text.strip().replace(" ", "")
    m = re.fullmatch(r"([-+0-9.eE]*)\*?pi", t)
    if m:
        pre = m.group(1)
        coef = 1.0 if pre in ("", "+") else -1.0 if pre == "-" else float(pre)
        return coef * math.pi
    v = float(t)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError("expected true or false")


def _int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def _opt_float(text: str):
    return None if text.strip().lower() in ("none", "") else _pi_float(text)


def _opt_fraction(text: str):
    t = text.strip().lower()
    return None if t in ("none", "") else Fraction(t)


def _floats(text: str) -> tuple:
    return tuple(_pi_float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple:
    return tuple(_int(x) for x in text.split(",") if x.strip())


def _words(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _str(text: str) -> str:
    return text.strip()


def _fmt_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_fmt_value(x) for x in v)
    return str(v)


# key -> (parser, default)
SCHEMA = {
    "command": (_str, "simulate"),
    "run.seed": (_int, 0),
    "run.output": (_str, "schkdv-out"),
    "run.t_end": (_pi_float, 1.0),
    "run.stride": (_int, 10),
    "run.rates": (_bool, False),
    "grid.n": (_int, 1024),
    "grid.L": (_pi_float, 64 * math.pi),
    "physics.alpha": (_pi_float, 1.0),
    "physics.beta": (_pi_float, 1.0),
    "physics.gamma": (_pi_float, 1.0),
    "stepper.dt": (_pi_float, 1e-3),
    "stepper.dealias": (_bool, True),
    "stepper.blowup_threshold": (_pi_float, 1e8),
    "data.family": (_str, "gaussian"),
    "data.amplitude": (_pi_float, 1.0),
    "data.width": (_pi_float, 2.0),
    "data.k0": (_pi_float, 1.0),
    "data.s": (_pi_float, 0.7),
    "i.N": (_pi_float, 4.0),
    "i.s": (_pi_float, 0.7),
    "scan.N": (_floats, (4.0, 8.0, 16.0, 32.0)),
    "scan.s": (_pi_float, 0.7),
    "scan.T": (_pi_float, 1.0),
    "scan.family": (_str, "rough"),
    "scan.amplitude": (_pi_float, 1.0),
    "scan.n": (_int, 2048),
    "scan.L": (_pi_float, 16 * math.pi),
    "scan.dt": (_pi_float, 2e-5),
    "scan.samples": (_int, 50),
    "estimate.ids": (_words, ACCEPTANCE_IDS),
    "estimate.s": (_opt_float, None),
    "estimate.b": (_opt_float, None),
    "estimate.bprime": (_opt_float, None),
    "estimate.epsilon": (_pi_float, 0.01),
    "estimate.gamma1": (_opt_float, None),
    "estimate.gamma2": (_opt_float, None),
    "estimate.samples": (_int, 100),
    "estimate.resolutions": (_ints, (64, 128, 256)),
    "estimate.variants": (_bool, True),
    "converge.oracle": (_str, "plane_wave"),
    "converge.dts": (_floats, (4e-3, 2e-3, 1e-3)),
    "converge.T": (_pi_float, 1.0),
    "threshold.beta_zero": (_bool, False),
    "threshold.s": (_opt_fraction, None),
}


class ConfigErrors(ConfigurationError):
    """All problems found in one configuration."""

    def __init__(self, errors: list):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def command(self) -> str:
        return self.values["command"]

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt_value(self.values[k])}\n" for k in sorted(self.values))

    # module configs
    def grid(self) -> SpectralGrid:
        return SpectralGrid(self["grid.n"], self["grid.L"])

    def physics(self) -> PhysParams:
        return PhysParams(self["physics.alpha"], self["physics.beta"], self["physics.gamma"])

    def stepper(self) -> StepperConfig:
        return StepperConfig(self["stepper.dt"], self["stepper.dealias"], self["stepper.blowup_threshold"])

    def iparams(self) -> IParams:
        return IParams(self["i.N"], self["i.s"])

    def scan(self) -> ScanConfig:
        return ScanConfig(
            N_values=self["scan.N"], s=self["scan.s"], T=self["scan.T"], family=self["scan.family"],
            amplitude=self["scan.amplitude"], n=self["scan.n"], box_length=self["scan.L"],
            physics=self.physics(), dt=self["scan.dt"], samples=self["scan.samples"], seed=self["run.seed"],
        )

    def estimate_params(self, conj=(False, False)) -> EstimateParams:
        return EstimateParams(
            s=self["estimate.s"], b=self["estimate.b"], bprime=self["estimate.bprime"],
            epsilon=self["estimate.epsilon"], gamma1=self["estimate.gamma1"],
            gamma2=self["estimate.gamma2"], conj=conj,
        )


def _split_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            yield lineno, None, line
            continue
        k, v = line.split("=", 1)
        yield lineno, k.strip(), v.strip()


def _validate(cfg: RunConfig) -> list:
    errors = []

    def attempt(fn):
        try:
            fn()
        except ConfigurationError as exc:
            errors.append(str(exc))

    v = cfg.values
    if v["command"] not in COMMANDS:
        errors.append(f"command must be one of {', '.join(COMMANDS)}")
    if v["data.family"] not in DATA_FAMILIES:
        errors.append(f"data.family must be one of {', '.join(DATA_FAMILIES)}")
    if v["converge.oracle"] not in ORACLES:
        errors.append(f"converge.oracle must be one of {', '.join(ORACLES)}")
    if v["run.stride"] < 1:
        errors.append("run.stride must be >= 1")
    if not v["run.t_end"] >= 0:
        errors.append("run.t_end must be >= 0")
    if not v["converge.T"] > 0:
        errors.append("converge.T must be positive")
    if any(n % 2 or n < 8 for n in v["estimate.resolutions"]) or not v["estimate.resolutions"]:
        errors.append("estimate.resolutions must be even integers >= 8")
    if v["estimate.samples"] < 1:
        errors.append("estimate.samples must be >= 1")
    attempt(cfg.grid)
    attempt(cfg.physics)
    attempt(cfg.stepper)
    attempt(cfg.iparams)
    attempt(cfg.scan)
    unknown = [i for i in v["estimate.ids"] if i not in CATALOG]
    if unknown:
        errors.append(f"unknown estimate ids: {', '.join(unknown)}")
    else:
        for cid in v["estimate.ids"]:
            attempt(lambda cid=cid: check_gates(cid, cfg.estimate_params()))
    return errors


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse flat dotted ``key = value`` text; raise :class:`ConfigErrors`
    listing every problem found."""
    errors = []
    raw = {}
    for lineno, k, val in _split_lines(text):
        if k is None:
            errors.append(f"line {lineno}: expected key = value, got {val!r}")
        else:
            raw[k] = val
    raw.update(overrides or {})
    values = {k: d for k, (_, d) in SCHEMA.items()}
    for k, val in raw.items():
        if k not in SCHEMA:
            errors.append(f"unknown key {k!r}")
            continue
        try:
            values[k] = SCHEMA[k][0](val)
        except (ValueError, TypeError) as exc:
            errors.append(f"{k}: cannot parse {val!r} ({exc})")
    cfg = RunConfig(values)
    if not errors:
        errors.extend(_validate(cfg))
    if errors:
        raise ConfigErrors(errors)
    return cfg


# ---------------------------------------------------------------------------
# output helpers


def _g17(x) -> str:
    return format(float(x), ".17g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_g17(x) if isinstance(x, (float, np.floating, int)) and not isinstance(x, bool) else x for x in r])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


class _Writer:
    """Tracks files written into one run directory so a failed run can be
    cleaned up."""

    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.created_dir = not outdir.exists()
        outdir.mkdir(parents=True, exist_ok=True)
        self.files: dict = {}

    def write(self, name: str, text: str):
        path = self.outdir / name
        _atomic_write(path, text)
        self.files[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()

    def cleanup(self):
        for name in list(self.files) + ["manifest.json"]:
            try:
                (self.outdir / name).unlink()
            except FileNotFoundError:
                pass
        if self.created_dir:
            try:
                self.outdir.rmdir()
            except OSError:
                pass


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# subcommands

TIMESERIES_COLUMNS = ["t", "M", "L", "E", "E_mod", "L_mod", "Hs_u", "Hs_v", "H1_u", "H1_v"]
RATE_COLUMNS = [f"I{j}" for j in range(1, 13)] + [f"J{j}" for j in range(1, 5)]


def initial_state(cfg: RunConfig) -> State:
    grid = cfg.grid()
    fam = cfg["data.family"]
    A = cfg["data.amplitude"]
    if fam == "gaussian":
        return data.gaussian_bump(grid, amplitude=A, width=cfg["data.width"], k0=cfg["data.k0"])
    if fam == "sech":
        return data.sech_bump(grid, amplitude=A, k0=cfg["data.k0"])
    if fam == "rough":
        return data.rough_family(grid, cfg["data.s"], cfg["run.seed"], amplitude=A, k0=cfg["data.k0"])
    if fam == "zero":
        return State.zeros(grid)
    if fam == "soliton":
        return State.from_arrays(grid, np.zeros(grid.n), data.kdv_soliton(grid, c=A))
    return State.from_arrays(grid, data.plane_wave(grid, A, cfg["data.k0"], cfg["physics.beta"]),
                             np.zeros(grid.n))


def _timeseries(cfg: RunConfig, with_rates: bool):
    p, ip = cfg.physics(), cfg.iparams()
    s = cfg["i.s"]

    def row(st):
        f = functional_report(st, p, s)
        out = [f.t, f.M, f.L, f.E, modified_e(st.u, st.v, p, ip), modified_l(st.u, st.v, p, ip),
               f.Hs_u, f.Hs_v, f.H1_u, f.H1_v]
        if with_rates:
            r = rate_report(st, p, ip)
            out += list(r.e_terms) + list(r.l_terms)
        return out

    traj = simulate(initial_state(cfg), p, cfg.stepper(), cfg["run.t_end"], observers={"row": row},
                    stride=cfg["run.stride"], keep_states=False)
    header = TIMESERIES_COLUMNS + (RATE_COLUMNS if with_rates else [])
    return header, traj.observations["row"], traj


def cmd_simulate(cfg: RunConfig, w: _Writer, out):
    header, rows, traj = _timeseries(cfg, cfg["run.rates"])
    w.write("timeseries.csv", _csv_text(header, rows))
    st = traj.final
    x = st.grid.x
    w.write("final_state.csv", _csv_text(
        ["x", "u_re", "u_im", "v"],
        zip(x.tolist(), st.u.values.real.tolist(), st.u.values.imag.tolist(), st.v.values.tolist()),
    ))
    print(f"simulated to t={_g17(st.t)} in {traj.steps} steps", file=out)


def cmd_conserve(cfg: RunConfig, w: _Writer, out):
    header, rows, _ = _timeseries(cfg, cfg["run.rates"])
    w.write("timeseries.csv", _csv_text(header, rows))
    arr = np.asarray([r[:4] for r in rows], dtype=float)
    rep = DriftReport(arr[:, 0].tolist(), arr[:, 1].tolist(), arr[:, 2].tolist(), arr[:, 3].tolist())
    drift = {name: rep.relative_drift(name) for name in ("M", "L", "E")}
    w.write("drift.json", _json_text({"relative_drift": drift, "samples": len(rows)}))
    for k, v in drift.items():
        print(f"{k}: relative drift {v:.3e}", file=out)


def cmd_iscan(cfg: RunConfig, w: _Writer, out):
    rep = almost_conservation_scan(cfg.scan())
    w.write("scan.json", _json_text(rep.to_dict()))
    rows = zip(rep.N_values, rep.e_increment, rep.l_increment, rep.norm_growth)
    w.write("scan.csv", _csv_text(["N", "E_increment", "L_increment", "norm_growth"], rows))
    print(f"E slope (mean) {rep.e_mean_slope:.3f}, L slope (mean) {rep.l_mean_slope:.3f}", file=out)


def cmd_estimates(cfg: RunConfig, w: _Writer, out):
    reports = []
    for cid in cfg["estimate.ids"]:
        variants = CATALOG[cid].variants if cfg["estimate.variants"] else ((False, False),)
        for conj in variants:
            r = measure_estimate(cid, cfg.estimate_params(conj), count=cfg["estimate.samples"],
                                 seed=cfg["run.seed"], resolutions=cfg["estimate.resolutions"])
            d = r.to_dict()
            d["ratios"] = {str(k): v for k, v in r.ratios.items()}
            reports.append(d)
            ms = " ".join(f"{n}:{r.max_ratio[n]:.4g}" for n in r.resolutions)
            print(f"{cid} conj={list(conj)} max ratio {ms} growth {r.max_growth:.4f}", file=out)
    w.write("estimates.json", _json_text({"reports": reports}))
    rows = [[d["catalog_id"], "".join("1" if c else "0" for c in d["conj"])]
            + [d["max_ratio"][str(n)] for n in cfg["estimate.resolutions"]] + [max(d["growth"] or [1.0])]
            for d in reports]
    header = ["id", "conj"] + [f"max_ratio_{n}" for n in cfg["estimate.resolutions"]] + ["max_growth"]
    w.write("estimates.csv", _csv_text(header, rows))


def cmd_converge(cfg: RunConfig, w: _Writer, out):
    oracle = cfg["converge.oracle"]
    p = None if oracle in ("kdv_soliton",) else cfg.physics()
    if oracle == "plane_wave":
        opts = {"amplitude": cfg["data.amplitude"], "k": cfg["data.k0"]}
    elif oracle == "kdv_soliton":
        opts = {"c": cfg["data.amplitude"]}
    else:
        opts = {}
    rep = convergence_study(oracle, cfg["converge.dts"], cfg.grid(), p, cfg["converge.T"], **opts)
    w.write("convergence.json", _json_text(rep.to_dict()))
    w.write("convergence.csv", _csv_text(["dt", "error"], zip(rep.dts, rep.errors)))
    print(f"{oracle}: order {rep.order:.3f}", file=out)


def cmd_threshold(cfg: RunConfig, w: _Writer, out):
    rep = gwp_threshold(cfg["threshold.beta_zero"])
    w.write("threshold.json", _json_text(rep.to_dict(cfg["threshold.s"])))
    print(str(rep.overall), file=out)
    print(rep.table(), file=out)


HANDLERS = {
    "simulate": cmd_simulate,
    "conserve": cmd_conserve,
    "iscan": cmd_iscan,
    "estimates": cmd_estimates,
    "converge": cmd_converge,
    "gwp-threshold": cmd_threshold,
}


def _manifest(cfg: RunConfig, w: _Writer, started: float, finished: float) -> str:
    return _json_text({
        "artifact_version": __version__,
        "config": cfg.to_text(),
        "sign_conventions": SIGN_CONVENTIONS,
        "m_transition": M_TRANSITION,
        "epsilon": cfg["estimate.epsilon"],
        "wall_time": {
            "start": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
            "end": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(finished)),
            "seconds": round(finished - started, 3),
        },
        "files": dict(sorted(w.files.items())),
    })


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    w = _Writer(Path(cfg["run.output"]))
    started = time.time()
    try:
        HANDLERS[cfg.command](cfg, w, out)
        _atomic_write(w.outdir / "manifest.json", _manifest(cfg, w, started, time.time()))
        return EXIT_OK
    except ConfigurationError as exc:
        w.cleanup()
        print(f"configuration error: {exc}", file=err)
        return EXIT_CONFIG
    except BlowUpError as exc:
        w.cleanup()
        print(f"blow-up: {exc}", file=err)
        return EXIT_BLOWUP
    except Exception:
        w.cleanup()
        traceback.print_exc(file=err)
        return EXIT_INTERNAL


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="schkdv", description="Schrodinger-KdV numerical laboratory")
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--output", "-o", help="output directory")
    common.add_argument("--seed", type=int)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "gwp-threshold":
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--beta-zero", dest="beta_zero", action="store_true", default=None)
            g.add_argument("--beta-nonzero", dest="beta_zero", action="store_false")
            sp.add_argument("--at", help="also evaluate every condition at this s")
        if name == "estimates":
            sp.add_argument("--ids", help="comma separated catalog ids")
            sp.add_argument("--samples", type=int)
        if name == "converge":
            sp.add_argument("--oracle", choices=ORACLES)
        if name in ("simulate", "conserve"):
            sp.add_argument("--rates", action="store_true", default=None,
                            help="add the rate-term columns")
    return ap


def config_from_args(args) -> RunConfig:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigErrors([f"cannot read config file: {exc}"]) from None
    over = {}
    env_out = os.environ.get(OUTPUT_ENV)
    if env_out:
        over["run.output"] = env_out
    errors = []
    for item in args.set:
        if "=" not in item:
            errors.append(f"--set expects KEY=VALUE, got {item!r}")
            continue
        k, v = item.split("=", 1)
        over[k.strip()] = v.strip()
    if errors:
        raise ConfigErrors(errors)
    over["command"] = args.command
    if args.output:
        over["run.output"] = args.output
    if args.seed is not None:
        over["run.seed"] = str(args.seed)
    if getattr(args, "beta_zero", None) is not None:
        over["threshold.beta_zero"] = _fmt_value(args.beta_zero)
    if getattr(args, "at", None):
        over["threshold.s"] = args.at
    if getattr(args, "ids", None):
        over["estimate.ids"] = args.ids
    if getattr(args, "samples", None) is not None:
        over["estimate.samples"] = str(args.samples)
    if getattr(args, "oracle", None):
        over["converge.oracle"] = args.oracle
    if getattr(args, "rates", None):
        over["run.rates"] = "true"
    return parse_config(text, over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigErrors as exc:
        for e in exc.errors:
            print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
