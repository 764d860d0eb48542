"""Command-line entry point: config parsing, subcommands, run directories."""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .cgl_solver import PhaseSlipError

EXIT_OK, EXIT_GATE, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


class GateFailure(RuntimeError):
    def __init__(self, gates: list[str]):
        super().__init__("failed gates: " + ", ".join(gates))
        self.gates = gates


# -- configuration -------------------------------------------------------------------

@dataclass
class SimConfig:
    alpha: float = 0.1
    eps_hat: float = 0.05
    L: float | None = None
    L0: float | None = None
    N: int = 512
    dt: float = 0.005
    t_end_hat: float = 10.0
    scheme: str = "rotating"
    symmetric: bool = True
    dealias: bool = True
    every: float = 0.1
    snapshot_every: float = 0.0
    window: float = 1.0
    t_spin: float = 50.0
    seed: int = 0
    sigma: float = 6.0
    delta: float = 2.0
    eps_sweep: tuple = (0.1, 0.05, 0.025)
    workers: int = 1
    gnuplot: bool = False
    K: float = 1.0
    c_eta0: float = 1.0
    c_s0: float = 1.0
    eps_hat0: float = 0.05
    output: str = "run"
    warnings: list = field(default_factory=list)

    @property
    def period(self) -> float:
        return self.L if self.L is not None else self.eps_hat * self.L0

    def derived(self) -> dict:
        a, e = self.alpha, self.eps_hat
        L = self.period
        chi = 4 / (1 + a ** 2)
        out = {"L": L, "L0": L / e if e > 0 else self.L0, "q": 2 * math.pi / L, "chi": chi,
               "eps": e * math.sqrt((1 + a ** 2) / 2)}
        out["beta"] = -(2 + (1 + a ** 2) * e ** 2) / (2 * a) if a != 0 else None
        return out

    def resolved(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "warnings"}
        d["eps_sweep"] = list(self.eps_sweep)
        d["derived"] = self.derived()
        return d


_KEYS = {f.name: f for f in fields(SimConfig) if f.name != "warnings"}


def _convert(key: str, raw: str, lineno: int):
    t = _KEYS[key].type
    try:
        if key in ("L", "L0"):
            return float(raw)
        if t == "float":
            return float(raw)
        if t == "int":
            return int(raw)
        if t == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if t == "tuple":
            return tuple(float(x) for x in raw.replace(",", " ").split())
        return raw
    except ValueError:
        raise ConfigError(f"line {lineno}: key '{key}': cannot read {raw!r} as {t}") from None


def validate(cfg: SimConfig, lines: dict | None = None) -> SimConfig:
    lines = lines or {}

    def where(*keys):
        ls = [f"line {lines[k]}" for k in keys if k in lines]
        return (", ".join(ls) + ": ") if ls else ""

    if (cfg.L is None) == (cfg.L0 is None):
        if cfg.L is None:
            raise ConfigError("one of 'L' or 'L0' is required")
        raise ConfigError(f"{where('L', 'L0')}keys 'L' and 'L0' are both set; give exactly one")
    if cfg.period <= 0:
        raise ConfigError(f"{where('L', 'L0')}period must be positive")
    if cfg.N < 4 or cfg.N & (cfg.N - 1):
        raise ConfigError(f"{where('N')}key 'N': {cfg.N} is not a power of two")
    if not cfg.dt > 0:
        raise ConfigError(f"{where('dt')}key 'dt': must be > 0, got {cfg.dt}")
    if cfg.eps_hat < 0:
        raise ConfigError(f"{where('eps_hat')}key 'eps_hat': must be >= 0")
    if cfg.scheme not in ("rotating", "standard"):
        raise ConfigError(f"{where('scheme')}key 'scheme': expected rotating or standard")
    if cfg.alpha ** 2 >= 0.5:
        cfg.warnings.append(f"alpha={cfg.alpha}: outside theorem validity alpha^2 < 1/2")
    return cfg


def parse_config_text(text: str) -> SimConfig:
    values, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue  # sections only group keys
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (x.strip() for x in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: key '{key}' repeated (first on line {lines[key]})")
        values[key] = _convert(key, raw, lineno)
        lines[key] = lineno
    return validate(SimConfig(**values), lines)


def parse_config(path: str | Path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if path.suffix == ".json":  # a manifest from an earlier run
        d = json.loads(text).get("config", {})
        d.pop("derived", None)
        unknown = set(d) - set(_KEYS)
        if unknown:
            raise ConfigError(f"unknown keys in manifest: {sorted(unknown)}")
        if "eps_sweep" in d:
            d["eps_sweep"] = tuple(d["eps_sweep"])
        return validate(SimConfig(**d))
    return parse_config_text(text)


# -- output plumbing -------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def prepare_run(cfg: SimConfig, command: str, argv: list[str]) -> Path:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "manifest.json", {"tool": "cglphase", "version": __version__, "command": command,
                                      "argv": argv, "seed": cfg.seed, "config": cfg.resolved(),
                                      "warnings": cfg.warnings})
    return out


def write_dat(path: Path, ser) -> None:
    from .experiments import COLUMNS
    names = [c for c, _ in COLUMNS]
    with open(path, "w") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for r in ser.rows:
            fh.write(" ".join(f"{r[c]:.17g}" for c in names) + "\n")


# -- subcommands -------------------------------------------------------------------------

def cmd_simulate_ks(cfg: SimConfig, out: Path) -> dict:
    from .experiments import random_odd_mu
    from .phase_system import KSSolver, KSState, attractor_diagnostic, trilinear
    from .spectral_grid import Grid, parity_defect, save

    g = Grid(cfg.period, cfg.N)
    L = g.L
    rows, snaps = [], []
    snap_stride = int(round(cfg.snapshot_every / cfg.every)) if cfg.snapshot_every > 0 else 0

    def cb(st):
        m = st.field
        rows.append((st.t, math.sqrt(L) * m.l2(), abs(m.coeffs[0]), trilinear(m), parity_defect(m, "odd")))
        if snap_stride and (len(rows) - 1) % snap_stride == 0:
            save(m, out / f"mu_{len(snaps):05d}.txt")
            snaps.append(st.t)

    KSSolver(g, cfg.dt, symmetric=cfg.symmetric).run(KSState(random_odd_mu(g, cfg.seed)),
                                                     cfg.t_end_hat, cfg.every, cb)
    with open(out / "diagnostics.csv", "w") as fh:
        fh.write("# t_hat: scaled time\n# norm_mu_L2: ||mu||_L2\n# mu_mean: |mu_0|\n"
                 "# trilinear: int mu^2 mu'\n# parity_defect: wrong-parity fraction of mu\n")
        fh.write("t_hat,norm_mu_L2,mu_mean,trilinear,parity_defect\n")
        for r in rows:
            fh.write(",".join(repr(float(x)) for x in r) + "\n")
    rep = {"snapshots": len(snaps)}
    if len(rows) >= 100:
        rep["attractor"] = attractor_diagnostic([r[0] for r in rows], [r[1] for r in rows])
        rep["K_estimate"] = rep["attractor"]["sup_L2"] / L ** 1.6
    rep["max_mu_mean"] = max(r[2] for r in rows)
    rep["max_abs_trilinear"] = max(abs(r[3]) for r in rows)
    return rep


def cmd_simulate_coupled(cfg: SimConfig, out: Path) -> dict:
    from .experiments import Figure2Config, ordering_check, run_figure2, theorem12_monitor
    from .spectral_grid import save

    fc = Figure2Config(alpha=cfg.alpha, eps_hat=cfg.eps_hat, L=cfg.period, N=cfg.N, dt=cfg.dt,
                       t_end=cfg.t_end_hat, every=cfg.every, window=cfg.window, t_spin=cfg.t_spin,
                       seed=cfg.seed, sigma=cfg.sigma, delta=cfg.delta)
    count = [0]
    stride = int(round(cfg.snapshot_every / cfg.every)) if cfg.snapshot_every > 0 else 0

    def snap(st):
        if stride and count[0] % stride == 0:
            i = count[0] // stride
            save(st.s, out / f"s_{i:05d}.txt")
            save(st.mu, out / f"mu_{i:05d}.txt")
        count[0] += 1

    ser = run_figure2(fc, on_snapshot=snap)
    (out / "diagnostics.csv").write_text(ser.to_csv())
    if cfg.gnuplot:
        write_dat(out / "diagnostics.dat", ser)
    mon = theorem12_monitor(ser, K=cfg.K, c_eta=cfg.c_eta0, c_s=cfg.c_s0, eps_hat0=cfg.eps_hat0)
    return {"theorem12": mon, "ordering": ordering_check(ser),
            "max_ks_rel_error": float(np.max(ser.column("ks_rel_error"))),
            "structure": _structure(ser)}


def _structure(ser) -> dict:
    return {"max_mu_mean": float(np.max(ser.column("mu_mean"))),
            "max_abs_trilinear": float(np.max(np.abs(ser.column("trilinear")))),
            "max_abs_s2mu_prime": float(np.max(np.abs(ser.column("s2mu_prime")))),
            "max_parity_defect": float(np.max(ser.column("parity_defect")))}


def cmd_simulate_cgl(cfg: SimConfig, out: Path) -> dict:
    from .cgl_solver import (CGLParams, CGLSolver, build_initial_data, extract_phase_amplitude,
                             to_scaled)
    from .experiments import eta_from_mu, spun_up_mu
    from .spectral_grid import Grid, save

    L = cfg.period
    p = CGLParams(cfg.alpha, cfg.eps_hat, L / cfg.eps_hat)
    g = Grid(L, cfg.N)
    u0, _ = build_initial_data(eta_from_mu(spun_up_mu(g, cfg.seed, cfg.t_spin)), p)
    sol = CGLSolver(u0.u.grid, p, cfg.dt * p.time_scale(), scheme=cfg.scheme, symmetric=cfg.symmetric)
    rows, snaps = [], [0]
    snap_stride = int(round(cfg.snapshot_every / cfg.every)) if cfg.snapshot_every > 0 else 0

    def cb(st):
        pa = to_scaled(extract_phase_amplitude(st, p), p)
        absu = np.abs(st.u.values())
        rows.append((st.t / p.time_scale(), math.sqrt(L) * pa.mu.l2(), math.sqrt(L) * pa.s.l2(),
                     float(absu.min()), float(absu.max())))
        if snap_stride and (len(rows) - 1) % snap_stride == 0:
            save(st.u, out / f"u_{snaps[0]:05d}.txt")
            snaps[0] += 1

    sol.run(u0, cfg.t_end_hat * p.time_scale(), cfg.every * p.time_scale(), cb)
    with open(out / "diagnostics.csv", "w") as fh:
        fh.write("# t_hat: scaled time\n# norm_mu_L2, norm_s_L2: scaled phase-derivative and amplitude norms\n"
                 "# min_abs_u, max_abs_u: range of |u| on the grid\n")
        fh.write("t_hat,norm_mu_L2,norm_s_L2,min_abs_u,max_abs_u\n")
        for r in rows:
            fh.write(",".join(repr(float(x)) for x in r) + "\n")
    return {"snapshots": snaps[0], "min_abs_u": min(r[3] for r in rows),
            "max_abs_u": max(r[4] for r in rows)}


def cmd_compare(cfg: SimConfig, out: Path) -> dict:
    from .experiments import fit_eps0, slaving_sweep, theorem12_monitor

    sw = slaving_sweep(list(cfg.eps_sweep), L=cfg.period, N=cfg.N, alpha=cfg.alpha, dt=cfg.dt,
                       t_end=cfg.t_end_hat, every=cfg.every, window=cfg.window, seed=cfg.seed,
                       t_spin=cfg.t_spin, sigma=cfg.sigma, delta=cfg.delta, workers=cfg.workers)
    for e, ser in sw["runs"].items():
        (out / f"diagnostics_eps{e:g}.csv").write_text(ser.to_csv())
        if cfg.gnuplot:
            write_dat(out / f"diagnostics_eps{e:g}.dat", ser)
    primary = sw["runs"][sw["eps_hat"][0]]
    mon = {f"{e:g}": theorem12_monitor(sw["runs"][e], K=cfg.K) for e in sw["eps_hat"]}
    c_eta = max(m["fitted_c_eta"] for m in mon.values())
    rho = cfg.K * cfg.period ** 1.6
    eps0 = fit_eps0(sw["eps_hat"], sw["mean_residual"], c_eta * rho)
    ag = sw["appendixG"]
    ks = sw["ks_sup_rel_error"]
    struct = {f"{e:g}": _structure(sw["runs"][e]) for e in sw["eps_hat"]}
    gates = {
        "residual_ratio_ge_3": all(r >= 3 for r in sw["residual_ratios"]),
        "ks_error_monotone": all(ks[i] > ks[i + 1] for i in range(len(ks) - 1)),
        "s_Linf_slope_in_[3.5,4.5]": 3.5 <= ag["s_Linf_unscaled_slope"] <= 4.5,
        "eta_Linf_slope_in_[1.6,2.2]": 1.6 <= ag["eta_Linf_unscaled_slope"] <= 2.2,
        "mu_mean_le_1e-13": all(s["max_mu_mean"] <= 1e-13 for s in struct.values()),
        "trilinear_le_1e-12": all(s["max_abs_trilinear"] <= 1e-12 for s in struct.values()),
        "s2mu_prime_le_1e-12": all(s["max_abs_s2mu_prime"] <= 1e-12 for s in struct.values()),
    }
    report = {"eps_hat": sw["eps_hat"], "mean_residual": sw["mean_residual"],
              "residual_ratios": sw["residual_ratios"], "ks_sup_rel_error": ks,
              "appendixG": ag, "theorem12": mon, "fitted_c_eta": c_eta, "fitted_eps_hat0": eps0,
              "structure": struct, "gates": gates, "primary_rows": len(primary.rows)}
    write_json(out / "report.json", report)
    failed = [k for k, v in gates.items() if not v]
    if failed:
        raise GateFailure(failed)
    return report


def cmd_verify_symbols(args) -> dict:
    from .operator_symbols import LM_asymptote_defect, SymbolParams, verify_symbol_bounds
    from .spectral_grid import Grid

    p = SymbolParams(args.eps, args.alpha)
    rep = verify_symbol_bounds(Grid(args.L, args.N), p, raise_on_fail=False)
    lp, lm = LM_asymptote_defect(args.eps, args.alpha)
    rep["LM_asymptote"] = {"defect_plus": lp, "defect_minus": lm, "pass": max(lp, lm) < 0.05}
    failed = [k for k, v in rep.items() if isinstance(v, dict) and not v.get("pass", True)]
    rep["failed"] = failed
    return rep


def cmd_verify_coercive(args) -> dict:
    from .coercive_functional import (coercivity_check, eps_binding, gamma_hs_norm, hs_envelope,
                                      phi_summary)

    out = {}
    for L in args.L:
        eps, binding = eps_binding(L)
        ph = phi_summary(L, eps)
        hs, tail = gamma_hs_norm(L, eps)
        slack = min(coercivity_check(args.trials, L, eps, g, seed=args.seed, raise_on_fail=False)["min_lower_slack"]
                    for g in args.gamma)
        rec = {"L": L, "eps": eps, "eps_binding": binding, "phi_norm_sq": ph["phi_norm_sq"],
               "phi_bound": ph["phi_bound"], "phi_phi_phi": ph["phi_phi_phi"], "hs_norm_sq": hs,
               "hs_tail_bound": tail, "hs_envelope": hs_envelope(L), "coercivity_min_slack": slack,
               "K_empirical": ph["K_ratio"]}
        rec["pass"] = bool(ph["phi_norm_sq"] <= ph["phi_bound"] and hs + tail < 1 / 16
                           and hs + tail <= hs_envelope(L) and slack >= 0)
        out[f"{L:g}"] = rec
    out["failed"] = [k for k, v in out.items() if isinstance(v, dict) and not v["pass"]]
    return out


def cmd_norms(args) -> dict:
    from .norm_lab import (NormParams, c_infinity, derivative_cost_ratios, estimate_product_constant,
                           norm_report, quotient_check)
    from .spectral_grid import Grid, load

    if args.field:
        f = load(args.field)
        p = NormParams(args.sigma, args.delta, f.grid, max(8.0, args.sigma))
        return {"report": norm_report(f, p), "derivative_costs": derivative_cost_ratios(f, p)}
    p = NormParams(args.sigma, args.delta, Grid(args.L, args.N), max(8.0, args.sigma))
    cm = estimate_product_constant(p, args.trials, args.seed)
    q = quotient_check(p, max(cm, c_infinity()), args.trials, args.seed)
    return {"product_constant": cm, "c_infinity": c_infinity(), "quotient": q,
            "failed": [] if q.get("pass", True) else ["quotient"]}


def cmd_check_class_c(cfg: SimConfig, args) -> dict:
    from .cgl_solver import CGLParams, slaved_s0
    from .norm_lab import ClassCParams, check_class_C
    from .experiments import eta_from_mu, spun_up_mu
    from .spectral_grid import Grid, load

    L = cfg.period
    if args.eta0:
        eta0 = load(args.eta0, "even")
    else:
        eta0 = eta_from_mu(spun_up_mu(Grid(L, cfg.N), cfg.seed, cfg.t_spin))
    s0 = load(args.s0, "even") if args.s0 else slaved_s0(eta0, CGLParams(cfg.alpha, cfg.eps_hat, L / cfg.eps_hat))
    p = ClassCParams(K=cfg.K, L=L, alpha=cfg.alpha, eps_hat=cfg.eps_hat, eps_hat0=cfg.eps_hat0,
                     c_s0=cfg.c_s0, c_eta0=cfg.c_eta0, sigma=cfg.sigma, delta=cfg.delta)
    rep = check_class_C(eta0, s0, p).as_dict()
    rep["failed"] = [c["name"] for c in rep["conditions"] if not c["pass"]]
    return rep


# -- dispatch -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cglphase", description="Phase dynamics of CGL plane waves.")
    ap.add_argument("--version", action="version", version=f"cglphase {__version__}")
    sub = ap.add_subparsers(dest="command")
    for name in ("simulate-cgl", "simulate-ks", "simulate-coupled", "compare"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--output", help="override the output directory")
    sp = sub.add_parser("verify-symbols")
    sp.add_argument("--eps", type=float, default=0.5)
    sp.add_argument("--alpha", type=float, default=0.3)
    sp.add_argument("--L", type=float, default=40.0)
    sp.add_argument("--N", type=int, default=256)
    sp.add_argument("--out")
    sp = sub.add_parser("verify-coercive")
    sp.add_argument("--L", type=float, nargs="+", default=[2 * math.pi, 10.0, 25.0, 50.0])
    sp.add_argument("--gamma", type=float, nargs="+", default=[0.25, 1.0])
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp = sub.add_parser("norms")
    sp.add_argument("--field", help="snapshot file; without it, run the product/quotient estimates")
    sp.add_argument("--sigma", type=float, default=6.0)
    sp.add_argument("--delta", type=float, default=2.0)
    sp.add_argument("--L", type=float, default=40.0)
    sp.add_argument("--N", type=int, default=256)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp = sub.add_parser("check-class-c")
    sp.add_argument("--config", required=True)
    sp.add_argument("--eta0")
    sp.add_argument("--s0")
    sp.add_argument("--out")
    return ap


def _emit(rep: dict, path: str | None) -> None:
    text = json.dumps(_jsonable(rep), indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    print(text)


def dispatch(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if not args.command:
        ap.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.command in ("verify-symbols", "verify-coercive", "norms"):
            fn = {"verify-symbols": cmd_verify_symbols, "verify-coercive": cmd_verify_coercive,
                  "norms": cmd_norms}[args.command]
            rep = fn(args)
            _emit(rep, args.out)
            if rep.get("failed"):
                raise GateFailure(rep["failed"])
            return EXIT_OK
        cfg = parse_config(args.config)
        for w in cfg.warnings:
            print(f"warning: {w}", file=sys.stderr)
        if args.command == "check-class-c":
            rep = cmd_check_class_c(cfg, args)
            _emit(rep, args.out)
            if rep["failed"]:
                raise GateFailure(rep["failed"])
            return EXIT_OK
        if args.output:
            cfg.output = args.output
        out = prepare_run(cfg, args.command, argv)
        fn = {"simulate-ks": cmd_simulate_ks, "simulate-coupled": cmd_simulate_coupled,
              "simulate-cgl": cmd_simulate_cgl, "compare": cmd_compare}[args.command]
        rep = fn(cfg, out)
        if args.command != "compare":
            write_json(out / "summary.json", rep)
        print(f"{args.command}: wrote {out}")
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GateFailure as e:
        print(f"gate failure: {', '.join(e.gates)}", file=sys.stderr)
        return EXIT_GATE
    except (ArithmeticError, PhaseSlipError) as e:  # blow-up or a phase slip
        print(f"run failed: {e}", file=sys.stderr)
        return EXIT_GATE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch())
