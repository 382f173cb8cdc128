"""Command-line front end.

Every command reads one YAML run configuration (``gate`` also accepts a bare
spacetime name), writes its artifacts into ``--out`` and exits with

* 0 when every check is within tolerance,
* 1 when a check or gate fails,
* 2 when the configuration cannot be parsed or resolved,
* 3 on runtime or chart-domain errors.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import clifford as cl
from . import dynamics, lax, spacetimes
from .manifold import ChartDomainError, SingularMetricError
from .phasespace import CapabilityError, HamiltonianSpec, PhasePoint
from .symmetry import NullMomentumError, momentum_square

log = logging.getLogger("laxtensor")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

DEFAULT_TOLERANCES = {
    "gate": 1e-9,
    "covariant_lax": 1e-9,
    "lax_pair": 1e-6,
    "drift": 1e-8,
    "anticommutator": 0.0,
    "spin_compatibility": 1e-10,
    "clifford_covariant": 1e-9,
    "clifford_lax_pair": 1e-6,
    "genkt_c0": 1e-10,
    "genkt_vanishing": 1e-9,
    "charged_identity": 1e-10,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    spacetime: str
    params: dict = field(default_factory=dict)
    hamiltonian: dict = field(default_factory=lambda: {"kind": "geodesic", "mass": 1.0})
    initial: Optional[dict] = None
    integrator: dict = field(default_factory=dict)
    t_end: float = 10.0
    lax: list = field(default_factory=list)
    clifford: list = field(default_factory=list)
    jmax: int = 4
    sample_points: int = 100
    seed: int = 0
    lax_pair: dict = field(default_factory=lambda: {"t_end": 2.0, "step": 0.01})
    tolerances: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def tolerance(self, key: str, scale: float) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key])) * scale


_KNOWN = {f for f in RunConfig.__dataclass_fields__ if f != "raw"}


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(data) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    if "spacetime" not in data:
        raise ConfigError("missing key 'spacetime'")
    st = data["spacetime"]
    if isinstance(st, dict):
        data = dict(data, spacetime=st.get("name"), params=st.get("params", {}) or {})
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.raw = copy.deepcopy(yaml.safe_load(text))
    for key in cfg.tolerances:
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {key!r}")
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


# resolution -----------------------------------------------------------------------


@dataclass
class Resolved:
    entry: spacetimes.SpacetimeEntry
    H: object
    z0: Optional[PhasePoint]
    integrator: dynamics.IntegratorConfig
    lax_ops: list
    clifford_ops: list


def _field(entry, kind_map, name, label):
    if name not in kind_map:
        raise ConfigError(f"{entry.name} has no {label} field {name!r}; registered: {sorted(kind_map)}")
    return kind_map[name]


def _lax_op(entry, H, spec: dict):
    kind = spec.get("kind")
    if kind not in lax.KINDS or kind == "scaled":
        raise ConfigError(f"unsupported lax kind {kind!r}")
    if kind == "momentum_square":
        return lax.LaxOperator(kind)
    if kind in lax._NEEDS_KY:
        return lax.LaxOperator(kind, _field(entry, entry.ky, spec.get("field", "ky"), "KY"))
    h = _field(entry, entry.ccky, spec.get("field", entry.principal or "principal"), "CCKY")
    if kind == "charged_f":
        e = spec.get("coupling", entry.coupling or getattr(H, "coupling", 0.0))
        return lax.LaxOperator.charged_f(h, float(e), entry.killing_vector)
    return lax.LaxOperator(kind, h)


def _clifford_op(entry, spec: dict):
    kind = spec.get("kind")
    if kind == "momentum":
        return cl.CliffordLax("momentum")
    if kind == "ky":
        return cl.CliffordLax("ky", _field(entry, entry.ky, spec.get("field", "ky"), "KY"))
    if kind == "ccky":
        return cl.CliffordLax("ccky", _field(entry, entry.ccky, spec.get("field", entry.principal or "principal"), "CCKY"))
    raise ConfigError(f"unsupported clifford kind {kind!r}")


def resolve(cfg: RunConfig) -> Resolved:
    try:
        entry = spacetimes.get(cfg.spacetime, **cfg.params)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    hs = dict(cfg.hamiltonian or {})
    kind = hs.get("kind", "geodesic")
    mass = float(hs.get("mass", 1.0))
    if kind == "geodesic":
        H = HamiltonianSpec.geodesic(mass)
    elif kind == "charged":
        if entry.killing_vector is None:
            raise ConfigError(f"{entry.name} provides no Killing vector for a charged run")
        e = float(hs.get("coupling", entry.coupling))
        H = HamiltonianSpec.charged(entry.killing_vector, e, mass)
    else:
        raise ConfigError(f"unsupported hamiltonian kind {kind!r}")
    try:
        integ = dynamics.IntegratorConfig(**cfg.integrator)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}") from exc
    z0 = None
    if cfg.initial:
        ini = cfg.initial
        try:
            x, p = [float(v) for v in ini["x"]], [float(v) for v in ini["p"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"initial: need numeric x and p ({exc})") from exc
        if len(x) != entry.dimension or len(p) != entry.dimension:
            raise ConfigError(f"initial point must have {entry.dimension} coordinates")
        if not entry.spec.in_domain(x):
            raise ConfigError(f"initial point violates chart predicate ({entry.spec.domain_description})")
        if "mass_shell_index" in ini:
            off = None
            if H.kind == "charged":
                off = H.coupling * np.asarray(entry.killing_vector(np.asarray(x)), dtype=float)
            try:
                z0 = dynamics.mass_shell(entry.spec, x, p, int(ini["mass_shell_index"]), mass,
                                         float(ini.get("sign", 1.0)), off)
            except ValueError as exc:
                raise ConfigError(f"initial: {exc}") from exc
        else:
            z0 = PhasePoint(x, p)
    try:
        lax_ops = [_lax_op(entry, H, s) for s in cfg.lax]
        cl_ops = [_clifford_op(entry, s) for s in cfg.clifford]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return Resolved(entry, H, z0, integ, lax_ops, cl_ops)


# reporting -------------------------------------------------------------------------


class Report:
    def __init__(self, command: str, cfg_echo):
        self.command = command
        self.config = cfg_echo
        self.checks = []

    def add(self, name: str, residual: float, tolerance: float):
        residual = float(residual)
        ok = bool(math.isfinite(residual) and residual <= tolerance)
        self.checks.append({"name": name, "residual": residual, "tolerance": float(tolerance), "pass": ok})
        log.info("%-48s %.3e <= %.1e %s", name, residual, tolerance, "ok" if ok else "FAIL")

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def write(self, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {"command": self.command, "config": self.config, "checks": self.checks}
        path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _random_phase_points(entry, n, seed):
    xs = entry.sample_points(n, seed)
    rng = np.random.default_rng(seed)
    return [PhasePoint(x, rng.normal(size=entry.dimension)) for x in xs]


def _require_z0(res):
    if res.z0 is None:
        raise ConfigError("this command needs an 'initial' phase point")
    return res.z0


def _trace_observables(ops, spec, jmax):
    obs = {}
    for op in ops:
        for j in range(1, jmax + 1):
            obs[f"tr({op.name})^{j}"] = (lambda z, op=op, j=j: lax.trace_invariants(op, spec, z, j)[-1])
    return obs


def _trace_scales(traj, ops, spec, jmax):
    # tr L^j is judged against max ||L||_F^j, which keeps identically-vanishing odd traces meaningful
    scales = {}
    for op in ops:
        norms = max(float(np.linalg.norm(np.asarray(lax.lax_eval(op, spec, z), dtype=float))) for z in traj.states)
        for j in range(1, jmax + 1):
            scales[f"tr({op.name})^{j}"] = norms ** j
    return scales


# commands --------------------------------------------------------------------------


def cmd_integrate(cfg: RunConfig, out: Path, tol_scale: float) -> int:
    res = resolve(cfg)
    z0 = _require_z0(res)
    traj = dynamics.integrate(res.H, res.entry.spec, z0, cfg.t_end, res.integrator)
    spec = res.entry.spec
    obs = {"H": lambda z: res.H.value(spec, z.x, z.p)}
    dynamics.write_csv(out / cfg.outputs.get("trajectory", "trajectory.csv"), traj, obs)
    rep = Report("integrate", cfg.raw)
    drift = dynamics.monitor(traj, obs)["H"]
    rep.add("H relative drift", drift.relative_drift, 10 * res.integrator.rel_tol * tol_scale)
    rep.write(out / cfg.outputs.get("report", "integrate_report.json"))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify_lax(cfg: RunConfig, out: Path, tol_scale: float) -> int:
    res = resolve(cfg)
    if not res.lax_ops:
        raise ConfigError("no lax operators configured")
    spec = res.entry.spec
    rep = Report("verify-lax", cfg.raw)
    pts = _random_phase_points(res.entry, cfg.sample_points, cfg.seed)
    for op in res.lax_ops:
        worst = max(lax.covariant_lax_residual(op, res.H, spec, z) for z in pts)
        rep.add(f"covariant_lax_residual:{op.name}", worst, cfg.tolerance("covariant_lax", tol_scale))
    if res.z0 is not None:
        lp = cfg.lax_pair
        ic = dynamics.IntegratorConfig(rel_tol=res.integrator.rel_tol, abs_tol=res.integrator.abs_tol,
                                       output_step=float(lp.get("step", 0.01)))
        traj = dynamics.integrate(res.H, spec, res.z0, float(lp.get("t_end", 2.0)), ic)
        for op in res.lax_ops:
            r = lax.lax_pair_residual(traj, op, res.H, spec)
            rep.add(f"lax_pair_residual:{op.name}", r, cfg.tolerance("lax_pair", tol_scale))
    rep.write(out / cfg.outputs.get("report", "verify_lax_report.json"))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_invariants(cfg: RunConfig, out: Path, tol_scale: float) -> int:
    res = resolve(cfg)
    z0 = _require_z0(res)
    spec, entry = res.entry.spec, res.entry
    integ = res.integrator
    if integ.output_step is None:
        integ = dynamics.IntegratorConfig(**{**integ.__dict__, "output_step": max(cfg.t_end / 1000, 1e-3)})
    traj = dynamics.integrate(res.H, spec, z0, cfg.t_end, integ)
    rep = Report("invariants", cfg.raw)
    drift_tol = cfg.tolerance("drift", tol_scale)

    obs = {"H": lambda z: res.H.value(spec, z.x, z.p)}
    if res.H.kind == "geodesic":
        # canonical p^2 is only conserved without the potential; H covers the kinetic square
        obs["p2"] = lambda z: momentum_square(spec, z)
    obs.update(_trace_observables(res.lax_ops, spec, cfg.jmax))
    scales = _trace_scales(traj, res.lax_ops, spec, cfg.jmax)

    h = entry.ccky.get(entry.principal) if entry.principal else None
    charged = res.H.kind == "charged"
    columns = dict(obs)
    genkt_rows = charged_rows = None
    if h is not None and h.rank == 2:
        n = spec.dimension // 2
        if charged:
            xi, e = entry.killing_vector, res.H.coupling
            cc = [lax.charged_constants(h, spec, z, xi, e) for z in traj.states]
            charged_rows = cc
            for j in range(n + 1):
                for nm in ("K_tilde", "K", "L"):
                    vals = np.array([getattr(c, nm)[j] for c in cc])
                    sc = max(float(np.max([getattr(c, nm + "_scale")[j] for c in cc])), abs(vals[0]))
                    rep.add(f"drift:{nm}_{j}", np.max(np.abs(vals - vals[0])) / sc, drift_tol)
                ident = max(abs(c.K[j] - c.K_tilde[j] + 4 * e * c.L[j]) for c in cc)
                rep.add(f"identity:K_{j}=K_tilde_{j}-4eL_{j}", ident, cfg.tolerance("charged_identity", tol_scale))
        else:
            cs = np.array([lax.genkt_coefficients(h, spec, z) for z in traj.states])
            ss = np.array([lax.genkt_scales(h, spec, z) for z in traj.states])
            p2 = np.array([momentum_square(spec, z) for z in traj.states])
            genkt_rows = cs
            for j in range(n + 1):
                sc = max(float(ss[:, j].max()), abs(cs[0, j]))
                rep.add(f"drift:c_{j}", np.max(np.abs(cs[:, j] - cs[0, j])) / sc, drift_tol)
            rep.add("c_0=p2", float(np.max(np.abs(cs[:, 0] - p2) / np.abs(p2))), cfg.tolerance("genkt_c0", tol_scale))
            if spec.dimension % 2 == 0:
                rep.add(f"c_{n} vanishing", float(np.max(np.abs(cs[:, n]) / ss[:, n])),
                        cfg.tolerance("genkt_vanishing", tol_scale))

    drifts = dynamics.monitor(traj, obs, scales)
    for name, d in drifts.items():
        rep.add(f"drift:{name}", d.relative_drift, drift_tol)

    # time series
    ser = dynamics.series(traj, columns)
    header = list(columns)
    extra = []
    if genkt_rows is not None:
        header += [f"c_{j}" for j in range(genkt_rows.shape[1])]
        extra.append(genkt_rows)
    if charged_rows is not None:
        n1 = len(charged_rows[0].K)
        for nm in ("K_tilde", "K", "L"):
            header += [f"{nm}_{j}" for j in range(n1)]
            extra.append(np.array([getattr(c, nm) for c in charged_rows]))
    table = np.column_stack([traj.times, ser] + extra)
    path = out / cfg.outputs.get("invariants", "invariants.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(["t"] + header) + "\n")
        for row in table:
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    rep.write(out / cfg.outputs.get("report", "invariants_report.json"))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_gate(target: str, out: Path, tol_scale: float, seed: int, n_points: int = spacetimes.GATE_POINTS) -> int:
    p = Path(target)
    if p.suffix in (".yaml", ".yml") or p.is_file():
        cfg = load_config(p)
        name, params, echo = cfg.spacetime, cfg.params, cfg.raw
        tol = cfg.tolerance("gate", tol_scale)
    else:
        name, params, echo = target, {}, {"spacetime": target}
        tol = DEFAULT_TOLERANCES["gate"] * tol_scale
    try:
        entry = spacetimes.get(name, **params)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    report = spacetimes.validate_entry(entry, n_points=n_points, tolerance=tol, seed=seed)
    rep = Report("gate", echo)
    for c in report.checks:
        rep.add(c.name, c.residual, c.tolerance)
    rep.write(out / f"gate_{entry.name}.json")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_clifford(cfg: RunConfig, out: Path, tol_scale: float) -> int:
    res = resolve(cfg)
    spec, entry = res.entry.spec, res.entry
    basis = cl.build_gamma_basis(spec.dimension, spec.signature)
    rep = Report("clifford", cfg.raw)
    rep.add(f"anticommutator D={spec.dimension}", cl.anticommutator_defect(basis), cfg.tolerance("anticommutator", tol_scale))
    pts = _random_phase_points(entry, cfg.sample_points, cfg.seed)
    rep.add("spin_compatibility", max(cl.spin_compatibility_residual(spec, z.x, basis) for z in pts),
            cfg.tolerance("spin_compatibility", tol_scale))
    for op in res.clifford_ops:
        worst = max(cl.clifford_covariant_residual(op, res.H, spec, z, basis) for z in pts)
        rep.add(f"clifford_covariant_residual:{op.name}", worst, cfg.tolerance("clifford_covariant", tol_scale))
    if res.z0 is not None and res.clifford_ops:
        lp = cfg.lax_pair
        ic = dynamics.IntegratorConfig(rel_tol=res.integrator.rel_tol, abs_tol=res.integrator.abs_tol,
                                       output_step=float(lp.get("step", 0.01)))
        traj = dynamics.integrate(res.H, spec, res.z0, float(lp.get("t_end", 2.0)), ic)
        for op in res.clifford_ops:
            r = cl.clifford_lax_pair_residual(traj, op, res.H, spec, basis)
            rep.add(f"clifford_lax_pair_residual:{op.name}", r, cfg.tolerance("clifford_lax_pair", tol_scale))
    rep.write(out / cfg.outputs.get("report", "clifford_report.json"))
    return EXIT_OK if rep.passed else EXIT_FAIL


# entry point -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="laxtensor", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed for random test points")
        p.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply every tolerance")

    for name in ("integrate", "verify-lax", "invariants", "clifford"):
        common(sub.add_parser(name))
    g = sub.add_parser("gate", help="run the symmetry gates of a catalog spacetime")
    g.add_argument("spacetime", nargs="?", help="catalog name or YAML config")
    common(g, needs_config=False)
    g.add_argument("--config", default=None)
    g.add_argument("--points", type=int, default=spacetimes.GATE_POINTS)
    return ap


_COMMANDS = {
    "integrate": cmd_integrate,
    "verify-lax": cmd_verify_lax,
    "invariants": cmd_invariants,
    "clifford": cmd_clifford,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    out = Path(args.out)
    if args.tolerance_scale <= 0:
        print("error: --tolerance-scale must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "gate":
            target = args.spacetime or args.config
            if target is None:
                raise ConfigError("gate needs a spacetime name or --config")
            return cmd_gate(target, out, args.tolerance_scale, args.seed or 0, args.points)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        return _COMMANDS[args.command](cfg, out, args.tolerance_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ChartDomainError, SingularMetricError, NullMomentumError, CapabilityError,
            dynamics.MaxStepsExceeded, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
