"""Command-line entry point: ``weakineq <command> --config cfg.json --out dir``.

Exit codes: 0 success, 2 premise violations (outputs still written),
1 errors.  Every output file starts with (CSV) or contains (JSON) the
digest of the run manifest.
"""

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from importlib import metadata

import numpy as np

from . import capacity as cap_mod
from . import decay, rates
from .exceptions import ConfigError, PremiseViolated, PremiseWarning, WeakIneqError
from .hardy import fit_rate_exponents, hardy_bounds, poincare_constant_bounds
from .measure import measure_from_config
from .semigroup import (
    SolverConfig,
    euler_maruyama,
    evolve,
    ou_transition,
    overlay_bounds,
    trace_moments,
)
from .verifier import check_wlsi, empirical_beta, make_family

COMMANDS = ("measure", "beta", "convert", "verify", "capacity", "simulate", "bounds", "report")
EXIT_OK, EXIT_ERROR, EXIT_PREMISE = 0, 1, 2


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.1.0"


@dataclass
class RunManifest:
    command: str
    config_digest: str
    constants: dict
    seed: int
    tool_version: str = field(default_factory=_version)
    outputs: list = field(default_factory=list)

    @property
    def digest(self):
        body = json.dumps({"command": self.command, "config": self.config_digest,
                           "constants": self.constants, "seed": self.seed,
                           "version": self.tool_version}, sort_keys=True)
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def to_dict(self):
        d = asdict(self)
        d["digest"] = self.digest
        return d


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, out, manifest):
        self.out = out
        self.manifest = manifest
        self.premise_failures = []
        os.makedirs(out, exist_ok=True)

    def path(self, name):
        self.manifest.outputs.append(name)
        return os.path.join(self.out, name)

    def write_csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            fh.write(f"# manifest {self.manifest.digest}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def write_json(self, name, obj):
        obj = {"manifest": self.manifest.digest, **obj}
        with open(self.path(name), "w") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def premise(self, msg):
        self.premise_failures.append(msg)

    def finish(self):
        with open(os.path.join(self.out, "manifest.json"), "w") as fh:
            json.dump(self.manifest.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return EXIT_PREMISE if self.premise_failures else EXIT_OK


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_jsonable(v) for v in o.tolist()]
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else str(f)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


# -- config helpers -------------------------------------------------------------

def load_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _check_keys(cfg, allowed, where):
    unknown = set(cfg) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}; allowed {sorted(allowed)}")


def _require(cfg, key, where):
    if key not in cfg:
        raise ConfigError(f"{where}: missing key {key!r}")
    return cfg[key]


def rate_from_spec(spec, where="rate"):
    """``{"type": "constant"|"power"|"log"|"csv", ...}`` to a :class:`RateFunction`."""
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = _require(spec, "type", where)
    if kind == "constant":
        _check_keys(spec, {"type", "c"}, where)
        return rates.RateFunction.constant(_require(spec, "c", where))
    if kind == "power":
        _check_keys(spec, {"type", "c", "p", "q", "s_max"}, where)
        return rates.RateFunction.power(spec.get("c", 1.0), spec.get("p", 0.0), spec.get("q", 0.0),
                                        spec.get("s_max"))
    if kind == "log":
        _check_keys(spec, {"type", "scale", "power"}, where)
        return rates.RateFunction.power(spec.get("scale", 1.0), 0.0, spec.get("power", 1.0))
    if kind == "csv":
        _check_keys(spec, {"type", "path"}, where)
        s, b = _read_table(_require(spec, "path", where), ("s", "beta"))
        return rates.RateFunction.tabulated(s, b, label=os.path.basename(spec["path"]))
    raise ConfigError(f"{where}: unknown rate type {kind!r}")


def _read_table(path, cols):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if header[: len(cols)] != list(cols):
        raise ConfigError(f"{path}: expected columns {','.join(cols)}")
    data = np.array([[float(r[i]) for i in range(len(cols))] for r in reader if r])
    return tuple(data[:, i] for i in range(len(cols)))


# -- commands ----------------------------------------------------------------------

def cmd_measure(cfg, run, policy):
    _check_keys(cfg, {"measure"}, "config")
    mu = measure_from_config(_require(cfg, "measure", "config"))
    run.write_json("measure.json", {**mu.describe(), "mass_deficit": mu.mass_deficit})
    run.write_csv("cdf.csv", ["x", "cdf", "density"], zip(mu.grid, mu.cdf, mu.density(mu.grid)))


def _bounded_beta(beta, lo=1e-6, hi=1e-1):
    s = np.geomspace(lo, hi, 200)
    b = beta(s)
    return float(np.max(b) / np.min(b))


def cmd_beta(cfg, run, policy):
    _check_keys(cfg, {"measure", "kernel"}, "config")
    mu = measure_from_config(_require(cfg, "measure", "config"))
    kernel = cfg.get("kernel", "half")
    beta = cap_mod.beta_from_capacity(mu, kernel=kernel)
    fit = fit_rate_exponents(beta)
    shape = rates.RateFunction.power(1.0, max(fit["p"], 0.0), max(fit["q"], 0.0))
    hb = hardy_bounds(mu, shape)
    certified = shape.scaled(hb.upper)
    nec = cap_mod.check_necessary(mu, certified, kernel=kernel)
    poinc = rates.detect_poincare(beta)
    ratio = _bounded_beta(beta)
    if ratio <= 3.0:
        regime = "bounded β (LSI regime)"
    elif poinc["poincare"]:
        regime = "logarithmic β (Poincaré regime)"
    else:
        regime = "power-law β (no Poincaré inequality)"
    s_tab, b_tab = beta.table
    run.write_csv("beta.csv", ["s", "beta"], zip(s_tab, b_tab))
    run.write_json("beta.json", {"regime": regime, "fit": fit, "hardy": hb.to_dict(),
                                 "necessary": {"worst_ratio": nec["worst_ratio"],
                                               "n_violations": len(nec["violations"])},
                                 "poincare": poinc, "max_over_min_1e-6_1e-1": ratio})
    print(f"summary: {regime}; p={fit['p']:.3f} q={fit['q']:.3f}; Hardy {hb.lower:.4g} <= C <= {hb.upper:.4g}")
    if hb.divergent:
        run.premise(f"Hardy constants diverge: {hb.divergent}")
    if nec["violations"]:
        run.premise(f"{len(nec['violations'])} capacity violations")


def cmd_convert(cfg, run, policy):
    _check_keys(cfg, {"certificate", "target", "grid"}, "config")
    cert_cfg = _require(cfg, "certificate", "config")
    _check_keys(cert_cfg, {"kind", "rate"}, "certificate")
    cert = rates.Certificate.source(_require(cert_cfg, "kind", "certificate"),
                                    rate_from_spec(_require(cert_cfg, "rate", "certificate"), "certificate.rate"))
    target = _require(cfg, "target", "config")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PremiseWarning)
        out = rates.convert(cert, target, policy)
    for w in caught:
        if issubclass(w.category, PremiseWarning):
            run.premise(str(w.message))
    g = cfg.get("grid", {})
    if target == "SPI":
        x = np.geomspace(g.get("lo", 2 * math.e), g.get("hi", 1e6), g.get("n", 40))
        name = "t"
    elif target == "GBI":
        x = np.geomspace(g.get("lo", 1e-4), g.get("hi", 1.0), g.get("n", 40))
        name = "t"
    else:
        x = np.geomspace(g.get("lo", 1e-8), g.get("hi", 0.1), g.get("n", 40))
        name = "s"
    vals = np.asarray(out.rate(x), float)
    run.write_csv(f"{target.lower()}.csv", [name, "value"], zip(x, vals))
    run.write_json("certificate.json", json.loads(out.to_json()))


def cmd_verify(cfg, run, policy):
    _check_keys(cfg, {"measure", "beta", "families", "s_grid", "seed"}, "config")
    mu = measure_from_config(_require(cfg, "measure", "config"))
    beta = rate_from_spec(_require(cfg, "beta", "config"), "beta")
    kinds = cfg.get("families", ["capacity_ramps", "tilts", "indicators_smoothed", "random_piecewise"])
    sg = cfg.get("s_grid", {})
    s = np.geomspace(sg.get("lo", 1e-6), sg.get("hi", 0.1), sg.get("n", 30))
    fam = None
    for k in kinds:
        part = make_family(mu, k, seed=int(cfg.get("seed", run.manifest.seed))) if k == "random_piecewise" \
            else make_family(mu, k)
        fam = part if fam is None else fam + part
    emp = empirical_beta(mu, fam, s, return_details=True)
    violations = []
    for f, fid in zip(fam.members, fam.ids):
        rep = check_wlsi(mu, f, beta, s)
        if not rep["holds"]:
            violations.append({"f": fid, "min_margin": rep["min_margin"]})
    emp.to_csv(run.path("empirical_beta.csv"))
    _prepend_manifest(os.path.join(run.out, "empirical_beta.csv"), run.manifest.digest)
    run.write_json("verify.json", {"n_members": len(fam), "n_violations": len(violations),
                                   "violations": violations[:50]})
    if violations:
        run.premise(f"{len(violations)} family members violate the WLSI")


def _prepend_manifest(path, digest):
    with open(path) as fh:
        body = fh.read()
    with open(path, "w") as fh:
        fh.write(f"# manifest {digest}\n{body}")


def cmd_capacity(cfg, run, policy):
    _check_keys(cfg, {"measure", "beta", "kernel"}, "config")
    mu = measure_from_config(_require(cfg, "measure", "config"))
    beta = rate_from_spec(cfg["beta"], "beta") if "beta" in cfg else None
    kernel = cfg.get("kernel", "half")
    for side in ("right", "left"):
        p = cap_mod.capacity_profile(mu, side, kernel=kernel)
        lhs = p.lhs(beta) if beta is not None else np.full(p.x.shape, np.nan)
        run.write_csv(f"capacity_{side}.csv", ["x", "mass", "cap", "s_star", "lhs", "ratio"],
                      zip(p.x, p.mass, p.cap, p.s_star, lhs, lhs / p.cap))
    B, UB = poincare_constant_bounds(mu)
    out = {"poincare_lower": B, "poincare_upper": UB}
    if beta is not None:
        nec = cap_mod.check_necessary(mu, beta, kernel=kernel)
        out["necessary"] = {"worst_ratio": nec["worst_ratio"], "n_violations": len(nec["violations"])}
        if nec["violations"]:
            run.premise("capacity necessary condition violated")
    run.write_json("capacity.json", out)


def _curve_from_spec(spec, trace=None, mu=None, policy=None):
    kind = _require(spec, "type", "curve")
    if kind == "xi":
        _check_keys(spec, {"type", "beta", "eps", "form"}, "curve")
        return decay.xi_from_beta(rate_from_spec(spec["beta"], "curve.beta"), spec.get("eps", 0.1),
                                  spec.get("form", "gronwall"))
    if kind == "restricted_lsi":
        _check_keys(spec, {"type", "beta", "C_P"}, "curve")
        C_P = spec.get("C_P", "auto")
        if C_P == "auto":
            C_P = poincare_constant_bounds(mu)[1]
        swl = rates.wlsi_to_swlsi(rate_from_spec(spec["beta"], "curve.beta"), policy)
        A, _ = rates.restricted_ls_constant(swl, float(C_P), math.sqrt(float(np.max(trace.h0))))
        return decay.restricted_lsi_curve(A, trace.ent0)
    if kind == "entropy0":
        _check_keys(spec, {"type"}, "curve")
        return decay.constant_curve(trace.ent0, "initial_entropy")
    if kind == "lo":
        _check_keys(spec, {"type", "alpha", "eps", "t_offset"}, "curve")
        return decay.lo_decay_curve(spec["alpha"], spec.get("eps", 0.1), spec.get("t_offset", 0.0))
    if kind == "exponential":
        _check_keys(spec, {"type", "rate", "prefactor"}, "curve")
        return decay.exponential_curve(spec["rate"], spec.get("prefactor", 1.0))
    raise ConfigError(f"curve: unknown type {kind!r}")


def cmd_simulate(cfg, run, policy):
    _check_keys(cfg, {"solver", "bounds", "monte_carlo", "t_min"}, "config")
    sc = SolverConfig.from_dict(_require(cfg, "solver", "config"))
    V, pot_spec = sc.potential, sc.potential_spec
    mu = sc.measure()
    trace = evolve(sc, mu)
    trace.to_csv(run.path("trace.csv"), run.manifest.digest)
    curves = [_curve_from_spec(c, trace, mu, policy) for c in cfg.get("bounds", [{"type": "entropy0"}])]
    rows = overlay_bounds(trace, curves, t_min=float(cfg.get("t_min", 0.0)))
    failed = [r["name"] for r in rows if r.get("holds") is False]
    verdict = "all bounds hold" if not failed else f"violated: {', '.join(failed)}"
    summary = {"verdict": verdict, "curves": rows, "n_steps": trace.n_steps, "dt": trace.dt,
               "entropy_monotone": bool(np.all(np.diff(trace.entropy) <= 1e-15)),
               "pinsker": bool(np.all(trace.tv <= np.sqrt(2 * trace.entropy) + 1e-12)),
               "max_mass_drift": float(np.max(np.abs(trace.mass - 1.0)))}
    init = sc.initial if isinstance(sc.initial, dict) else {}
    if pot_spec.get("family") == "gaussian" and float(pot_spec.get("scale", 1.0)) == 0.5 \
            and init.get("kind") == "dirac":
        x0 = float(init["x"])
        dx = float(np.min(np.diff(mu.grid)))
        w = float(init.get("width", 2 * dx))
        mean, var = trace_moments(trace)
        mo, vo = ou_transition(x0, sc.T, w)
        p = trace.h_final * mu.density(mu.grid)
        po = np.exp(-(mu.grid - mo) ** 2 / (2 * vo)) / math.sqrt(2 * math.pi * vo)
        summary["ou_validation"] = {"mean": mean, "variance": var, "oracle_mean": mo, "oracle_variance": vo,
                                    "l1_error": float(np.sum(np.abs(p - po) * mu.node_mass / mu.density(mu.grid)))}
    mc = cfg.get("monte_carlo")
    if mc:
        _check_keys(mc, {"x0", "n_paths", "dt"}, "monte_carlo")
        mct = euler_maruyama(V, float(mc.get("x0", 0.0)), trace.times[1:], int(mc.get("n_paths", 10_000)),
                             run.manifest.seed, float(mc.get("dt", 1e-3)), mu=mu)
        mct.to_csv(run.path("monte_carlo.csv"), run.manifest.digest)
        summary["monte_carlo"] = {"n_paths": mct.n_paths, "seed": mct.seed, "bins": 128}
    run.write_json("verdicts.json", summary)
    print(f"verdict: {verdict}")
    if failed:
        run.premise(verdict)


def cmd_bounds(cfg, run, policy):
    _check_keys(cfg, {"curves", "t_grid"}, "config")
    tg = cfg.get("t_grid", {})
    t = np.geomspace(tg.get("lo", 0.01), tg.get("hi", 100.0), tg.get("n", 100))
    for i, spec in enumerate(_require(cfg, "curves", "config")):
        if spec.get("type") in ("restricted_lsi", "entropy0"):
            raise ConfigError(f"curves[{i}]: {spec['type']} needs a trace; use 'simulate'")
        c = _curve_from_spec(spec, policy=policy)
        tt = t[(t >= c.t_min) & (t <= c.t_max)]
        run.write_csv(f"curve_{i}.csv", ["t", "bound", "name"], ((a, b, c.name) for a, b in zip(tt, c(tt))))


def cmd_report(cfg, run, policy):
    _check_keys(cfg, {"dirs"}, "config")
    entries = {}
    for d in cfg.get("dirs", []):
        for name in sorted(os.listdir(d)):
            if name.endswith(".json"):
                with open(os.path.join(d, name)) as fh:
                    entries[f"{os.path.basename(os.path.normpath(d))}/{name}"] = json.load(fh)
    run.write_json("report.json", {"entries": entries})


HANDLERS = {"measure": cmd_measure, "beta": cmd_beta, "convert": cmd_convert, "verify": cmd_verify,
            "capacity": cmd_capacity, "simulate": cmd_simulate, "bounds": cmd_bounds, "report": cmd_report}


def build_parser():
    p = argparse.ArgumentParser(prog="weakineq", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo and random families")
    p.add_argument("--constants", help="JSON file with the constants policy")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_json(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
        pol_dict = load_json(args.constants) if args.constants else {}
        try:
            policy = rates.ConstantsPolicy.from_dict(pol_dict)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{args.constants}: {exc}") from None
        digest = hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]
        run = Run(args.out, RunManifest(args.command, digest, policy.to_dict(), args.seed))
        try:
            HANDLERS[args.command](cfg, run, policy)
        except PremiseViolated as exc:
            run.premise(str(exc))
            print(f"premise violated: {exc}", file=sys.stderr)
        code = run.finish()
        for msg in run.premise_failures:
            print(f"premise: {msg}", file=sys.stderr)
        return code
    except (ConfigError, WeakIneqError, OSError, KeyError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
