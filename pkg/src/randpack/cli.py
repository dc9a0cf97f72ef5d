"""Command-line experiment harness.

Each subcommand maps an :class:`ExperimentConfig` to report files.  Exit
codes: 0 success, 2 invalid input or I/O failure, 3 a checked bound did
not hold in this run.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .decimate import estimate_D_curve, fig1_curves, decimate as run_decimation
from .errors import DomainError
from .lattice2d import (MAX_DENSITY, MEAN, VARIANCE, cdf_delta, delta_moments,
                        sample_modular_batch)
from .moments import (concentration_check, edge_count, expected_M, expected_M1_bracket,
                      isolated_edge_count, mc_estimate, variance_scaling_check)
from .pointfield import (BoxSpec, Convention, read_points, sample_poisson, write_points)
from .proxgraph import build_graph, component_census, read_edge_list, write_edge_list
from .schmidt import fn_bracket, limit_cdf, remainder_bound
from .vcover import SimpleGraph, constructive_cover, covers_all_edges, min_vertex_cover

CONFIG_VERSION = 1
EXIT_OK, EXIT_INVALID, EXIT_BOUND = 0, 2, 3

# keys that name files or tune execution; they do not change results
_UNHASHED = {"out", "report", "edges_out", "tau_out", "workers"}

DEFAULTS = {
    "sample-poisson": {"dim": 2, "half_side": 5.0, "intensity": 1.0, "seed": 0,
                       "convention": "torus"},
    "graph-census": {"dim": 2, "half_side": 5.0, "intensity": 1.0, "seed": 0,
                     "distance": [0.5]},
    "cover": {"mode": "exact"},
    "decimate": {"dim": 2, "half_side": 8.0, "intensity": 1.0, "seed": 0,
                 "distance": [0.5641895835477563], "mode": "auto"},
    "moments-check": {"dim": 2, "half_side": 5.0, "intensity": 1.0, "trials": 2000, "seed": 0,
                      "distance": [0.5, 0.5641895835477563]},
    "concentration": {"dim": 2, "half_sides": [4.0, 8.0, 16.0], "distance": [0.5],
                      "trials": 1000, "seed": 0, "delta": 2.0 / 3.0, "epsilon": 1.0},
    "d-curve": {"dim": 2, "half_side": 16.0, "distance": [0.5641895835477563], "trials": 200,
                "seed": 0, "epsilon_band": 0.1, "slack": 0.05, "mode": "auto"},
    "lattice2d": {"trials": 100000, "seed": 0},
    "schmidt-table": {"dims": [13, 20, 40, 80], "xs": [0.5, 1.0, 2.0]},
    "fig1": {"dim": 2, "resolution": 99, "grid_size": 40},
}

SUBCOMMANDS = tuple(DEFAULTS)


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"version": CONFIG_VERSION, "subcommand": self.subcommand,
                           "params": self.params}, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"malformed config: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("version") != CONFIG_VERSION:
            raise DomainError(f"config must be an object with version={CONFIG_VERSION}")
        if doc.get("subcommand") not in SUBCOMMANDS:
            raise DomainError(f"unknown subcommand {doc.get('subcommand')!r}")
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise DomainError("config params must be an object")
        return cls(doc["subcommand"], params)

    def resolved(self) -> dict:
        if self.subcommand not in DEFAULTS:
            raise DomainError(f"unknown subcommand {self.subcommand!r}")
        merged = dict(DEFAULTS[self.subcommand])
        merged.update({k: v for k, v in self.params.items() if v is not None})
        return merged

    def config_hash(self) -> str:
        core = {k: v for k, v in self.resolved().items() if k not in _UNHASHED}
        blob = json.dumps({"subcommand": self.subcommand, "params": core}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


class BoundViolation(Exception):
    """A checked bound failed; the report is still written."""


# -- output helpers ------------------------------------------------------------------

def _provenance(config: ExperimentConfig) -> dict:
    return {"seed": config.resolved().get("seed"), "config_hash": config.config_hash(),
            "version": __version__}


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path, doc: dict) -> None:
    _write_text(path, json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _box(p: dict) -> BoxSpec:
    return BoxSpec(int(p["dim"]), float(p["half_side"]), Convention(p.get("convention", "torus")))


def _one(value) -> float:
    if isinstance(value, (list, tuple)):
        if not value:
            raise DomainError("empty distance list")
        return float(value[0])
    return float(value)


def _floats(value) -> list[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(value)]


def _require(p: dict, key: str):
    if p.get(key) is None:
        raise DomainError(f"missing required parameter {key!r}")
    return p[key]


def _config_points(p: dict):
    if p.get("input"):
        return read_points(p["input"])
    return sample_poisson(_box(p), float(p["intensity"]), int(p["seed"]))


# -- subcommands -----------------------------------------------------------------------

def _cmd_sample_poisson(cfg, p):
    config = sample_poisson(_box(p), float(p["intensity"]), int(p["seed"]))
    write_points(config, _require(p, "out"))


def _cmd_graph_census(cfg, p):
    config = _config_points(p)
    d = _one(p["distance"])
    graph = build_graph(config, d, dense=bool(p.get("dense", False)))
    census = component_census(graph)
    if p.get("edges_out"):
        write_edge_list(graph, p["edges_out"])
    _write_json(p.get("out"), {
        "provenance": _provenance(cfg),
        "params": {"distance": d, "points": len(config), "dim": config.box.dim,
                   "half_side": config.box.half_side},
        "census": census.as_dict(),
        "degree_sum": int(graph.degrees.sum()),
    })


def _cmd_cover(cfg, p):
    vertices, _, edges = read_edge_list(_require(p, "input"))
    g = SimpleGraph(vertices, edges)
    mode = p["mode"]
    if mode == "exact":
        res = min_vertex_cover(g)
    elif mode == "constructive":
        res = constructive_cover(g)
    else:
        raise DomainError(f"cover mode must be exact or constructive, got {mode!r}")
    doc = res.as_dict()
    doc["provenance"] = _provenance(cfg)
    _write_json(p.get("out"), doc)
    if not covers_all_edges(res.cover, edges):
        raise BoundViolation("cover misses an edge")


def _cmd_decimate(cfg, p):
    config = _config_points(p)
    d = _one(p["distance"])
    res = run_decimation(config, d, mode=p["mode"])
    if p.get("tau_out"):
        write_points(res.tau, p["tau_out"])
    b = res.bounds
    t = res.tau_count
    checks = {
        "spacing_gt_d": res.tau_spacing is None or res.tau_spacing > d,
        "tau_le_upper1": t <= b.upper1,
        "tau_le_upper2": t <= b.upper2,
    }
    if res.exact:
        checks["tau_ge_lower1"] = t >= b.lower1 - 1e-9
    _write_json(p.get("out"), {
        "provenance": _provenance(cfg),
        "params": {"distance": d, "mode": p["mode"], "points": len(config)},
        "census": res.census.as_dict(),
        "cover_total": res.cover_total,
        "tau_count": t,
        "tau_spacing": res.tau_spacing,
        "exact": res.exact,
        "bounds": b.as_dict(),
        "checks": checks,
        "lower2_holds": t >= b.lower2 - 1e-9,
    })
    if not all(checks.values()):
        raise BoundViolation(f"decimation bound failed: {checks}")


def _cmd_moments_check(cfg, p):
    n, N, lam = int(p["dim"]), float(p["half_side"]), float(p["intensity"])
    trials, seed = int(p["trials"]), int(p["seed"])
    box = BoxSpec(n, N)
    records = []
    for k, d in enumerate(_floats(p["distance"])):
        params = {"dim": n, "half_side": N, "distance": d, "intensity": lam, "trials": trials}
        est = mc_estimate(edge_count(d), box, lam, trials, seed + 2 * k,
                          workers=int(p.get("workers", 1)))
        ref = expected_M(n, N, d, lam)
        records.append({"check": "mean_M", "params": params, "estimate": est.as_dict(),
                        "reference": ref, "pass": abs(est.mean - ref) <= 3 * est.stderr})
        if lam == 1.0:
            est1 = mc_estimate(isolated_edge_count(d), box, lam, trials, seed + 2 * k + 1,
                               workers=int(p.get("workers", 1)))
            lo, hi = expected_M1_bracket(n, N, d)
            ok = lo - 3 * est1.stderr <= est1.mean <= hi + 3 * est1.stderr
            records.append({"check": "mean_M1_bracket", "params": params,
                            "estimate": est1.as_dict(), "reference": [lo, hi], "pass": ok})
    _write_json(p.get("out"), {"provenance": _provenance(cfg), "records": records})
    if not all(r["pass"] for r in records):
        raise BoundViolation("moment check failed")


def _cmd_concentration(cfg, p):
    n, d = int(p["dim"]), _one(p["distance"])
    Ns = _floats(p["half_sides"])
    trials, seed = int(p["trials"]), int(p["seed"])
    workers = int(p.get("workers", 1))
    scaling = variance_scaling_check(n, d, Ns, trials, seed, workers=workers)
    rows = concentration_check(n, d, Ns, float(p["delta"]), float(p["epsilon"]), trials,
                               seed + 1, workers=workers)
    ex = [r.exceedance for r in rows]
    checks = {
        "variance_spread_le_2": scaling.spread <= 2.0,
        "exceedance_nonincreasing": all(a >= b for a, b in zip(ex, ex[1:])),
        "final_exceedance_le_0.05": ex[-1] <= 0.05,
        "chebyshev": all(r.exceedance <= r.chebyshev + 3 * r.binomial_stderr for r in rows),
    }
    _write_json(p.get("out"), {
        "provenance": _provenance(cfg),
        "params": {"dim": n, "distance": d, "half_sides": Ns, "trials": trials,
                   "delta": float(p["delta"]), "epsilon": float(p["epsilon"])},
        "variance_per_volume": list(scaling.ratios),
        "variance_spread": scaling.spread,
        "concentration": [r.as_dict() for r in rows],
        "checks": checks,
    })
    if not all(checks.values()):
        raise BoundViolation(f"concentration check failed: {checks}")


CURVE_HEADER = ["d", "nu_target", "bound_kind", "rhs", "mean_density", "stderr", "trials", "flag"]


def _cmd_d_curve(cfg, p):
    rows = estimate_D_curve(int(p["dim"]), _floats(p["distance"]), float(p["half_side"]),
                            int(p["trials"]), int(p["seed"]),
                            epsilon_band=float(p["epsilon_band"]), slack=float(p["slack"]),
                            mode=p["mode"], workers=int(p.get("workers", 1)))
    _write_text(p.get("out"), _csv(CURVE_HEADER, [
        (r.d, r.nu_target, r.bound_kind, r.rhs, r.mean_density, r.stderr, r.trials, r.flag)
        for r in rows]))
    if p.get("report"):
        _write_json(p["report"], {"provenance": _provenance(cfg),
                                  "rows": [dict(r.__dict__, flag=r.flag) for r in rows]})
    if not all(r.satisfied for r in rows if r.bound_kind == "lower13"):
        raise BoundViolation("lower13 density target not reached at this box size")


def lattice_sample_checks(delta: np.ndarray) -> dict:
    """KS test against the exact law plus moment checks on sampled densities."""
    m = len(delta)
    mean = float(delta.mean())
    var = float(delta.var(ddof=1))
    centered = delta - mean
    mu4 = float(np.mean(centered ** 4))
    var_se = math.sqrt(max(mu4 - var * var * (m - 3) / (m - 1), 0.0) / m)
    ks = stats.kstest(delta, cdf_delta)
    return {
        "samples": m,
        "mean": mean,
        "mean_stderr": math.sqrt(var / m),
        "variance": var,
        "variance_stderr": var_se,
        "max": float(delta.max()),
        "ks_statistic": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "pass": {
            "ks_at_0.01": bool(ks.pvalue >= 0.01),
            "mean": abs(mean - MEAN) <= 3 * math.sqrt(var / m),
            "variance": abs(var - VARIANCE) <= 3 * var_se,
            "max": float(delta.max()) <= MAX_DENSITY,
        },
    }


def _cmd_lattice2d(cfg, p):
    batch = sample_modular_batch(int(p["trials"]), int(p["seed"]))
    _write_text(p.get("out"), _csv(["x", "y", "delta"], zip(batch.x, batch.y, batch.delta)))
    checks = lattice_sample_checks(batch.delta)
    checks["acceptance_rate"] = len(batch.delta) / batch.proposals if batch.proposals else math.nan
    if p.get("report"):
        _write_json(p["report"], {"provenance": _provenance(cfg), "analytic": delta_moments(),
                                  "sample": checks})
    if not all(checks["pass"].values()):
        raise BoundViolation(f"lattice sample check failed: {checks['pass']}")


def _cmd_schmidt_table(cfg, p):
    rows = []
    for n in p["dims"]:
        for x in _floats(p["xs"]):
            br = fn_bracket(int(n), x)
            rows.append((int(n), x, limit_cdf(x), remainder_bound(int(n), x / 2.0),
                         br.lower, br.upper, br.width))
    _write_text(p.get("out"), _csv(["n", "x", "limit_cdf", "remainder", "lower", "upper",
                                    "width"], rows))


def _cmd_fig1(cfg, p):
    n = int(p["dim"])
    if p.get("distance"):
        grid = _floats(p["distance"])
    else:
        from .schmidt import min_distance_for_density
        size = int(p["grid_size"])
        grid = [min_distance_for_density(n, 2.0 * (i + 1) / size) for i in range(size)]
    rows = fig1_curves(n, grid, resolution=int(p["resolution"]))
    _write_text(p.get("out"), _csv(["curve_id", "nu", "value"], rows))


_DISPATCH = {
    "sample-poisson": _cmd_sample_poisson,
    "graph-census": _cmd_graph_census,
    "cover": _cmd_cover,
    "decimate": _cmd_decimate,
    "moments-check": _cmd_moments_check,
    "concentration": _cmd_concentration,
    "d-curve": _cmd_d_curve,
    "lattice2d": _cmd_lattice2d,
    "schmidt-table": _cmd_schmidt_table,
    "fig1": _cmd_fig1,
}


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; returns the process exit status."""
    try:
        params = config.resolved()
        _DISPATCH[config.subcommand](config, params)
    except BoundViolation as exc:
        print(f"bound check failed: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except (DomainError, ValueError, KeyError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def emit_fig1_curves(n: int, d_grid, resolution: int = 99) -> str:
    """Density-bound curves as CSV text."""
    return _csv(["curve_id", "nu", "value"], fig1_curves(n, list(d_grid), resolution))


# -- argument parsing ---------------------------------------------------------------

def _list_of(kind):
    def parse(text: str):
        try:
            return [kind(t) for t in text.split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int)
    common.add_argument("--half-side", type=float)
    common.add_argument("--distance", type=_list_of(float), help="one value or a comma list")
    common.add_argument("--intensity", type=float)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--epsilon-band", type=float)
    common.add_argument("--out")
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--workers", type=int, help="threads for independent trials")

    parser = argparse.ArgumentParser(prog="randpack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("sample-poisson", parents=[common])
    sp.add_argument("--convention", choices=["torus", "clipped"])

    sp = sub.add_parser("graph-census", parents=[common])
    sp.add_argument("--input")
    sp.add_argument("--edges-out")
    sp.add_argument("--dense", action="store_const", const=True)

    sp = sub.add_parser("cover", parents=[common])
    sp.add_argument("--input")
    sp.add_argument("--mode", choices=["exact", "constructive"])

    sp = sub.add_parser("decimate", parents=[common])
    sp.add_argument("--input")
    sp.add_argument("--mode", choices=["exact", "constructive", "auto"])
    sp.add_argument("--tau-out")

    sub.add_parser("moments-check", parents=[common])

    sp = sub.add_parser("concentration", parents=[common])
    sp.add_argument("--half-sides", type=_list_of(float))
    sp.add_argument("--delta", type=float)
    sp.add_argument("--epsilon", type=float)

    sp = sub.add_parser("d-curve", parents=[common])
    sp.add_argument("--slack", type=float)
    sp.add_argument("--mode", choices=["exact", "constructive", "auto"])
    sp.add_argument("--report")

    sp = sub.add_parser("lattice2d", parents=[common])
    sp.add_argument("--report")

    sp = sub.add_parser("schmidt-table", parents=[common])
    sp.add_argument("--dims", type=_list_of(int))
    sp.add_argument("--xs", type=_list_of(float))

    sp = sub.add_parser("fig1", parents=[common])
    sp.add_argument("--resolution", type=int)
    sp.add_argument("--grid-size", type=int)
    return parser


def config_from_args(argv=None) -> ExperimentConfig:
    ns = vars(_parser().parse_args(argv))
    subcommand = ns.pop("subcommand")
    cfg_path = ns.pop("config")
    params = {}
    if cfg_path:
        cfg = ExperimentConfig.from_json(Path(cfg_path).read_text(encoding="utf-8"))
        if cfg.subcommand != subcommand:
            raise DomainError(f"config is for {cfg.subcommand!r}, not {subcommand!r}")
        params.update(cfg.params)
    params.update({k: v for k, v in ns.items() if v is not None})
    return ExperimentConfig(subcommand, params)


def main(argv=None) -> int:
    try:
        config = config_from_args(argv)
    except (DomainError, OSError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
