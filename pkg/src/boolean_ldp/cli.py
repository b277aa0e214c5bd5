"""``boolean-ldp`` command line.

Exit codes: 0 success, 1 a verdict failed, 2 configuration or input error.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import harness
from .geometry import Domain
from .measures import (BinnedMeasure, BinnedPairMeasure, Partition, empirical_connectivity_measure,
                       empirical_mark_measure, reference_measure)
from .model import ScalingRegime, kernel_from_dict, law_from_dict
from .network import HARD, SOFT, build_hard, build_soft
from .rates import conditional_rate, joint_rate, mark_rate
from .sampler import sample_marked_ppp

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "seed": None,
    "mode": SOFT,
    "replicas": 1000,
    "output": "out",
    "domain": {"dimension": 3, "side": 1.0, "topology": "bounded"},
    "regime": {
        "lambda": 100.0,
        "mark_law": {"law": "uniform", "lo": 0.0, "hi": 1.0},
        "kernel": {"kind": "corollary", "vol_D": 1.0},
    },
    "partition": {"bins": 1, "radius_edges": None},
}


class ConfigError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"config error at '{path}': {message}")
        self.path = path


# --------------------------------------------------------------------------
# config
# --------------------------------------------------------------------------


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(assignment, "override must look like key.path=value")
    key, raw = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(key, f"'{p}' is not a section")
    node[parts[-1]] = _parse_value(raw.strip())


def load_config(path: str | None, overrides=()) -> dict:
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError("<file>", f"no such config file: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("<file>", str(exc)) from None
    cfg = _merge(DEFAULTS, raw)
    for o in overrides:
        apply_override(cfg, o)
    if cfg.get("seed") is None:
        raise ConfigError("seed", "a master seed is required")
    return cfg


def config_digest(cfg: dict) -> str:
    # worker count and output location do not affect results
    core = {k: v for k, v in cfg.items() if k not in ("output", "workers")}
    blob = json.dumps(core, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _get(cfg: dict, path: str, kind=None):
    node = cfg
    for p in path.split("."):
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(path, "missing key")
        node = node[p]
    if kind is not None:
        try:
            return kind(node)
        except (TypeError, ValueError):
            raise ConfigError(path, f"expected {kind.__name__}, got {node!r}") from None
    return node


def _build(section: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(section, str(exc)) from None


def make_domain(cfg: dict) -> Domain:
    d = _get(cfg, "domain")
    dim = _get(cfg, "domain.dimension", int)
    if "lower" in d or "upper" in d:
        return _build("domain", Domain, dim, d.get("lower"), d.get("upper"), d.get("topology", "bounded"))
    return _build("domain", Domain.cube, float(d.get("side", 1.0)), dim, d.get("topology", "bounded"))


def make_partition(cfg: dict, regime: ScalingRegime, dom: Domain) -> Partition:
    p = _get(cfg, "partition")
    edges = p.get("radius_edges")
    if edges is None:
        law = regime.mark_law
        edges = (law.lo, law.hi if law.hi > law.lo else law.lo + 1e-9)
    return _build("partition", Partition.regular, dom, p.get("bins", 1), edges)


def make_regime(cfg: dict, lam: float | None = None) -> ScalingRegime:
    if lam is None:
        lam = _get(cfg, "regime.lambda", float)
    mark = _build("regime.mark_law", law_from_dict, _get(cfg, "regime.mark_law"))
    kspec = _get(cfg, "regime.kernel")
    partition = None
    if kspec.get("kind") == "table":
        dom = make_domain(cfg)
        p = _get(cfg, "partition")
        edges = p.get("radius_edges") or (mark.lo, mark.hi)
        partition = _build("partition", Partition.regular, dom, p.get("bins", 1), edges)
    kernel = _build("regime.kernel", kernel_from_dict, kspec, partition)
    return _build("regime", ScalingRegime, lam, mark, kernel)


def lambda_grid(cfg: dict) -> list[float]:
    reg = _get(cfg, "regime")
    grid = reg.get("lambda_grid", [reg.get("lambda")])
    try:
        return [float(v) for v in grid]
    except (TypeError, ValueError):
        raise ConfigError("regime.lambda_grid", f"expected a list of numbers, got {grid!r}") from None


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


class Writer:
    def __init__(self, outdir: str, digest: str, deterministic: bool):
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.digest = digest
        self.meta = {"config_digest": digest}
        if not deterministic:
            self.meta["generated_at"] = datetime.now(timezone.utc).isoformat()

    def header(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.meta.items())

    def text(self, name: str, body: str) -> Path:
        path = self.outdir / name
        path.write_text(body)
        return path

    def json(self, name: str, doc: dict) -> Path:
        doc = {**doc, **self.meta}
        return self.text(name, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _simulate(cfg):
    dom = make_domain(cfg)
    regime = make_regime(cfg)
    mode = cfg.get("mode", SOFT)
    if mode not in (HARD, SOFT):
        raise ConfigError("mode", f"expected 'hard' or 'soft', got {mode!r}")
    seed = _get(cfg, "seed", int)
    config = sample_marked_ppp(regime, dom, seed)
    net = build_hard(config, dom) if mode == HARD else build_soft(config, regime, seed)
    return dom, regime, net


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_simulate(cfg, args, out: Writer) -> int:
    _, _, net = _simulate(cfg)
    out.text("points.txt", net.config.to_text(out.header()))
    out.text("edges.csv", net.to_csv(out.header()))
    summary = {"n_points": net.config.n_points, "n_edges": net.n_edges, "mode": net.mode}
    out.json("simulate.json", summary)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_measures(cfg, args, out: Writer) -> int:
    dom, regime, net = _simulate(cfg)
    part = make_partition(cfg, regime, dom)
    l1 = empirical_mark_measure(net, part)
    l2 = empirical_connectivity_measure(net, part)
    out.text("mark_measure.json", l1.to_json(**out.meta) + "\n")
    out.text("connectivity_measure.csv", l2.to_csv(out.header()))
    out.text("reference_measure.json", reference_measure(regime, part).to_json(**out.meta) + "\n")
    print(json.dumps({"mark_mass": l1.total, "connectivity_mass": l2.total}))
    return EXIT_OK


def _read(path: str | None, what: str) -> str:
    if path is None:
        raise ConfigError(what, "input file not given")
    try:
        return Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(what, f"no such file: {path}") from None


def cmd_rate(cfg, args, out: Writer) -> int:
    regime = make_regime(cfg)
    omega = _build("rate.omega", BinnedMeasure.from_json, _read(args.omega, "rate.omega"))
    ref = reference_measure(regime, omega.partition)
    inputs = {"omega": omega.masses, "config_digest": out.digest}
    if args.pi is None:
        rv = mark_rate(omega, ref)
        kind = "mark"
    else:
        pi = _build("rate.pi", BinnedPairMeasure.from_csv, _read(args.pi, "rate.pi"), omega.partition)
        inputs["pi"] = pi.masses
        if args.conditional:
            rv, kind = conditional_rate(pi, omega, regime), "conditional"
        else:
            rv, kind = joint_rate(omega, pi, ref, regime), "joint"
    record = {"rate": kind, **rv.to_record(inputs)}
    out.json("rate.json", record)
    print(json.dumps(record))
    return EXIT_OK


def _event(cfg):
    ev = _get(cfg, "event")
    kind = ev.get("kind", "mark")
    threshold = _get(cfg, "event.threshold", float)
    if kind == "mark":
        return harness.MarkEvent(tuple(int(c) for c in ev.get("cells", [0])), threshold), None
    if kind == "pair":
        pairs = ev.get("pairs")
        pairs = None if pairs is None else tuple((int(a), int(b)) for a, b in pairs)
        return harness.PairEvent(pairs, threshold), ev.get("omega", [1.0])
    raise ConfigError("event.kind", f"expected 'mark' or 'pair', got {kind!r}")


def _verdict_code(verdict: str) -> int:
    return EXIT_OK if verdict in ("PASS", "N/A") else EXIT_FAIL


def cmd_ldp_verify(cfg, args, out: Writer) -> int:
    dom = make_domain(cfg)
    regime = make_regime(cfg)
    part = make_partition(cfg, regime, dom)
    event, omega_masses = _event(cfg)
    omega = None
    if omega_masses is not None:
        omega = _build("event.omega", BinnedMeasure, part, omega_masses)
    ev = cfg["event"]
    res = harness.ldp_slope(
        event, regime, lambda_grid(cfg), _get(cfg, "replicas", int), _get(cfg, "seed", int),
        partition=part, dom=dom, omega=omega, mode=cfg.get("mode", SOFT),
        method=ev.get("method", "auto"), tolerance=float(ev.get("tolerance", 0.10)),
        workers=args.workers)
    out.text("sweep.csv", res.to_csv(out.header()))
    out.json("sweep.json", res.summary())
    print(json.dumps({"slope": res.slope, "predicted": res.predicted, "verdict": res.verdict}))
    for note in res.notes:
        print(note, file=sys.stderr)
    return _verdict_code(res.verdict)


def cmd_mean_degree(cfg, args, out: Writer) -> int:
    dom = make_domain(cfg)
    regime = make_regime(cfg)
    tol = float(cfg.get("mean_degree", {}).get("tolerance", 0.05))
    res = harness.mean_degree_check(regime, lambda_grid(cfg), _get(cfg, "replicas", int),
                                    _get(cfg, "seed", int), dom, tolerance=tol, workers=args.workers)
    out.text("mean_degree.csv", res.to_csv(out.header()))
    out.json("mean_degree.json", res.summary())
    print(json.dumps({"estimate": res.estimates[-1], "target": res.extra["target"], "verdict": res.verdict}))
    for note in res.notes:
        print(note, file=sys.stderr)
    return _verdict_code(res.verdict)


def cmd_oracle_check(cfg, args, out: Writer) -> int:
    dom = make_domain(cfg)
    regime = make_regime(cfg)
    part = make_partition(cfg, regime, dom)
    oc = cfg.get("oracle", {})
    seed = _get(cfg, "seed", int)
    reps = _get(cfg, "replicas", int)
    rep = harness.oracle_check(regime, dom, part, reps, seed, n_points=int(oc.get("n_points", 10)),
                               tolerance=float(oc.get("tolerance", 0.02)), workers=args.workers)
    bound = harness.point_count_bound_check(regime, regime.lam, reps, seed, a=float(oc.get("bennett_a", 1.0)),
                                            workers=args.workers)
    doc = {"oracle": json.loads(rep.to_json()), "point_count": json.loads(bound.to_json())}
    verdict = "PASS" if rep.verdict == "PASS" and bound.verdict in ("PASS", "N/A") else "FAIL"
    doc["verdict"] = verdict
    out.json("oracle_check.json", doc)
    print(json.dumps({"cell_tv": rep.cell_tv, "edge_tv": rep.edge_tv, "verdict": verdict}))
    return _verdict_code(verdict)


COMMANDS = {
    "simulate": cmd_simulate,
    "measures": cmd_measures,
    "rate": cmd_rate,
    "ldp-verify": cmd_ldp_verify,
    "mean-degree": cmd_mean_degree,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boolean-ldp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", nargs="?", help="TOML experiment file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. regime.lambda=50")
        sp.add_argument("--out", help="output directory (overrides 'output')")
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        sp.add_argument("--deterministic", action="store_true",
                        help="omit the timestamp so reruns are byte-identical")
        if name == "rate":
            sp.add_argument("--omega", help="mark measure JSON")
            sp.add_argument("--pi", help="connectivity measure CSV")
            sp.add_argument("--conditional", action="store_true",
                            help="report the conditional rate only")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        if args.out:
            cfg["output"] = args.out
        out = Writer(cfg.get("output", "out"), config_digest(cfg), args.deterministic)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
