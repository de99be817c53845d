"""Command-line front door.

Subcommands: constants, free-energy, critical-scan, annealed-exact,
verify, disorder-sample.  Flat key=value config files are supported and
flags take precedence; the effective configuration is recorded in the
output provenance so any run is reproducible from its own header.

Exit codes: 0 success, 1 domain error, 2 capability error, 3 suite failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import verify as verify_mod
from .constants import slope_report
from .correlation import model_to_config, parse_model, upsilon_infinity
from .disorder import sample_path, write_path_dump, Tilt
from .errors import CapabilityError, DomainError, PolymerlabError
from .estimators import critical_point, free_energy
from .renewal import law_to_config, parse_law

ENV_SEED = "POLYMERLAB_SEED"


def _default_seed() -> int:
    return int(os.environ.get(ENV_SEED, "0"))


def _load_config(path: str) -> dict:
    cfg = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DomainError(f"config line without '=': {line!r}")
            k, _, v = line.partition("=")
            cfg[k.strip()] = v.strip()
    return cfg


def _merge_config(args: argparse.Namespace) -> dict:
    """Flags override config-file entries; returns the effective flat config."""
    cfg = {}
    if getattr(args, "config", None):
        cfg.update(_load_config(args.config))
    for key, val in vars(args).items():
        if key in ("config", "func") or val is None:
            continue
        cfg[key.replace("_", "-")] = str(val)
    return cfg


def _provenance(cfg: dict) -> list[str]:
    return [f"# {k}={cfg[k]}" for k in sorted(cfg)]


def _emit(args, cfg: dict, header: list[str], rows: list[list], json_payload):
    """Write CSV (provenance comments + header row) or JSON to --out/stdout."""
    fmt = cfg.get("format", "csv")
    if fmt == "json":
        text = json.dumps({"config": cfg, "results": json_payload},
                          indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        for line in _provenance(cfg):
            buf.write(line + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
        text = buf.getvalue()
    else:
        raise DomainError(f"unknown format {fmt!r}")
    out = cfg.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _model_law(cfg):
    model = parse_model(cfg.get("model", "fr:1,0.2"))
    law = parse_law(cfg.get("law", "zeta:1.5"))
    return model, law


def _grid(spec: str):
    """start:stop:num inclusive grid."""
    a, b, n = spec.split(":")
    a, b, n = float(a), float(b), int(n)
    if n < 1:
        raise DomainError("grid needs at least one point")
    if n == 1:
        return [a]
    return [a + (b - a) * i / (n - 1) for i in range(n)]


# ---------------------------------------------------------------------------
# subcommands


def cmd_constants(args) -> int:
    cfg = _merge_config(args)
    model, law = _model_law(cfg)
    rep = slope_report(model, law, tol=float(cfg.get("tol", "1e-10")))
    flat = rep.as_flat_dict()
    flat["model"] = model.label()
    flat["law"] = law.label()
    header = sorted(flat)
    _emit(args, cfg, header, [[flat[k] for k in header]], flat)
    return 0


def cmd_free_energy(args) -> int:
    cfg = _merge_config(args)
    model, law = _model_law(cfg)
    kind = cfg.get("kind", "copolymer")
    method = cfg.get("method", "quenched-mc")
    N = int(cfg.get("N", "1024"))
    replicas = int(cfg.get("replicas", "16"))
    seed = int(cfg.get("seed", str(_default_seed())))
    workers = int(cfg.get("workers", "1"))
    boundary = cfg.get("boundary", "constrained")
    couplings = _grid(cfg["coupling-grid"]) if "coupling-grid" in cfg \
        else [float(cfg.get("coupling", "0.5"))]
    hs = _grid(cfg["h-grid"]) if "h-grid" in cfg else [float(cfg.get("h", "0.0"))]
    rows, payload = [], []
    for c in couplings:
        for h in hs:
            fe = free_energy(model, law, kind, c, h, N, replicas=replicas,
                             seed=seed, boundary=boundary, method=method,
                             workers=workers)
            rows.append([kind, method, model.label(), law.label(), N,
                         fe.replicas, c, h, fe.value, fe.stderr])
            payload.append(fe.__dict__)
    _emit(args, cfg, ["kind", "method", "model", "law", "N", "replicas",
                      "coupling", "h", "value", "stderr"], rows, payload)
    return 0


def cmd_critical_scan(args) -> int:
    cfg = _merge_config(args)
    model, law = _model_law(cfg)
    kind = cfg.get("kind", "copolymer")
    method = cfg.get("method", "quenched-mc")
    seed = int(cfg.get("seed", str(_default_seed())))
    replicas = int(cfg.get("replicas", "32"))
    workers = int(cfg.get("workers", "1"))
    ns = tuple(int(x) for x in cfg.get("sizes", "1024,2048,4096").split(","))
    couplings = _grid(cfg.get("coupling-grid", "0.4:1.2:3"))
    rep = slope_report(model, law)
    rows, payload = [], []
    for c in couplings:
        cp = critical_point(model, law, kind, c, method=method, N_sequence=ns,
                            replicas=replicas, seed=seed, workers=workers)
        monthus_ref = rep.monthus * c
        annealed_ref = rep.upsilon_inf * c
        rows.append([kind, c, cp.h_lo, cp.h_hi, cp.extrapolated,
                     monthus_ref, annealed_ref, ns[-1], cp.eps_F])
        payload.append({"kind": kind, "coupling": c, "h_lo": cp.h_lo,
                        "h_hi": cp.h_hi, "extrapolated": cp.extrapolated,
                        "monthus_ref": monthus_ref,
                        "annealed_ref": annealed_ref, "N_max": ns[-1],
                        "eps_F": cp.eps_F})
    _emit(args, cfg, ["kind", "coupling", "hc_lo", "hc_hi", "hc_mid",
                      "monthus_ref", "annealed_ref", "N_max", "eps_F"],
          rows, payload)
    return 0


def cmd_annealed_exact(args) -> int:
    cfg = _merge_config(args)
    model, law = _model_law(cfg)
    kind = cfg.get("kind", "copolymer")
    coupling = float(cfg.get("coupling", "0.5"))
    h = float(cfg.get("h", "0.0"))
    boundary = cfg.get("boundary", "constrained")
    sizes = [int(x) for x in cfg.get("sizes", "1000,2000,4000,8000").split(",")]
    rows, payload = [], []
    for N in sizes:
        fe = free_energy(model, law, kind, coupling, h, N, method="annealed-exact",
                         boundary=boundary)
        rows.append([kind, model.label(), law.label(), coupling, h, N,
                     fe.value * N, fe.value])
        payload.append({"kind": kind, "coupling": coupling, "h": h, "N": N,
                        "logZ": fe.value * N, "per_site": fe.value})
    _emit(args, cfg, ["kind", "model", "law", "coupling", "h", "N", "logZ",
                      "per_site"], rows, payload)
    return 0


def cmd_verify(args) -> int:
    cfg = _merge_config(args)
    seed = int(cfg.get("seed", str(_default_seed())))
    which = cfg.get("suite", "all")
    ids = verify_mod.SUITE_IDS if which == "all" else tuple(which.split(","))
    results = [verify_mod.run_suite(s, seed) for s in ids]
    rows = []
    for r in results:
        for c in r.checks:
            rows.append([r.suite_id, r.statement, c.name, c.mode, c.measured,
                         c.reference, c.tol, c.passed])
    payload = [r.to_dict() for r in results]
    _emit(args, cfg, ["suite", "statement", "check", "mode", "measured",
                      "reference", "tol", "passed"], rows, payload)
    for r in results:
        print(f"{r.suite_id}: {'pass' if r.passed else 'FAIL'} "
              f"({r.runtime:.1f}s)", file=sys.stderr)
    return 0 if all(r.passed for r in results) else 3


def cmd_disorder_sample(args) -> int:
    cfg = _merge_config(args)
    model, _ = _model_law(cfg)
    N = int(cfg.get("N", "1024"))
    seed = int(cfg.get("seed", str(_default_seed())))
    tilt = None
    if "tilt" in cfg:
        d, _, k = cfg["tilt"].partition(":")
        tilt = Tilt(float(d), int(k) if k else N)
    path = sample_path(model, N, seed, tilt=tilt)
    out = cfg.get("out")
    if cfg.get("format", "binary") == "csv":
        rows = [[i + 1, v] for i, v in enumerate(path.values)]
        _emit(args, cfg, ["site", "value"], rows,
              {"values": list(map(float, path.values))})
    else:
        if not out:
            raise DomainError("binary dump needs --out")
        with open(out, "wb") as fh:
            write_path_dump(path, fh)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polymerlab",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--model", help="iid | fr:1,0.2 | poly:2.0 | exp:0.5")
        sp.add_argument("--law", help="zeta:1.5[:G] | zeta-trunc:1.5[:G] | k1zeta:0.95:1.5[:G]")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--config", help="flat key=value file; flags override")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json", "binary"))

    sp = sub.add_parser("constants", help="closed-form slope constants")
    common(sp)
    sp.add_argument("--tol", type=float)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("free-energy", help="free-energy grid")
    common(sp)
    sp.add_argument("--kind", choices=("copolymer", "pinning"))
    sp.add_argument("--method",
                    choices=("quenched-mc", "annealed-exact", "annealed-mc"))
    sp.add_argument("--N", type=int)
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--boundary", choices=("constrained", "free"))
    sp.add_argument("--coupling", type=float)
    sp.add_argument("--coupling-grid", help="start:stop:num")
    sp.add_argument("--h", type=float)
    sp.add_argument("--h-grid", help="start:stop:num")
    sp.set_defaults(func=cmd_free_energy)

    sp = sub.add_parser("critical-scan", help="critical points over a coupling grid")
    common(sp)
    sp.add_argument("--kind", choices=("copolymer", "pinning"))
    sp.add_argument("--method", choices=("quenched-mc", "annealed-exact"))
    sp.add_argument("--coupling-grid", help="start:stop:num")
    sp.add_argument("--sizes", help="comma-separated N sequence")
    sp.add_argument("--replicas", type=int)
    sp.set_defaults(func=cmd_critical_scan)

    sp = sub.add_parser("annealed-exact", help="exact transfer values over N")
    common(sp)
    sp.add_argument("--kind", choices=("copolymer", "pinning"))
    sp.add_argument("--coupling", type=float)
    sp.add_argument("--h", type=float)
    sp.add_argument("--boundary", choices=("constrained", "free"))
    sp.add_argument("--sizes", help="comma-separated sizes")
    sp.set_defaults(func=cmd_annealed_exact)

    sp = sub.add_parser("verify", help="run verification suites")
    common(sp)
    sp.add_argument("suite", nargs="?", default="all",
                    help="all or comma-separated suite ids (S1..S11)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("disorder-sample", help="dump one disorder path")
    common(sp)
    sp.add_argument("--N", type=int)
    sp.add_argument("--tilt", help="delta[:window]")
    sp.set_defaults(func=cmd_disorder_sample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 1
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return 2
    except PolymerlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
