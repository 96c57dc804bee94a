"""Command-line driver: configure model/group/mesh, run invariant pipelines.

Verbs:
  mesh      build a symmetric sphere mesh and write it as JSON
  compute   run a JSON-configured invariant pipeline, emit a JSON report
  ingest    validate (and optionally compute on) an external MPS family file
  selftest  fast end-to-end check of the reference values

Reports are deterministic: identical config and build give identical bytes.
Exit codes: 0 success, 2 configuration/schema errors, 3 numerical failures
(the failing simplex/group slot is named in the message).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np
from scipy.linalg import expm

from . import equivariant as eqv
from . import models, mps, purestate
from .errors import EqfamError, SchemaError
from .gcomplex import (
    attach_action,
    build_sphere_complex,
    coordinate_circle_s3,
    cn_wedge_domains_s2,
    equator_sphere_s3,
    hemisphere_domains_s2,
)
from .numerics import quantization_residual, wrap_angle

REPORT_SCHEMA_VERSION = 1
CONFIG_SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "gap_tol": 1e-6,
    "overlap_tol": 1e-8,
    "flux_guard": float(np.pi / 2),
    "quantization_tol": 1e-3,
    "coc_tol": 1e-8,
    "equiv_tol": 1e-8,
    "prop_tol": 1e-6,
    "trunc_tol": 1e-12,
}

MODEL_KINDS = ("dimer_spin_chain", "spin_field", "purestate_2x2", "ingest")

_INVARIANTS_BY_MODEL = {
    "dimer_spin_chain": {"ddks", "spt", "pump", "gamma2", "relations", "cocycles"},
    "spin_field": {"chern", "chern_mod_2"},
    "purestate_2x2": {"xi_s2"},
    "ingest": {"ddks", "gamma2_sum"},
}

_EQUIVARIANT_INVARIANTS = {"spt", "pump", "gamma2", "relations", "cocycles"}


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise SchemaError("config must be a JSON object")
    if cfg.get("schema_version") != CONFIG_SCHEMA_VERSION:
        raise SchemaError(f"config schema_version must be {CONFIG_SCHEMA_VERSION}")
    model = cfg.get("model", {})
    kind = model.get("kind")
    if kind not in MODEL_KINDS:
        raise SchemaError(f"model.kind must be one of {MODEL_KINDS}")
    mesh = cfg.get("mesh", {})
    dim = mesh.get("dim")
    refinements = mesh.get("refinements")
    if dim not in (1, 2, 3) or not isinstance(refinements, int) or refinements < 0:
        raise SchemaError("mesh needs dim in {1,2,3} and refinements >= 0")
    want_dim = {"dimer_spin_chain": 3, "spin_field": 2, "purestate_2x2": 2,
                "ingest": 3}[kind]
    if dim != want_dim:
        raise SchemaError(f"model {kind!r} requires mesh.dim == {want_dim}")
    if kind in ("dimer_spin_chain", "spin_field"):
        two_s = model.get("two_s")
        if two_s not in (1, 2, 3, 4):
            raise SchemaError("model.two_s must be in {1, 2, 3, 4}")
    if kind == "ingest" and not isinstance(model.get("path"), str):
        raise SchemaError("model.path required for ingest")
    invariants = cfg.get("invariants", [])
    allowed = _INVARIANTS_BY_MODEL[kind]
    bad = [i for i in invariants if i not in allowed]
    if bad:
        raise SchemaError(f"invariants {bad} not available for model {kind!r} "
                          f"(allowed: {sorted(allowed)})")
    group = cfg.get("group", [])
    if kind == "dimer_spin_chain":
        known = set(models._PARAM)
        bad = [g for g in group if g not in known]
        if bad:
            raise SchemaError(f"unknown group generators {bad}")
        needs_group = _EQUIVARIANT_INVARIANTS & set(invariants)
        if needs_group and not group:
            raise SchemaError(f"invariants {sorted(needs_group)} need group generators")
        if "relations" in invariants:
            missing = {"T", "C2x", "C2y"} - set(group)
            if missing:
                raise SchemaError(f"relations need generators {sorted(missing)}")
    tol = dict(DEFAULT_TOLERANCES)
    extra = set(cfg.get("tolerances", {})) - set(tol)
    if extra:
        raise SchemaError(f"unknown tolerance keys {sorted(extra)}")
    tol.update(cfg.get("tolerances", {}))
    out = dict(cfg)
    out["tolerances"] = tol
    out.setdefault("group", [])
    out.setdefault("invariants", [])
    out.setdefault("output", {})
    return out


def _py(x):
    """Convert numpy scalars/containers to plain JSON-serializable values."""
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, dict):
        return {k: _py(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_py(v) for v in x]
    return x


def _spin_field_group(two_s: int):
    Sx, Sy, Sz = models.spin_ops(two_s)
    rot = lambda th: np.array(
        [[np.cos(th), -np.sin(th), 0], [np.sin(th), np.cos(th), 0], [0, 0, 1.0]]
    )
    return eqv.GroupData.generate({
        "c2": (expm(-1j * np.pi * Sz), 1, rot(np.pi)),
        "c4": (expm(-0.5j * np.pi * Sz), 1, rot(np.pi / 2)),
        "T": (expm(1j * np.pi * Sy), -1, -np.eye(3)),
    })


def run(cfg: dict, threads: int = 1) -> dict:
    """Execute a validated config and return the report dict."""
    tol = cfg["tolerances"]
    kind = cfg["model"]["kind"]
    cx = build_sphere_complex(cfg["mesh"]["dim"], cfg["mesh"]["refinements"])
    entries = []
    quality = {}

    if kind == "dimer_spin_chain":
        two_s = cfg["model"]["two_s"]
        gen_names = [g for g in cfg["group"] if g != "Q4z"]
        grp = None
        if gen_names:
            grp = eqv.GroupData.generate(
                {n: models.group_rep(n, two_s) for n in gen_names}
            )
            cx = attach_action(cx, grp)
        grp4 = None
        if "Q4z" in cfg["group"] or "relations" in cfg["invariants"]:
            grp4 = eqv.GroupData.generate({"Q4z": models.group_rep("Q4z", two_s)})
            cx = attach_action(cx, grp4)
        fam = mps.MPSFamily(cx, models.model_tensors(cx, two_s),
                            gap_tol=tol["gap_tol"], threads=threads)
        quality.update(fam.quality)
        eq = eqv.build_equivariant(fam, grp, equiv_tol=tol["equiv_tol"],
                                   prop_tol=tol["prop_tol"],
                                   gap_tol=tol["gap_tol"]) if grp else None
        nu3 = None
        if "ddks" in cfg["invariants"] or "relations" in cfg["invariants"]:
            nu3, res, worst = mps.ddks(fam, cx.top_chain(), flux_guard=tol["flux_guard"])
            entries.append({"name": "ddks", "value": nu3, "residual": res,
                            "max_flux": worst})
        if "spt" in cfg["invariants"]:
            pp, pm = cx.vertex_at([1, 0, 0, 0]), cx.vertex_at([-1, 0, 0, 0])
            entries.append({
                "name": "spt",
                "mu_rp_T_plus": eqv.mu_rp(eq, pp, "T", tol["quantization_tol"]),
                "mu_rp_T_minus": eqv.mu_rp(eq, pm, "T", tol["quantization_tol"]),
                "mu_t_plus": eqv.mu_t(eq, pp, "C2x", "C2y", tol["quantization_tol"]),
                "mu_t_minus": eqv.mu_t(eq, pm, "C2x", "C2y", tol["quantization_tol"]),
            })
        if "pump" in cfg["invariants"]:
            loop = coordinate_circle_s3(cx, (2, 3))
            eta = eqv.pump_eta(eq, "C2x", loop, flat_tol=tol["coc_tol"])
            C = loop.restrict(lambda b: b[1] > 1e-9)
            fp = eqv.pump_fixed_point(eq, "C2x", "C2y", C, tol["quantization_tol"])
            entries.append({"name": "pump", "eta_C2x": eta, "fixed_point": fp,
                            "residual": quantization_residual(eta)})
        if "gamma2" in cfg["invariants"]:
            sphere = equator_sphere_s3(cx)
            g2 = mps.gamma2(fam, sphere, quantization_tol=tol["quantization_tol"])
            fp = eqv.gamma2_fixed_point(fam, eq, "T", tol["quantization_tol"])
            entries.append({"name": "gamma2", "value": g2, "fixed_point": fp,
                            "residual": quantization_residual(g2)})
        if "relations" in cfg["invariants"]:
            eq4 = eqv.build_equivariant(fam, grp4, equiv_tol=tol["equiv_tol"],
                                        prop_tol=tol["prop_tol"],
                                        gap_tol=tol["gap_tol"])
            rels = [
                eqv.ddks_parity_berry(fam, eq, nu3),
                eqv.ddks_mod_n_pump(fam, eq, grp.mul("C2x", "C2y"), 2, nu3),
                eqv.ddks_mod_n_pump(fam, eq4, "Q4z", 4, nu3),
                eqv.ddks_parity_t(fam, eq, "T", nu3),
                eqv.ddks_mod4_z2z2(fam, eq, "C2x", "C2y", nu3),
                eqv.ddks_parity_z2z2(fam, eq, "C2x", "C2y", nu3),
            ]
            entries.append({"name": "relations", "checks": [
                {"name": r.name, "value": r.value, "expected": r.expected,
                 "residual": r.residual, "nu3": r.nu3} for r in rels]})
        if "cocycles" in cfg["invariants"]:
            resid = eqv.cocycle_residuals(eq)
            worst = max(resid.values())
            if worst > tol["coc_tol"]:
                raise EqfamError(f"cocycle residual {worst:.2e} exceeds coc_tol")
            entries.append({"name": "cocycles", **resid})
        if eq is not None:
            quality.update({k: v for k, v in eq.quality.items()})
        _write_dumps(cfg, cx, fam)

    elif kind == "spin_field":
        two_s = cfg["model"]["two_s"]
        grp = _spin_field_group(two_s)
        cx = attach_action(cx, grp)
        fam = purestate.spin_field_family(cx, two_s, grp)
        if "chern" in cfg["invariants"]:
            nu, res, worst = purestate.chern(fam, cx.top_chain(),
                                             flux_guard=tol["flux_guard"])
            entries.append({"name": "chern", "value": nu, "residual": res,
                            "max_flux": worst})
        if "chern_mod_2" in cfg["invariants"]:
            doms = cn_wedge_domains_s2(cx, "c2", 2)
            val = purestate.chern_mod_n(fam, "c2", 2, doms,
                                        tol["quantization_tol"])
            entries.append({"name": "chern_mod_2", "value": val})

    elif kind == "purestate_2x2":
        grp = eqv.GroupData.generate({"sigma": (np.eye(2), 1, -np.eye(3))})
        cx = attach_action(cx, grp)
        fam = purestate.two_band_family(cx, grp)
        if "xi_s2" in cfg["invariants"]:
            doms = hemisphere_domains_s2(cx, "sigma")
            val = purestate.xi_s2(fam, "sigma", doms, flux_guard=tol["flux_guard"],
                                  quantization_tol=1e-9)
            entries.append({"name": "xi_s2", "value": val,
                            "residual": quantization_residual(val)})

    else:  # ingest
        fam = mps.load_family(cfg["model"]["path"], cx, gap_tol=tol["gap_tol"],
                              threads=threads)
        quality.update(fam.quality)
        if "ddks" in cfg["invariants"]:
            nu3, res, worst = mps.ddks(fam, cx.top_chain(), flux_guard=tol["flux_guard"])
            entries.append({"name": "ddks", "value": nu3, "residual": res,
                            "max_flux": worst})
        if "gamma2_sum" in cfg["invariants"]:
            sphere = equator_sphere_s3(cx)
            val = wrap_angle(sum(c * fam.a02(s) for s, c in sphere.items()))
            entries.append({"name": "gamma2_sum", "value": val})
        _write_dumps(cfg, cx, fam)

    counts = {str(q): cx.n_simplices(q) for q in range(cx.dim + 1)}
    return _py({
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": cfg,
        "mesh": {"dim": cx.dim, "refinements": cfg["mesh"]["refinements"],
                 "counts": counts},
        "invariants": entries,
        "quality": quality,
        "status": "ok",
    })


def _write_dumps(cfg, cx, fam) -> None:
    dumps_dir = cfg.get("output", {}).get("dumps_dir")
    if not dumps_dir:
        return
    import os

    os.makedirs(dumps_dir, exist_ok=True)

    def dump(name, q, value_fn):
        path = os.path.join(dumps_dir, name + ".csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["simplex_id", "vertex_ids", "value"])
            for i, s in enumerate(cx.simplices[q]):
                w.writerow([i, "-".join(map(str, s)), repr(float(value_fn(s)))])

    dump("a01", 1, lambda s: fam.a01(*s))
    dump("a02", 2, lambda s: fam.a02(s))
    if cx.dim >= 3:
        dump("f3", 3, fam.flux3)


# --------------------------------------------------------------------------


def cmd_mesh(args) -> int:
    cx = build_sphere_complex(args.dim, args.refinements)
    cx.save(args.out)
    print(f"wrote {args.out}: " +
          " ".join(f"{q}-simplices={cx.n_simplices(q)}" for q in range(cx.dim + 1)))
    return 0


def cmd_compute(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    cfg = validate_config(cfg)
    report = run(cfg, threads=args.threads)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_ingest(args) -> int:
    cx = build_sphere_complex(args.dim, args.refinements)
    fam = mps.load_family(args.family, cx)
    print(f"family ok: {len(fam.tensors)} vertices, "
          f"min |mu| = {fam.quality['min_abs_mu']:.6f}")
    if args.ddks:
        nu3, res, _ = mps.ddks(fam, cx.top_chain())
        print(f"ddks = {nu3} (residual {res:.2e})")
    return 0


def cmd_selftest(args) -> int:
    """Fast end-to-end check against the reference quantized values."""
    checks = []

    cfg = validate_config({
        "schema_version": 1,
        "model": {"kind": "dimer_spin_chain", "two_s": 1},
        "mesh": {"dim": 3, "refinements": 1},
        "group": ["T", "C2x", "C2y"],
        "invariants": ["ddks", "spt", "pump", "gamma2"],
    })
    rep = run(cfg)
    byname = {e["name"]: e for e in rep["invariants"]}
    checks.append(("ddks(S=1/2) == 1", byname["ddks"]["value"] == 1))
    checks.append(("mu_rp_T(P+) == pi",
                   abs(byname["spt"]["mu_rp_T_plus"] - np.pi) < 1e-6))
    checks.append(("eta_C2x == pi", abs(byname["pump"]["eta_C2x"] - np.pi) < 1e-6))
    checks.append(("gamma2 == pi", abs(byname["gamma2"]["value"] - np.pi) < 1e-6))

    cfg = validate_config({
        "schema_version": 1,
        "model": {"kind": "spin_field", "two_s": 2},
        "mesh": {"dim": 2, "refinements": 2},
        "invariants": ["chern"],
    })
    rep = run(cfg)
    checks.append(("chern(S=1) == 2", rep["invariants"][0]["value"] == 2))

    cfg = validate_config({
        "schema_version": 1,
        "model": {"kind": "purestate_2x2"},
        "mesh": {"dim": 2, "refinements": 2},
        "invariants": ["xi_s2"],
    })
    rep = run(cfg)
    checks.append(("xi_s2 == pi", abs(rep["invariants"][0]["value"] - np.pi) < 1e-9))

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed
    return 0 if ok else 3


def main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="eqfam",
        description="Topological invariants of equivariant MPS parameter families",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    pm = sub.add_parser("mesh", help="build a symmetric sphere mesh")
    pm.add_argument("--dim", type=int, required=True, choices=(1, 2, 3))
    pm.add_argument("--refinements", type=int, default=0)
    pm.add_argument("--out", required=True)
    pm.set_defaults(fn=cmd_mesh)

    pc = sub.add_parser("compute", help="run a configured invariant pipeline")
    pc.add_argument("--config", required=True)
    pc.add_argument("--out")
    pc.add_argument("--threads", type=int, default=1)
    pc.set_defaults(fn=cmd_compute)

    pi = sub.add_parser("ingest", help="validate an external MPS family file")
    pi.add_argument("--family", required=True)
    pi.add_argument("--dim", type=int, default=3, choices=(1, 2, 3))
    pi.add_argument("--refinements", type=int, required=True)
    pi.add_argument("--ddks", action="store_true", help="also compute the DDKS number")
    pi.set_defaults(fn=cmd_ingest)

    ps = sub.add_parser("selftest", help="fast end-to-end reference-value check")
    ps.set_defaults(fn=cmd_selftest)

    args = p.parse_args(argv)
    try:
        return args.fn(args)
    except SchemaError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except EqfamError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
