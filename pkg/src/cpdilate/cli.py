"""Command-line front end.

Commands: dilate | dual | extend | roundtrip | paper-example | verify.
Instances come from a JSON file (--input), from the embedded worked
example (--builtin), or from the random generators (--random).  Reports
are deterministic JSON byte streams; wall-clock timings are only included
with --timings since they vary between runs.

Exit codes: 0 pass, 1 input/parse error, 2 verification failure.
"""

import argparse
import json
import sys
import time

import numpy as np

from . import sampling
from .algebra import (coordinate_basis, element, identity, make_algebra,
                      represent)
from .cpmap import apply, make_cpmap
from .dilation import verify_dilation, weak_tensor_dilation
from .duality import (build_context, dilation_from_extension, double_dual,
                      dual_map, dual_pairing_residual, extend_cp_map,
                      extension_from_dilation, is_minimal_dilation,
                      state_transport_residual)
from .errors import CpdilateError, InputError, NotCovariant, NotCyclic
from .instancefile import (Instance, dump_report, jsonify, load_instance,
                           loads_instance, matrix_to_json)
from .vnmodule import gns, inner_product, qons

STAGE_TOLERANCES = {
    "construct": 1e-10,
    "verify": 1e-9,
    "golden": 1e-12,
    "roundtrip": 1e-8,
}

INV_SQRT2 = 1.0 / np.sqrt(2.0)

BUILTIN_EXAMPLE = {
    "schema": 1,
    "algebras": {
        "A": {"blocks": [{"dim": 1, "mult": 1}, {"dim": 1, "mult": 1}]},
        "B": {"blocks": [{"dim": 1, "mult": 1}, {"dim": 1, "mult": 1}]},
    },
    "states": {
        "f": {"space": "A", "vector": [[INV_SQRT2, 0.0], [INV_SQRT2, 0.0]]},
        "g": {"space": "B", "vector": [[INV_SQRT2, 0.0], [INV_SQRT2, 0.0]]},
    },
    "cp_maps": {
        "S": {"from": "A", "to": "B",
              "action": [[[0.5, 0.0], [0.5, 0.0]], [[0.5, 0.0], [0.5, 0.0]]]},
    },
    "contexts": {
        "uniform": {"map": "S", "f": "f", "g": "g"},
    },
    "seeds": {
        "standard": {"map": "S", "elements": [
            {"terms": [{"a": [[[1.0, 0.0]], [[1.0, 0.0]]],
                        "b": [[[1.0, 0.0]], [[1.0, 0.0]]]}]},
            {"terms": [{"a": [[[1.0, 0.0]], [[-1.0, 0.0]]],
                        "b": [[[1.0, 0.0]], [[0.0, 0.0]]]}]},
            {"terms": [{"a": [[[1.0, 0.0]], [[-1.0, 0.0]]],
                        "b": [[[0.0, 0.0]], [[1.0, 0.0]]]}]},
        ]},
    },
}


def builtin_instance() -> Instance:
    return loads_instance(json.dumps(BUILTIN_EXAMPLE))


class _Timer:
    def __init__(self):
        self.stages = {}

    def stage(self, name):
        timer = self
        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()
            def __exit__(self, *exc):
                timer.stages[name] = time.perf_counter() - self.t0
        return _Ctx()


def _tolerances(instance: Instance | None, factor: float) -> dict:
    tols = dict(STAGE_TOLERANCES)
    if instance is not None:
        for key, value in instance.tolerances.items():
            if key in tols:
                tols[key] = float(value)
    return {k: v * factor for k, v in tols.items()}


def _resolve_instance(args) -> Instance | None:
    if getattr(args, "builtin", False):
        return builtin_instance()
    if getattr(args, "input", None):
        return load_instance(args.input)
    if getattr(args, "random", False):
        return None
    raise InputError("no instance given; use --input, --builtin or --random")


def _emit(report: dict, args) -> None:
    text = dump_report(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.json or not args.output:
        sys.stdout.write(text if args.json else _summary(report))


def _summary(report: dict) -> str:
    lines = [f"command: {report.get('command')}"]
    for stage in report.get("stages", []):
        status = "pass" if stage.get("pass") else "FAIL"
        worst = stage.get("max_residual")
        extra = f" (max residual {worst:.3e})" if isinstance(worst, float) else ""
        lines.append(f"  [{status}] {stage['name']}{extra}")
    lines.append("result: " + ("PASS" if report.get("pass") else "FAIL"))
    return "\n".join(lines) + "\n"


def _stage(name: str, residuals: dict, tol: float, **extra) -> dict:
    worst = max(residuals.values()) if residuals else 0.0
    stage = {"name": name, "residuals": residuals, "max_residual": worst,
             "tolerance": tol, "pass": worst <= tol}
    stage.update(extra)
    return stage


def _random_dilation_instance(args):
    rng = np.random.default_rng(args.rng_seed)
    a_alg = sampling.random_standard_algebra(rng, args.dims)
    b_alg = sampling.random_standard_algebra(rng, args.dims)
    return sampling.random_unital_cp_map(rng, a_alg, b_alg)


def cmd_dilate(args) -> int:
    instance = _resolve_instance(args)
    tols = _tolerances(instance, args.tol)
    timer = _Timer()
    data = None
    if instance is None:
        s = _random_dilation_instance(args)
        map_name = "random"
        seed = None
    else:
        map_name = args.map or instance.only_map_name()
        s = instance.cp_map(map_name)
        seed = None
        if args.seed_qons:
            with timer.stage("gns"):
                data = gns(s, tols["construct"])
            seed = instance.seed_elements(args.seed_qons, data)
    with timer.stage("dilate"):
        d = weak_tensor_dilation(s, seed_qons=seed, tol=tols["construct"],
                                 data=data)
    cert = d.certificate
    stage = _stage("dilation-certificate", cert.as_dict(), tols["verify"])
    report = {
        "schema": 1,
        "command": "dilate",
        "map": map_name,
        "dims": {"H_dim": d.gns_data.h_dim, "K_dim": d.k_dim,
                 "module_dim": int(d.gns_data.module_basis.shape[0])},
        "stages": [stage],
        "tolerances": tols,
        "pass": stage["pass"],
    }
    if args.emit_matrices:
        report["matrices"] = {
            "p_I": matrix_to_json(d.p_i_matrix),
            "j_on_basis": [matrix_to_json(m) for m in d.j_ops],
        }
    if args.timings:
        report["timings"] = timer.stages
    _emit(report, args)
    return 0 if report["pass"] else 2


def _context_from(args, instance: Instance | None, tols):
    if instance is None:
        rng = np.random.default_rng(args.rng_seed)
        return sampling.random_covariant_context(rng, args.dims), "random"
    name = args.context or instance.only_context_name()
    spec = instance.contexts[name]
    s = instance.cp_map(spec["map"])
    f = instance.states[spec["f"]][1]
    g = instance.states[spec["g"]][1]
    return build_context(s.source, s.target, s, f, g, tols["construct"]), name


def _check_hypotheses(ctx, stages) -> bool:
    """Record failed standing hypotheses; returns True when all hold."""
    problems = []
    if not ctx.covariant:
        problems.append({
            "name": "covariance",
            "residuals": {"covariance": ctx.covariance_residual},
            "max_residual": ctx.covariance_residual,
            "pass": False,
            "message": "states are not covariant for S",
        })
    if not ctx.f_cyclic_for_source:
        problems.append({"name": "cyclicity", "pass": False,
                         "message": "f not cyclic for A", "residuals": {}})
    if not ctx.g_cyclic_for_target_commutant:
        problems.append({"name": "cyclicity", "pass": False,
                         "message": "g not cyclic for B'", "residuals": {}})
    stages.extend(problems)
    return not problems


def cmd_dual(args) -> int:
    instance = _resolve_instance(args)
    tols = _tolerances(instance, args.tol)
    timer = _Timer()
    ctx, name = _context_from(args, instance, tols)
    stages = []
    report = {"schema": 1, "command": "dual", "context": name,
              "tolerances": tols, "stages": stages}
    hypotheses_hold = _check_hypotheses(ctx, stages)
    if not hypotheses_hold:
        report["pass"] = False
        _emit(report, args)
        return 2
    with timer.stage("dual"):
        s_prime = dual_map(ctx, tols["construct"])
    residuals = {
        "pairing": dual_pairing_residual(ctx, s_prime),
        "state_transport": state_transport_residual(ctx, s_prime),
    }
    if ctx.g_cyclic_for_target_commutant:
        with timer.stage("double-dual"):
            _, distance = double_dual(ctx, tols["construct"])
        residuals["double_dual_distance"] = distance
    stages.append(_stage("dual-map", residuals, tols["verify"]))
    report["dims"] = {"source_commutant_coords": ctx.target_commutant.coord_dim,
                      "target_commutant_coords": ctx.source_commutant.coord_dim}
    report["pass"] = all(s["pass"] for s in stages)
    if args.emit_matrices:
        report["matrices"] = {"dual_action": matrix_to_json(s_prime.action)}
    if args.timings:
        report["timings"] = timer.stages
    _emit(report, args)
    return 0 if report["pass"] else 2


def cmd_extend(args) -> int:
    instance = _resolve_instance(args)
    tols = _tolerances(instance, args.tol)
    timer = _Timer()
    ctx, name = _context_from(args, instance, tols)
    stages = []
    report = {"schema": 1, "command": "extend", "context": name,
              "tolerances": tols, "stages": stages}
    if not _check_hypotheses(ctx, stages):
        report["pass"] = False
        _emit(report, args)
        return 2
    with timer.stage("extend"):
        ext = extend_cp_map(ctx, tols["construct"])
    residuals = {
        "restriction": ext.restriction_residual,
        "state_transport": ext.covariance_residual,
        "kraus_reconstruction": ext.kraus.reconstruction_residual,
        "unitality": ext.kraus.completeness_residual,
        "choi_negativity": max(0.0, -ext.cpmap.choi_min_eigenvalue),
    }
    stages.append(_stage("extension", residuals, tols["verify"],
                         is_cp=ext.cpmap.is_cp, is_unital=ext.cpmap.is_unital))
    report["dims"] = {"L_dim": ext.l_dim}
    report["pass"] = all(s["pass"] for s in stages) and ext.cpmap.is_cp \
        and ext.cpmap.is_unital
    if args.emit_matrices:
        report["matrices"] = {"extension_action": matrix_to_json(ext.cpmap.action)}
    if args.timings:
        report["timings"] = timer.stages
    _emit(report, args)
    return 0 if report["pass"] else 2


def cmd_roundtrip(args) -> int:
    instance = _resolve_instance(args)
    tols = _tolerances(instance, args.tol)
    timer = _Timer()
    ctx, name = _context_from(args, instance, tols)
    stages = []
    report = {"schema": 1, "command": "roundtrip", "context": name,
              "tolerances": tols, "stages": stages}
    if not _check_hypotheses(ctx, stages):
        report["pass"] = False
        _emit(report, args)
        return 2
    with timer.stage("pipeline"):
        s_prime = dual_map(ctx, tols["construct"])
        d_prime = weak_tensor_dilation(s_prime, tol=tols["construct"])
        ext = extension_from_dilation(ctx, s_prime, d_prime, tols["construct"])
    with timer.stage("back"):
        d_back = dilation_from_extension(ctx, ext.cpmap, tols["construct"],
                                         s_prime=s_prime)
        ext_back = extension_from_dilation(ctx, s_prime, d_back, tols["construct"])
    choi_distance = float(np.linalg.norm(
        ext_back.cpmap.choi_blocks[0] - ext.cpmap.choi_blocks[0]))
    residuals = {
        "choi_roundtrip": choi_distance,
        "recovered_certificate": d_back.certificate.max_residual,
    }
    dims_match = d_back.k_dim == ext.kraus.l_dim
    stages.append(_stage("roundtrip", residuals, tols["roundtrip"],
                         minimal=is_minimal_dilation(s_prime, d_back,
                                                     tols["construct"]),
                         l_dims_match=dims_match))
    report["dims"] = {"L_forward": ext.l_dim, "L_back": d_back.k_dim}
    report["pass"] = all(s["pass"] for s in stages) and dims_match
    if args.timings:
        report["timings"] = timer.stages
    _emit(report, args)
    return 0 if report["pass"] else 2


def cmd_paper_example(args) -> int:
    """Full reproduction of the embedded worked example."""
    instance = builtin_instance()
    tols = _tolerances(instance, args.tol)
    golden_tol = tols["golden"]
    timer = _Timer()
    s = instance.cp_map("S")
    stages = []

    with timer.stage("gns"):
        data = gns(s, tols["construct"])
    # Gram of {p_i ⊗ e_j} is one-half times the identity on four dimensions.
    gram_residual = 0.0 if data.h_dim == 4 else 1.0
    gram_residual = max(gram_residual,
                        float(np.max(np.abs(data.gram_eigenvalues - 0.5))))
    stages.append(_stage("gns-gram", {"gram": gram_residual}, golden_tol,
                         H_dim=data.h_dim))

    # inner-product formula <x,y> = p1 S(x1* y1) + p2 S(x2* y2)
    a_alg, b_alg = s.source, s.target
    rng = np.random.default_rng(0)
    formula_residual = 0.0
    from .vnmodule import module_element
    for _ in range(4):
        xs = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        x1 = element(a_alg, [np.array([[xs[0]]]), np.array([[xs[1]]])])
        x2 = element(a_alg, [np.array([[xs[2]]]), np.array([[xs[3]]])])
        y1 = element(a_alg, [np.array([[xs[3]]]), np.array([[xs[0]]])])
        y2 = element(a_alg, [np.array([[xs[1]]]), np.array([[xs[2]]])])
        p1 = element(b_alg, [np.array([[1.0]]), np.array([[0.0]])])
        p2 = element(b_alg, [np.array([[0.0]]), np.array([[1.0]])])
        x = module_element(data, x1, p1) + module_element(data, x2, p2)
        y = module_element(data, y1, p1) + module_element(data, y2, p2)
        got = inner_product(data, x, y, tols["construct"])
        expected = p1 @ apply(s, x1.adjoint() @ y1) + p2 @ apply(s, x2.adjoint() @ y2)
        formula_residual = max(formula_residual, (got - expected).norm())
    stages.append(_stage("inner-product-formula",
                         {"formula": formula_residual}, golden_tol))

    seed = None
    if not args.no_seed:
        seed = instance.seed_elements("standard", data)
    with timer.stage("qons"):
        system = qons(data, seed, tols["construct"])
    qons_res = {"relations": system.relation_residual,
                "completeness": system.completeness_residual}
    if not args.no_seed:
        p_expected = [np.array([1.0, 1.0]), np.array([1.0, 0.0]),
                      np.array([0.0, 1.0])]
        proj_res = 0.0
        for p, expected in zip(system.projections, p_expected, strict=True):
            got = np.array([p.block_matrices[0][0, 0].real,
                            p.block_matrices[1][0, 0].real])
            proj_res = max(proj_res, float(np.max(np.abs(got - expected))))
        qons_res["projections"] = proj_res
    stages.append(_stage("qons", qons_res, golden_tol, size=len(system)))

    with timer.stage("dilate"):
        d = weak_tensor_dilation(s, seed_qons=seed, tol=tols["construct"])
    cert = d.certificate
    dil_res = dict(cert.as_dict())
    if not args.no_seed:
        p_i_expected = np.diag([1.0, 1.0, 1.0, 0.0, 0.0, 1.0]).astype(complex)
        dil_res["p_I_golden"] = float(np.max(np.abs(d.p_i_matrix - p_i_expected)))
        golden = 0.0
        corner = 0.0
        for a1, a2 in [(1.0, 0.0), (0.0, 1.0), (0.75, -0.25)]:
            a = element(a_alg, [np.array([[a1]]), np.array([[a2]])])
            got = d.j(a)
            expected = _expected_worked_matrix(a1, a2)
            golden = max(golden, float(np.max(np.abs(got - expected))))
            block_10 = got.reshape(3, 2, 3, 2)[1, :, 0, :]
            corner = max(corner, float(np.max(np.abs(
                block_10 - 0.5 * (a1 - a2) * np.diag([1.0, 0.0])))))
        dil_res["j_golden"] = golden
        dil_res["j_block_10"] = corner
    else:
        dil_res["note_matrix_equality_skipped"] = 0.0
    stages.append(_stage("dilation", dil_res, golden_tol, K_dim=d.k_dim))

    report = {"schema": 1, "command": "paper-example",
              "seeded": not args.no_seed, "tolerances": tols,
              "stages": stages, "pass": all(st["pass"] for st in stages)}
    if args.no_seed:
        report["note"] = "matrix-equality checks skipped without the seed"
    if args.timings:
        report["timings"] = timer.stages
    _emit(report, args)
    return 0 if report["pass"] else 2


def _expected_worked_matrix(a1: float, a2: float) -> np.ndarray:
    s = 0.5 * (a1 + a2)
    t = 0.5 * (a1 - a2)
    p1 = np.diag([1.0, 0.0])
    p2 = np.diag([0.0, 1.0])
    eye = np.eye(2)
    zero = np.zeros((2, 2))
    return np.block([[s * eye, t * p1, t * p2],
                     [t * p1, s * p1, zero],
                     [t * p2, zero, s * p2]]).astype(complex)


def cmd_verify(args) -> int:
    instance = _resolve_instance(args)
    if instance is None:
        raise InputError("verify needs --input or --builtin")
    tols = _tolerances(instance, args.tol)
    stages = []
    ok = True
    for name, s in instance.cp_maps.items():
        stages.append({"name": f"cp_map:{name}", "is_cp": s.is_cp,
                       "is_unital": s.is_unital,
                       "choi_min_eigenvalue": s.choi_min_eigenvalue,
                       "residuals": {}, "pass": bool(s.is_cp)})
        ok = ok and s.is_cp
    for name, spec in instance.contexts.items():
        s = instance.cp_map(spec["map"])
        f = instance.states[spec["f"]][1]
        g = instance.states[spec["g"]][1]
        ctx = build_context(s.source, s.target, s, f, g, tols["construct"])
        messages = []
        if not ctx.covariant:
            messages.append("states are not covariant for S")
        if not ctx.f_cyclic_for_source:
            messages.append("f not cyclic for A")
        if not ctx.g_cyclic_for_target_commutant:
            messages.append("g not cyclic for B'")
        stages.append({"name": f"context:{name}",
                       "residuals": {"covariance": ctx.covariance_residual},
                       "covariant": ctx.covariant,
                       "f_cyclic_for_A": ctx.f_cyclic_for_source,
                       "g_cyclic_for_B_commutant": ctx.g_cyclic_for_target_commutant,
                       "messages": messages, "pass": not messages})
        ok = ok and not messages
    report = {"schema": 1, "command": "verify", "stages": stages, "pass": ok,
              "tolerances": tols}
    _emit(report, args)
    return 0 if ok else 2


def _add_common(parser, random_ok=True):
    parser.add_argument("--input", help="instance file (JSON)")
    parser.add_argument("--builtin", action="store_true",
                        help="use the embedded worked example instance")
    parser.add_argument("--output", help="write the JSON report to a file")
    parser.add_argument("--json", action="store_true",
                        help="print the JSON report to stdout")
    parser.add_argument("--tol", type=float, default=1.0,
                        help="scale factor applied to all stage tolerances")
    parser.add_argument("--timings", action="store_true",
                        help="include wall-clock timings (non-deterministic)")
    parser.add_argument("--emit-matrices", action="store_true",
                        help="include result matrices in the report")
    if random_ok:
        parser.add_argument("--random", action="store_true",
                            help="generate a random instance")
        parser.add_argument("--dims", type=int, default=4,
                            help="maximum ambient dimension for --random")
        parser.add_argument("--rng-seed", type=int, default=0,
                            help="seed for --random")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpdilate",
        description="weak tensor dilations and covariant extensions of CP maps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dilate", help="construct and verify a weak tensor dilation")
    _add_common(p)
    p.add_argument("--map", help="name of the CP map in the instance file")
    p.add_argument("--seed-qons", help="name of a seed family in the instance file")
    p.set_defaults(func=cmd_dilate)

    p = sub.add_parser("dual", help="compute and verify the dual CP map")
    _add_common(p)
    p.add_argument("--context", help="name of the context in the instance file")
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("extend", help="extend a CP map to the full algebras")
    _add_common(p)
    p.add_argument("--context", help="name of the context in the instance file")
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("roundtrip", help="extension/dilation round trips")
    _add_common(p)
    p.add_argument("--context", help="name of the context in the instance file")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("paper-example",
                       help="reproduce the embedded worked example end to end")
    _add_common(p, random_ok=False)
    p.add_argument("--no-seed", action="store_true",
                   help="run with the default seed; skip matrix-equality checks")
    p.set_defaults(func=cmd_paper_example)

    p = sub.add_parser("verify", help="validate an instance file and its flags")
    _add_common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except (NotCovariant, NotCyclic) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 2
    except CpdilateError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
