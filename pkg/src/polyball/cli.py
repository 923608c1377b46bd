"""Command-line front end: verification suites and pipelines over JSON inputs.

Exit codes: 0 all checks pass, 1 a verification failed, 2 bad input,
3 a resource cap was hit.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .ball import DEFAULT_R_GRID, OperatorTuple, box_defect, check_membership, purity_report
from .berezin import (NotAMemberError, TailNotCertified, build_kernel, berezin_transform,
                      functional_calculus_poly, gram_tail, intertwining_residual,
                      kernel_contraction_defect, poly_transform_tail, radial_calculus,
                      truncation_for_tail)
from .fock import ShiftFamily, doubly_commuting_defect, row_isometry_defect, vacuum_defect_residual
from .hardy import (FormalSeries, cesaro, coefficient_uniqueness_check, fourier_extract,
                    monotonicity_violation, q_projection, radial_norms, series_to_matrix, tail_bound)
from .io import InputError, dump_matrix, load_series, load_tuple, load_twist, read_json, write_json
from .models import (CharFnNotAdmitted, PreconditionError, characteristic_function, cnc_model_space,
                     model_space, unitary_invariance_experiment)
from .numerics import DEFAULT_TOLERANCES, IndefiniteError, Tolerances, operator_norm, random_unitary
from .twist import TwistError, TwistSpec
from .words import DEFAULT_SIZE_CAP, ResourceCapError, TruncatedBasis, compositions

SCHEMA = "polyball-report/1"
EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3


@dataclass
class RunConfig:
    N: int | None = None
    tol: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)
    r_grid: tuple[float, ...] = DEFAULT_R_GRID
    seed: int = 0
    p_max: int = 200
    box: tuple[int, ...] | None = None
    size_cap: int = DEFAULT_SIZE_CAP
    output: str | None = None
    dump: bool = False

    def truncation(self, default: int) -> int:
        return default if self.N is None else self.N


class VerificationFailure(Exception):
    pass


# -- argument parsing ---------------------------------------------------------

def parse_tol(items: Sequence[str]) -> Tolerances:
    overrides = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--tol expects name=value, got {item!r}")
        try:
            overrides[name.strip()] = float(value)
        except ValueError as exc:
            raise InputError(f"bad tolerance value {value!r}") from exc
    try:
        return DEFAULT_TOLERANCES.with_overrides(**overrides)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def parse_r_grid(text: str) -> tuple[float, ...]:
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise InputError(f"--r-grid expects a:b:step, got {text!r}") from exc
    if step <= 0 or a < 0 or b >= 1 or a > b:
        raise InputError("--r-grid needs 0 <= a <= b < 1 and step > 0")
    count = int(np.floor((b - a) / step + 1e-9)) + 1
    return tuple(float(np.round(a + j * step, 12)) for j in range(count))


def parse_box(text: str) -> tuple[int, ...]:
    try:
        box = tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise InputError(f"--box expects p1,...,pk, got {text!r}") from exc
    if any(p < 1 for p in box):
        raise InputError("box exponents must be positive")
    return box


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-N", "--truncation", type=int, default=None,
                        help="total word length of the truncation")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                        help="override a tolerance (repeatable)")
    common.add_argument("--r-grid", default=None, metavar="A:B:STEP")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--p-max", type=int, default=200, help="iterations for purity decay")
    common.add_argument("--box", default=None, metavar="P1,...,PK", help="box for the c.n.c. test")
    common.add_argument("--size-cap", type=int, default=DEFAULT_SIZE_CAP)
    common.add_argument("--dump-matrices", action="store_true")
    common.add_argument("--output", "-o", default=None, help="write the JSON report here")

    parser = argparse.ArgumentParser(prog="polyball", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("shifts-verify", parents=[common], help="check the shift relations for a twist")
    p.add_argument("twist_file")
    for name, helptext in [("membership", "polyball membership report"),
                           ("berezin", "Berezin kernel checks"),
                           ("charfn", "characteristic function and model"),
                           ("invariance", "unitary invariance of the characteristic function"),
                           ("report-all", "run every suite on a tuple")]:
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("tuple_file")
    p = sub.add_parser("calculus", parents=[common], help="functional calculus checks")
    p.add_argument("tuple_file")
    p.add_argument("series_file")
    p = sub.add_parser("hardy", parents=[common], help="Fourier and Cesaro checks for a series")
    p.add_argument("series_file")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.truncation is not None and args.truncation < 0:
        raise InputError("truncation must be non-negative")
    if args.p_max < 1:
        raise InputError("--p-max must be positive")
    return RunConfig(
        N=args.truncation,
        tol=parse_tol(args.tol),
        r_grid=parse_r_grid(args.r_grid) if args.r_grid else DEFAULT_R_GRID,
        seed=args.seed,
        p_max=args.p_max,
        box=parse_box(args.box) if args.box else None,
        size_cap=args.size_cap,
        output=args.output,
        dump=args.dump_matrices,
    )


# -- commands -----------------------------------------------------------------

def _basis(n, N: int, cfg: RunConfig) -> TruncatedBasis:
    return TruncatedBasis(n, N, size_cap=cfg.size_cap)


def cmd_shifts_verify(cfg: RunConfig, spec: TwistSpec) -> dict:
    N = cfg.truncation(4)
    basis = _basis(spec.n, N, cfg)
    fam = ShiftFamily(basis, spec)
    rows = {str(i): row_isometry_defect(basis, spec, i, fam) for i in range(1, spec.k + 1)}
    doubly = doubly_commuting_defect(basis, spec, fam)
    vac = vacuum_defect_residual(fam)
    worst_doubly = max((max(v.values()) for v in doubly.values()), default=0.0)
    tol = cfg.tol.shift
    checks = {
        "row_isometry": max(rows.values()) <= tol,
        "doubly_commuting": worst_doubly <= tol,
        "vacuum_defect": vac <= tol,
    }
    return {"N": N, "basis_size": basis.size, "row_isometry_defect": rows,
            "doubly_commuting_defect": doubly, "vacuum_defect_residual": vac, "checks": checks}


def cmd_membership(cfg: RunConfig, T: OperatorTuple, spec: TwistSpec) -> dict:
    rep = check_membership(T, spec, cfg.r_grid, cfg.tol, cfg.p_max, cfg.box)
    out = rep.as_dict()
    out["checks"] = {"member": rep.is_member}
    return out


def _box_identity_residual(T: OperatorTuple, K, N: int) -> float:
    """Largest gap between the box defect and the kernel word sum over boxes inside the truncation."""
    basis = K.basis
    lengths = np.array([[len(w) for w in beta] for beta in basis])
    worst = 0.0
    for total in range(T.k, N + T.k + 1):
        for box in compositions(total - T.k, T.k):
            p = tuple(b + 1 for b in box)
            if sum(q - 1 for q in p) > N:
                continue
            rows = np.all(lengths < np.array(p), axis=1)
            sel = np.repeat(rows, K.m)
            word_sum = K.matrix[sel].conj().T @ K.matrix[sel]
            worst = max(worst, operator_norm(box_defect(T, p) - word_sum))
    return worst


def cmd_berezin(cfg: RunConfig, T: OperatorTuple, spec: TwistSpec) -> dict:
    N = cfg.truncation(4)
    basis = _basis(T.n, N, cfg)
    K = build_kernel(T, basis, cfg.tol.eps_rank)
    fam = ShiftFamily(basis, spec)
    contraction = kernel_contraction_defect(K)
    inter = intertwining_residual(T, K, fam)
    box = _box_identity_residual(T, K, N)
    pure = purity_report(T, cfg.p_max, cfg.tol.purity).is_pure
    curve = [gram_tail(T, M) for M in range(N + 1)]
    checks = {
        "contraction": contraction <= cfg.tol.kernel,
        "intertwining": inter <= cfg.tol.intertwining,
        "box_identity": box <= cfg.tol.intertwining * 10,
    }
    if pure:
        checks["gram_tail_monotone"] = all(b <= a + 1e-15 for a, b in zip(curve, curve[1:]))
    out = {"N": N, "rank_D": K.m, "kernel_norm_excess": contraction, "intertwining_residual": inter,
           "box_identity_residual": box, "is_pure": pure, "gram_tail_curve": curve, "checks": checks}
    if cfg.dump:
        out["kernel"] = dump_matrix(K.matrix)
    return out


def required_truncation(T: OperatorTuple, series: FormalSeries, target: float, N_from: int,
                        size_cap: int, r: float = 1.0, span: int = 40) -> int | None:
    from .words import basis_size
    for N in range(N_from, N_from + span + 1):
        if basis_size(T.n, N) > size_cap:
            return None
        if poly_transform_tail(T, series, N, r) <= target:
            return N
    return None


def cmd_calculus(cfg: RunConfig, T: OperatorTuple, spec: TwistSpec, series: FormalSeries) -> dict:
    if series.n != T.n:
        raise InputError("series and tuple arities differ")
    if cfg.N is None:
        # smallest truncation that certifies the transform tail, if one fits
        N = required_truncation(T, series, cfg.tol.calculus, max(series.max_grade, 0), cfg.size_cap)
        N = max(4, series.max_grade) if N is None else N
    else:
        N = cfg.N
    basis = _basis(T.n, N, cfg)
    K = build_kernel(T, basis, cfg.tol.eps_rank)
    out: dict = {"N": N}
    checks = {}
    deficits: dict[int, float] = {}
    A = series_to_matrix(series, basis, spec)
    exact = functional_calculus_poly(T, series)
    transform = berezin_transform(K, A)
    gap = operator_norm(transform - exact)
    tail = poly_transform_tail(T, series, N, 1.0, deficits)
    out["polynomial"] = {"discrepancy": gap, "certified_tail": tail}
    checks["polynomial"] = gap <= tail + cfg.tol.calculus
    radial = {}
    ok_radial = True
    for r in cfg.r_grid:
        if r >= 1:
            continue
        try:
            res = radial_calculus(T, series, r, tail_tol=cfg.tol.tail_slack)
        except TailNotCertified as exc:
            radial[f"{r:g}"] = {"error": str(exc)}
            ok_radial = False
            continue
        Ar = series_to_matrix(series, basis, spec, r)
        path2 = berezin_transform(K, Ar)
        tail_r = poly_transform_tail(T, series, N, r, None)
        diff = operator_norm(res.value - path2)
        bound = cfg.tol.calculus + tail_r + res.tail_bound
        radial[f"{r:g}"] = {"discrepancy": diff, "bound": bound, "grade": res.grade}
        ok_radial = ok_radial and diff <= bound
    out["radial"] = radial
    checks["radial"] = ok_radial
    if tail > cfg.tol.calculus:
        need = required_truncation(T, series, cfg.tol.calculus, N, cfg.size_cap)
        out["required_N"] = need
        checks["tail_certified"] = False
    else:
        checks["tail_certified"] = True
    out["checks"] = checks
    return out


def cmd_hardy(cfg: RunConfig, series: FormalSeries, spec: TwistSpec | None = None) -> dict:
    spec = spec or TwistSpec.trivial(series.n)
    N = cfg.truncation(max(4, series.max_grade))
    basis = _basis(series.n, N, cfg)
    A = series_to_matrix(series, basis, spec)
    back = fourier_extract(A, basis, spec)
    trunc = series.truncated(N)
    roundtrip = max((abs(back.coefficient(b) - trunc.coefficient(b)) for b in basis), default=0.0)
    bands = [q_projection(A, m, basis) for m in range(-N, N + 1)]
    band_sum = float(np.abs(sum(bands) - A).max(initial=0.0))
    wrong_band = 0.0
    for m, Qm in zip(range(-N, N + 1), bands):
        # analytic grade-p pieces live in band -p
        p = -m
        if p < 0:
            wrong_band = max(wrong_band, float(np.abs(Qm).max(initial=0.0)))
        else:
            target = series_to_matrix(FormalSeries(series.n, series.grade_slice(p)), basis, spec)
            wrong_band = max(wrong_band, float(np.abs(Qm - target).max(initial=0.0)))
    ces = {str(n): operator_norm(cesaro(A, n, basis)) for n in (1, 2, 4, 8)}
    grid = [r for r in cfg.r_grid if r < 1]
    norms = radial_norms(series, basis, spec, grid)
    violation = monotonicity_violation(norms)
    unique = coefficient_uniqueness_check(series.truncated(N), [0.5, 0.9], basis, spec) if N >= 0 else True
    checks = {
        "fourier_roundtrip": roundtrip <= 1e-12,
        "band_decomposition": band_sum <= 1e-12 and wrong_band <= 1e-12,
        "radial_monotone": violation <= 1e-10,
        "coefficient_uniqueness": bool(unique),
    }
    return {"N": N, "roundtrip_error": roundtrip, "band_sum_error": band_sum, "band_error": wrong_band,
            "band_convention": "analytic grade p sits in band m = -p",
            "cesaro_norms": ces, "radial_norms": {f"{r:g}": v for r, v in norms.items()},
            "radial_monotonicity_violation": violation,
            "tail_bounds": {f"{r:g}": tail_bound(series, r, N) for r in grid},
            "checks": checks}


def _charfn_truncation(T: OperatorTuple, cfg: RunConfig) -> int:
    if cfg.N is not None:
        return cfg.N
    return truncation_for_tail(T, 1e-12, size_cap=cfg.size_cap,
                               floor=cfg.tol.range_floor)


def cmd_charfn(cfg: RunConfig, T: OperatorTuple, spec: TwistSpec) -> dict:
    N = _charfn_truncation(T, cfg)
    basis = _basis(T.n, N, cfg)
    fam = ShiftFamily(basis, spec)
    try:
        cf = characteristic_function(T, basis, spec, cfg.tol, fam, cfg.p_max)
    except CharFnNotAdmitted as exc:
        return {"N": N, "admits": False, "admits_least_eig": exc.least_eig, "checks": {"admits": False}}
    out = cf.as_dict(dump=cfg.dump)
    out["admits"] = True
    tol = cfg.tol.model
    checks = {
        "admits": True,
        "factorization": cf.factorization_residual <= tol,
        "multi_analyticity": cf.multi_analytic_residual <= tol,
    }
    pure_model = None
    if cf.is_pure:
        checks["inner"] = cf.partial_isometry_defect <= tol
        try:
            pure_model = model_space(T, cf, cfg.tol, fam)
            out["model"] = pure_model.as_dict()
            checks["model_projection"] = pure_model.projection_residual <= tol
            checks["model_compression"] = pure_model.compression_residual <= tol
        except PreconditionError as exc:
            out["model"] = {"error": str(exc)}
            checks["model_projection"] = False
    try:
        cnc = cnc_model_space(T, cf, cfg.tol, fam, cfg.box, pure_model)
        out["cnc_model"] = cnc.as_dict()
        checks["cnc_model"] = (cnc.isometry_residual <= tol and cnc.gamma_isometry_residual <= tol
                               and cnc.intertwining_residual <= tol)
    except PreconditionError as exc:
        out["cnc_model"] = {"error": str(exc)}
    out["checks"] = checks
    return out


def cmd_invariance(cfg: RunConfig, T: OperatorTuple, spec: TwistSpec) -> dict:
    N = _charfn_truncation(T, cfg)
    basis = _basis(T.n, N, cfg)
    fam = ShiftFamily(basis, spec)
    rng = np.random.default_rng(cfg.seed)
    try:
        cf = characteristic_function(T, basis, spec, cfg.tol, fam, cfg.p_max)
    except CharFnNotAdmitted as exc:
        return {"N": N, "admits": False, "admits_least_eig": exc.least_eig, "checks": {"admits": False}}
    identity = unitary_invariance_experiment(T, np.eye(T.d), basis, spec, cfg.tol, fam, cf)
    W = random_unitary(T.d, rng)
    rand = unitary_invariance_experiment(T, W, basis, spec, cfg.tol, fam, cf)
    checks = {"identity": identity["residual"] <= 1e-13, "random": rand["residual"] <= cfg.tol.model}
    out = {"N": N, "identity": identity, "random": rand, "checks": checks}
    if cfg.dump:
        out["W"] = dump_matrix(W)
    return out


def _default_series(n: Sequence[int], grade: int = 2) -> FormalSeries:
    """Sum of every monomial of total grade at most ``grade``, coefficient 1."""
    basis = TruncatedBasis(n, grade)
    return FormalSeries(n, [(beta, 1.0) for beta in basis])


def cmd_report_all(cfg: RunConfig, T: OperatorTuple, spec: TwistSpec) -> dict:
    sections: dict[str, Callable[[], dict]] = {
        "shift_relations": lambda: cmd_shifts_verify(cfg, spec),
        "membership": lambda: cmd_membership(cfg, T, spec),
        "berezin_kernel": lambda: cmd_berezin(cfg, T, spec),
        "functional_calculus": lambda: cmd_calculus(cfg, T, spec, _default_series(T.n)),
        "hardy_series": lambda: cmd_hardy(cfg, _default_series(T.n), spec),
        "characteristic_function": lambda: cmd_charfn(cfg, T, spec),
        "unitary_invariance": lambda: cmd_invariance(cfg, T, spec),
    }
    results, matrix = {}, {}
    for name, run in sections.items():
        try:
            res = run()
        except (PreconditionError, NotAMemberError, IndefiniteError, ResourceCapError) as exc:
            res = {"error": f"{type(exc).__name__}: {exc}", "checks": {"ran": False}}
        results[name] = res
        matrix[name] = {key: bool(val) for key, val in res.get("checks", {}).items()}
    return {"pass_matrix": matrix, "sections": results}


# -- entry point ----------------------------------------------------------------

def _all_pass(report: dict) -> bool:
    if "pass_matrix" in report:
        return all(all(v.values()) for v in report["pass_matrix"].values())
    return all(report.get("checks", {}).values())


def run(argv: Sequence[str] | None = None) -> tuple[int, dict, str | None]:
    """Parse ``argv``, run one command and return ``(exit_code, report, output_path)``."""
    args = build_parser().parse_args(argv)
    header = {"schema": SCHEMA, "command": args.command}
    try:
        cfg = config_from_args(args)
    except InputError as exc:
        return EXIT_INPUT, {**header, "error": str(exc), "exit_code": EXIT_INPUT}, args.output
    header.update({"seed": cfg.seed, "N": cfg.N, "tolerances": cfg.tol.as_dict()})
    try:
        body = _dispatch(args, cfg)
        code = EXIT_PASS if _all_pass(body) else EXIT_FAIL
    except (InputError, TwistError) as exc:
        body, code = {"error": str(exc)}, EXIT_INPUT
    except ResourceCapError as exc:
        body, code = {"error": str(exc)}, EXIT_CAP
    except (NotAMemberError, IndefiniteError, PreconditionError) as exc:
        body, code = {"error": f"{type(exc).__name__}: {exc}"}, EXIT_FAIL
    report = {**header, **body, "exit_code": code}
    return code, report, cfg.output


def _dispatch(args: argparse.Namespace, cfg: RunConfig) -> dict:
    cmd = args.command
    if cmd == "shifts-verify":
        return cmd_shifts_verify(cfg, load_twist(read_json(args.twist_file)))
    if cmd == "hardy":
        obj = read_json(args.series_file)
        return cmd_hardy(cfg, load_series(obj), load_twist(obj))
    T, spec = load_tuple(read_json(args.tuple_file))
    if cmd == "calculus":
        return cmd_calculus(cfg, T, spec, load_series(read_json(args.series_file)))
    handlers = {"membership": cmd_membership, "berezin": cmd_berezin, "charfn": cmd_charfn,
                "invariance": cmd_invariance, "report-all": cmd_report_all}
    return handlers[cmd](cfg, T, spec)


def main(argv: Sequence[str] | None = None) -> int:
    code, report, output = run(argv)
    text = write_json(report, output)
    if output is None:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
