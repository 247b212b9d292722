"""Run scenario tasks and write CSV + JSON sidecar outputs."""
from concurrent.futures import ProcessPoolExecutor
import json
import logging
import math
from pathlib import Path

import numpy as np

from . import __version__
from .baths import BathSpec
from .dynamics import (
    analytic_rates,
    fit_decay_rate,
    impurity_setup,
    plus_state,
    slowest_rate,
    steady_state,
)
from .effh.dressing import kappa_equal, kappa_pair, xi
from .effh.effective import (
    CouplingTerm,
    build_chain_effective,
    effective_operator,
    factorized_polaron_demo,
    pauli_coefficient,
)
from .exceptions import EffhError, NumericError
from .operators import expect, gibbs_state, partial_trace, pauli
from .rc import build_rc_system, converged_rc_equilibrium, impurity_model, rc_equilibrium

log = logging.getLogger(__name__)


class TaskError(EffhError):
    """An engine failure, tagged with the scenario point that caused it."""

    def __init__(self, point, cause):
        self.point = point
        self.cause = cause
        desc = ", ".join(f"{k}={v!r}" for k, v in sorted(point.items()) if not isinstance(v, list))
        super().__init__(f"failed at point ({desc}): {type(cause).__name__}: {cause}")

    def __reduce__(self):
        return (type(self), (self.point, self.cause))


def _fmt(value):
    if isinstance(value, str):
        return value
    return format(float(value) + 0.0, ".12g")  # + 0.0 folds -0.0 into 0.0


def write_csv(path, header, rows):
    """Write rows with 12 significant digits; refuses NaN or infinite values."""
    lines = [",".join(header)]
    for row in rows:
        for name, v in zip(header, row):
            if not isinstance(v, str) and not math.isfinite(float(v)):
                raise NumericError(f"non-finite value in column {name} of {path.name}: row {row}")
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _impurity_baths(p):
    common = (p["omega"], p["gamma"], p["cutoff"], p["temperature"])
    return (BathSpec(p["lambda_z"], *common, coupling_label="z"),
            BathSpec(p["lambda_x"], *common, coupling_label="x"))


# --- per-point workers (top level so they pickle) ------------------------------------

def _kappa_point(p, sc):
    kz, kx = kappa_pair(p["lambda_z"] / p["omega"], p["lambda_x"] / p["omega"], sc.quadrature)
    return {"row": [p["lambda_z"], p["lambda_x"], kz, kx]}


def _xi_point(p, sc):
    eps = p["epsilon"] if "epsilon" in sc.sweep or p["lambda"] == 0 else p["lambda"] / p["omega"]
    return {"row": [eps, kappa_equal(eps), xi(eps, sc.quadrature)]}


def _equilibrium_point(p, sc):
    bz, bx = _impurity_baths(p)
    beta = 1.0 / p["temperature"]
    row = [p["lambda_z"], p["lambda_x"], p["temperature"]]
    achieved = None
    for m in sc.methods:
        if m == "uw":
            rho = gibbs_state(p["delta"] * pauli("z"), beta)
        elif m == "effh":
            rho = impurity_setup("effh", p["delta"], bz, bx, quad=sc.quadrature).equilibrium
        else:
            model = impurity_model(p["delta"], bz, bx)
            if p["rc_levels"] == "auto":
                res = converged_rc_equilibrium(model, beta)
                rho, achieved = res.rho, res.truncation_m
            else:
                achieved = p["rc_levels"]
                rho = rc_equilibrium(build_rc_system(model, achieved), beta)
        row += [expect(rho, pauli("z")), expect(rho, pauli("x"))]
    if "rc" in sc.methods:
        row.append(achieved)
    return {"row": row, "rc_levels": achieved}


def _dynamics_point(p, sc):
    bz, bx = _impurity_baths(p)
    times = np.linspace(0.0, sc.t_max, sc.n_points)
    out = {}
    for m in sc.methods:
        setup = impurity_setup(m, p["delta"], bz, bx, m_levels=_fixed_levels(p),
                               quad=sc.quadrature)
        traj = setup.run(plus_state(), times, method=sc.propagator)
        out[m] = {
            "rows": [[t, a, b] for t, a, b in
                     zip(times, traj.observables["sz"], traj.observables["sx"])],
            "positivity_flag": traj.positivity_flag,
            "min_eigenvalue": traj.min_eigenvalue,
        }
    return out


def _fixed_levels(p):
    m = p["rc_levels"]
    return 4 if m == "auto" else m


def _rates_point(p, sc):
    bz, bx = _impurity_baths(p)
    kz, kx = kappa_pair(bz.epsilon, bx.epsilon, sc.quadrature)
    g_eff, _ = analytic_rates(kz, kx, p["delta"], bx)
    m_levels = _fixed_levels(p)
    setup = impurity_setup("rc", p["delta"], bz, bx, m_levels=m_levels)
    ss = partial_trace(steady_state(setup.generator), setup.factor_dims, [0])
    eq = expect(ss, pauli("z"))
    slow = slowest_rate(setup.generator)
    t_max = sc.t_max if sc.t_max is not None else 10.0 / slow
    traj = setup.run(plus_state(), np.linspace(0.0, t_max, max(sc.n_points, 4001)))
    g_rc, r2 = fit_decay_rate(traj, eq)
    return {"row": [p["lambda_x"], p["lambda_z"], kz, kx, g_eff, g_rc],
            "rc_levels": m_levels, "fit_r2": r2, "t_max": t_max}


def _chain_point(p, sc):
    n = p["n_spins"]
    deltas = p.get("deltas", p["delta"])
    model = build_chain_effective(n, deltas, p["lambda"], p["omega"], sc.quadrature,
                                  p["gamma"], p["cutoff"], p["temperature"])
    info = model.info
    bond = -4 * p["lambda"] ** 2 / p["omega"] * info["xi"]
    energies = np.linalg.eigvalsh(model.h_s_eff)
    return {"row": [p["lambda"], p["omega"], info["epsilon"], info["kappa"],
                    info["splitting_factor"], info["xi"], bond, energies[0], energies[1]]}


def _demo_point(p, sc):
    sz, sx = pauli("z"), pauli("x")
    s1 = (sz + sx) / math.sqrt(2.0)
    h = p["delta"] * sz
    e1, e2 = p["eps1"], p["eps2"]
    a = factorized_polaron_demo("one_then_two", s1, sx, e1, e2, h)
    b = factorized_polaron_demo("two_then_one", s1, sx, e1, e2, h)
    fwd = effective_operator(h, [CouplingTerm(e1, s1), CouplingTerm(e2, sx)], sc.quadrature)
    rev = effective_operator(h, [CouplingTerm(e2, sx), CouplingTerm(e1, s1)], sc.quadrature)

    def zx(op):
        return [pauli_coefficient(op, "z").real, pauli_coefficient(op, "x").real]

    return {"row": [e1, e2, *zx(a), *zx(b), *zx(fwd),
                    float(np.linalg.norm(a - b)), float(np.max(np.abs(fwd - rev)))]}


WORKERS = {
    "kappa_scan": _kappa_point,
    "xi_scan": _xi_point,
    "equilibrium": _equilibrium_point,
    "dynamics": _dynamics_point,
    "rates_table": _rates_point,
    "chain_build": _chain_point,
    "nonuniqueness_demo": _demo_point,
}


def _evaluate(args):
    task, point, sc = args
    try:
        return WORKERS[task](point, sc)
    except EffhError as exc:
        raise TaskError(point, exc) from exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise TaskError(point, exc) from exc


def _map(points, sc, jobs):
    args = [(sc.task, p, sc) for p in points]
    if jobs <= 1 or len(points) <= 1:
        return [_evaluate(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_evaluate, args))  # map preserves grid order


def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def run(sc, out_dir, jobs=1):
    """Execute ``sc``; returns the list of files written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    points = sc.points()
    results = _map(points, sc, jobs)
    written = []
    meta = {
        "task": sc.task,
        "model": sc.model,
        "methods": list(sc.methods),
        "parameters": sc.parameters,
        "sweep": sc.sweep,
        "sweep_mode": sc.sweep_mode,
        "n_points_grid": len(points),
        "quadrature": {"gh_order": sc.quadrature.gh_order,
                       "theta_points": sc.quadrature.theta_points,
                       "radial_order": sc.quadrature.radial_order},
        "version": __version__,
    }

    def emit(name, header, rows):
        path = out / name
        write_csv(path, header, rows)
        written.append(path)

    task = sc.task
    if task == "kappa_scan":
        emit("kappa_scan.csv", ["lambda_z", "lambda_x", "kappa_z", "kappa_x"],
             [r["row"] for r in results])
    elif task == "xi_scan":
        emit("xi_scan.csv", ["epsilon", "kappa", "xi"], [r["row"] for r in results])
    elif task == "equilibrium":
        header = ["lambda_z", "lambda_x", "temperature"]
        for m in sc.methods:
            header += [f"sz_{m}", f"sx_{m}"]
        if "rc" in sc.methods:
            header.append("rc_levels")
        emit("equilibrium.csv", header, [r["row"] for r in results])
        meta["achieved_rc_levels"] = [r["rc_levels"] for r in results]
    elif task == "dynamics":
        flags = []
        for k, res in enumerate(results):
            suffix = "" if len(results) == 1 else f"_p{k}"
            for m in sc.methods:
                emit(f"dynamics_{m}{suffix}.csv", ["t", "sz", "sx"], res[m]["rows"])
                flags.append({"point": k, "method": m,
                              "positivity_flag": res[m]["positivity_flag"],
                              "min_eigenvalue": res[m]["min_eigenvalue"]})
        meta["time_grid"] = {"t_max": sc.t_max, "n_points": sc.n_points,
                             "propagator": sc.propagator}
        meta["positivity"] = flags
        if "rc" in sc.methods:
            meta["achieved_rc_levels"] = _fixed_levels(sc.parameters)
    elif task == "rates_table":
        emit("rates_table.csv",
             ["lambda_x", "lambda_z", "kappa_z", "kappa_x", "gamma_eff", "gamma_rc_fitted"],
             [r["row"] for r in results])
        meta["achieved_rc_levels"] = [r["rc_levels"] for r in results]
        meta["fit_r2"] = [r["fit_r2"] for r in results]
        meta["fit_t_max"] = [r["t_max"] for r in results]
    elif task == "chain_build":
        emit("chain_coefficients.csv",
             ["lambda", "omega", "epsilon", "kappa", "splitting_factor", "xi",
              "bond_coupling", "e0", "e1"], [r["row"] for r in results])
    elif task == "nonuniqueness_demo":
        emit("nonuniqueness.csv",
             ["eps1", "eps2", "one_then_two_z", "one_then_two_x", "two_then_one_z",
              "two_then_one_x", "nonfactorized_z", "nonfactorized_x", "order_difference",
              "permutation_deviation"], [r["row"] for r in results])
    meta_path = out / f"{task}.meta.json"
    with open(meta_path, "w", newline="\n") as fh:
        json.dump(_clean(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(meta_path)
    return written
