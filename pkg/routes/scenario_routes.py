"""Scenario runners for the `run` command.

A runner takes an ExperimentConfig and a fresh run directory, writes its tables
there and returns a summary dict for the manifest. A summary with
``passed: False`` makes the run exit with status 1.
"""
import logging
import math
import os
from dataclasses import asdict

import numpy as np

from models.field import BeltramiField, GridSpec, SampledField
from models.germ import ParabolicGerm
from models.motion import FinitePointMotion, conjugate_shear_motion, sample_motion
from services.cauchy_service import (
    cauchy_transform,
    disk_indicator_field,
    empirical_modulus,
    modulus_constants,
    uniform_bound_check,
)
from services.chirka_service import DEFAULT_MESH_NODES, extend_motion, parameter_cr_residual
from services.fatou_service import (
    exact_chart_value,
    fatou_coordinate,
    germ_power,
    orbit_asymptotics,
    petal_chart,
)
from services.kobayashi_service import (
    chain_distance,
    relative_representative,
    teich_distance_representative,
)
from services.qc_service import cross_ratio_track, dilatation_sweep
from services.regularity_service import (
    holder_exponent_fit,
    sample_pairs,
    tangent_field,
    vector_modulus_check,
)
from utils.errors import ConfigurationError, HolomotionError
from utils.file_utils import write_json, write_table

logger = logging.getLogger(__name__)

SCENARIOS = {}


def scenario(name):
    def register(fn):
        SCENARIOS[name] = fn
        return fn
    return register


# ---------------- Shared inputs ----------------
def _table(config, run_dir, name, columns):
    write_table(os.path.join(run_dir, name), columns, config.seed, config.scenario)
    return name


def _json(run_dir, name, data):
    write_json(os.path.join(run_dir, name), data)
    return name


def disk_targets(rng, spacing, count, outer=2.0):
    """``count`` targets in |c| < outer, at least two cells away from the unit circle."""
    half = count // 2
    inside = np.sqrt(rng.uniform(0, (1 - 2 * spacing) ** 2, half))
    outside = rng.uniform(1 + 2 * spacing, outer, count - half)
    moduli = np.concatenate([inside, outside])
    return moduli * np.exp(2j * np.pi * rng.uniform(size=count))


def disk_closed_form(targets):
    """P of the unit-disk indicator: conj(c) inside, 1/c outside."""
    targets = np.asarray(targets, dtype=complex)
    inside = np.abs(targets) < 1.0
    return np.where(inside, np.conj(targets), 1.0 / np.where(inside, 1.0, targets))


def random_unit_field(rng, n, half_width=1.25):
    """Random field with sup norm 1 on the cells of an n x n grid inside the unit disk."""
    grid = GridSpec.centered(half_width, n)
    values = np.exp(2j * np.pi * rng.uniform(size=grid.shape)) * rng.uniform(size=grid.shape)
    values[np.abs(grid.points()) >= 1.0] = 0
    values /= np.max(np.abs(values))
    return SampledField(grid, values, 1.0)


def random_parameters(rng, r, count, fraction=0.95):
    moduli = fraction * r * np.sqrt(rng.uniform(size=count))
    return moduli * np.exp(2j * np.pi * rng.uniform(size=count))


def as_complex(value):
    """A number or an [re, im] pair from a JSON config."""
    if isinstance(value, (list, tuple)):
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def plane_grid(params, nodes=16, half_width=1.4):
    n = int(params.get("grid_nodes", nodes))
    w = float(params.get("grid_half_width", half_width))
    return GridSpec.spanning(-w, w, -w, w, n, n)


def load_motion(params):
    if params.get("motion_file"):
        return FinitePointMotion.load(params["motion_file"])
    return sample_motion()


def load_field(params, n):
    """The field named by ``field_file`` (a ``save`` header), else the unit-disk indicator."""
    if params.get("field_file"):
        return SampledField.load(params["field_file"])
    return disk_indicator_field(n)


def load_germ(params):
    if params.get("germ_file"):
        germ = ParabolicGerm.load(params["germ_file"])
    else:
        germ = ParabolicGerm.from_json({
            "coefficients": params.get("coefficients", [1, 1]),
            "period": params.get("period", 1),
        })
    return germ if germ.normalized else germ_power(germ, germ.period)


def extended_motion(config, rng=None, nodes=16, extra_params=0):
    """The configured motion extended at radius r, optionally sampled at random parameters."""
    p = config.params
    r = float(p.get("r", 0.5))
    params = None
    if extra_params:
        rng = rng or np.random.default_rng(config.seed)
        params = np.concatenate([[0j], random_parameters(rng, r, extra_params)])
    return extend_motion(
        load_motion(p), r, plane_grid(p, nodes), params=params,
        mesh_nodes=int(p.get("mesh_nodes", DEFAULT_MESH_NODES)),
        tol=float(p.get("tol", 1e-8)),
    )


def extension_summary(extended):
    return {
        "r": extended.r,
        "constants": asdict(extended.solver.constants),
        "failures": [[str(z), reason] for z, reason in extended.failures],
        "max_residual": float(np.nanmax(extended.residuals)) if extended.residuals.size else 0.0,
        "max_iterations": int(extended.iterations.max()) if extended.iterations.size else 0,
        "min_separation": float(np.min(extended.separations)),
        "data_agreement": extended.data_agreement,
        "uniqueness_drift": extended.uniqueness_drift,
    }


# ---------------- cauchy-modulus ----------------
@scenario("cauchy-modulus")
def run_cauchy_modulus(config, run_dir):
    p = config.params
    rng = np.random.default_rng(config.seed)
    field = load_field(p, int(p.get("nodes", 128)))
    targets = disk_targets(rng, field.grid.spacing, int(p.get("targets", 200)))
    result = cauchy_transform(field, targets)
    columns = {"c": targets, "Pf": result.values}
    summary = {}
    if not p.get("field_file"):
        exact = disk_closed_form(targets)
        columns.update(exact=exact, error=np.abs(result.values - exact))
        summary["max_error"] = float(np.max(columns["error"]))
    files = [_table(config, run_dir, "transform.csv", columns)]
    files.extend(os.path.basename(path) for path in field.save(os.path.join(run_dir, "field")))

    constants = modulus_constants(R=float(p.get("R", 1.0)), R0=float(p.get("R0", 1.0)),
                                  p=float(p.get("p", 4.0)), norm_f=1.0)
    count = int(p.get("fields", 5))
    field_nodes = int(p.get("field_nodes", 32))
    eps_ratios, holder_ratios, sup_ratios = [], [], []
    for _ in range(count):
        random_field = random_unit_field(rng, field_nodes)
        probes = np.sqrt(rng.uniform(0, 1, 60)) * np.exp(2j * np.pi * rng.uniform(size=60))
        transformed = cauchy_transform(random_field, probes)
        eps_ratios.append(empirical_modulus(transformed, 1.0, "eps_log_eps"))
        holder_ratios.append(empirical_modulus(transformed, 1.0, "holder", alpha=constants.holder_exponent))
        observed, bound = uniform_bound_check(random_field, constants, probes)
        sup_ratios.append(observed / bound)
    files.append(_table(config, run_dir, "modulus.csv", {
        "field": np.arange(count),
        "eps_log_eps": np.array(eps_ratios),
        "C": np.full(count, constants.C),
        "holder": np.array(holder_ratios),
        "A_R": np.full(count, constants.A_R),
        "sup_over_bound": np.array(sup_ratios),
    }))
    files.append(_json(run_dir, "constants.json", asdict(constants)))
    return dict(summary, files=files, worst_eps_log_eps=max(eps_ratios), C=constants.C)


# ---------------- chirka-extend ----------------
@scenario("chirka-extend")
def run_chirka_extend(config, run_dir):
    extended = extended_motion(config)
    us, zs, hs = (np.array(column) for column in zip(*extended.rows()))
    files = [_table(config, run_dir, "extension.csv", {"c": us, "z": zs, "H": hs})]
    summary = extension_summary(extended)
    probe = as_complex(config.params.get("cr_probe", [0.3, 0.2]))
    summary["parameter_cr_residual"] = parameter_cr_residual(extended, probe, n=int(config.params.get("cr_nodes", 5)))
    files.append(_json(run_dir, "summary.json", summary))
    return {"files": files, "failures": len(extended.failures), "data_agreement": extended.data_agreement}


# ---------------- qc-audit ----------------
@scenario("qc-audit")
def run_qc_audit(config, run_dir):
    p = config.params
    extended = extended_motion(config)
    count = int(p.get("parameters", 8))
    fraction = float(p.get("radius_fraction", 0.5))
    cs = fraction * extended.r * np.exp(2j * np.pi * np.arange(count) / count)
    reports = dilatation_sweep(extended, cs)
    shear = conjugate_shear_motion(extended.grid)
    shear_cs = np.array([0.3, 0.6], dtype=complex)
    shear_reports = dilatation_sweep(shear, shear_cs)
    every = reports + shear_reports
    files = [_table(config, run_dir, "dilatation.csv", {
        "motion": np.array(["extended"] * len(reports) + ["shear"] * len(shear_reports)),
        "c": np.array([rep.c for rep in every]),
        "K": np.array([rep.K for rep in every]),
        "bound": np.array([rep.bound for rep in every]),
        "margin": np.array([rep.margin for rep in every]),
        "sup_mu": np.array([rep.sup_norm for rep in every]),
    })]
    path = np.linspace(0, fraction * extended.r, int(p.get("path_steps", 6)))
    track = cross_ratio_track(extended, [0.3 + 0.2j, 1, 0, "inf"], path)
    files.append(_table(config, run_dir, "cross_ratio.csv", {"c": path.astype(complex), "cross_ratio": track}))
    return {"files": files, "worst_margin": min(rep.margin for rep in reports)}


# ---------------- regularity ----------------
@scenario("regularity")
def run_regularity(config, run_dir):
    p = config.params
    rng = np.random.default_rng(config.seed)
    extended = extended_motion(config)
    delta = float(p.get("delta", 0.1))
    cluster = sample_pairs(0.3 + 0.2j, 0.8 * delta, n_sep=4, n_dir=3, t_min=1e-3).ravel()
    spread = 2.0 * np.sqrt(rng.uniform(size=int(p.get("points", 24)))) * np.exp(
        2j * np.pi * rng.uniform(size=int(p.get("points", 24))))
    points = np.concatenate([[0, 1], cluster, spread])
    field = tangent_field(extended, points)
    files = [_table(config, run_dir, "tangent.csv", {"z": field.points, "V": field.values, "error": field.errors})]

    modulus = vector_modulus_check(field, R=2.0, delta=delta)
    c = 0.5 * extended.r * np.exp(0.4j)
    pairs = sample_pairs(as_complex(p.get("fit_center", [0.2, -0.3])), delta)
    fit = holder_exponent_fit(extended, c, pairs)
    fit0 = holder_exponent_fit(extended, 0, pairs)
    files.append(_json(run_dir, "regularity.json", {
        "modulus": asdict(modulus),
        "holds": modulus.holds,
        "holder_fit": dict(asdict(fit), c=c, holds=fit.holds),
        "holder_fit_base": asdict(fit0),
        "V0": abs(field.values[0]),
        "V1": abs(field.values[1]),
    }))
    return {"files": files, "modulus_holds": modulus.holds, "holder_holds": fit.holds}


# ---------------- fatou ----------------
@scenario("fatou")
def run_fatou(config, run_dir):
    p = config.params
    germ = load_germ(p)
    chart = petal_chart(germ, int(p.get("series_length", 40)))
    metadata = dict(chart.metadata(), coefficients=germ.to_json()["coefficients"])
    try:
        metadata["F(2)"] = str(exact_chart_value(germ, 2))
    except HolomotionError:
        pass
    files = [_json(run_dir, "chart.json", metadata)]

    result = fatou_coordinate(chart, m_max=int(p.get("m_max", 64)), tol=float(p.get("tol", 1e-7)))
    m, difference, sup = (np.array(column, dtype=float) for column in zip(*result.history))
    files.append(_table(config, run_dir, "convergence.csv", {
        "m": m.astype(int), "difference": difference, "beltrami_sup": sup,
    }))
    points = result.grid.interior().points().ravel()
    values = result.psi(points)
    residual = np.abs(chart.F(values) - result.psi(points + 1.0))
    files.append(_table(config, run_dir, "residuals.csv", {"w": points, "Psi": values, "residual": residual}))

    orbit = orbit_asymptotics(chart, chart.tau, int(p.get("orbit_steps", 100)))
    files.append(_table(config, run_dir, "orbit.csv", {"k": np.arange(orbit.orbit.size), "w": orbit.orbit}))
    return {
        "files": files,
        "converged": result.converged,
        "m": result.m,
        "conjugacy_residual": result.conjugacy_residual,
        "orbit_ratio": orbit.ratio,
    }


# ---------------- kobayashi ----------------
def random_beltrami(rng, grid, radius=0.9):
    values = radius * np.sqrt(rng.uniform(size=grid.shape)) * np.exp(2j * np.pi * rng.uniform(size=grid.shape))
    return BeltramiField(grid, values, float(np.max(np.abs(values))))


def distance_rows(rng, pairs, n, nodes, family="geodesic"):
    """(chain distance, representative distance) per random pair of Beltrami fields on a nodes x nodes grid."""
    grid = GridSpec.spanning(0.0, 1.0, 0.0, 1.0, nodes, nodes)
    rows = []
    for _ in range(pairs):
        mu, nu = random_beltrami(rng, grid), random_beltrami(rng, grid)
        chain = chain_distance(nu, mu, n, family=family)
        rows.append((chain, teich_distance_representative(relative_representative(mu, nu))))
    return rows


@scenario("kobayashi")
def run_kobayashi(config, run_dir):
    p = config.params
    rng = np.random.default_rng(config.seed)
    family = p.get("family", "geodesic")
    n = int(p.get("chain_length", 3))
    if n < 1:
        raise ConfigurationError(f"chain_length must be at least 1, got {n}")
    rows = distance_rows(rng, int(p.get("pairs", 50)), n, int(p.get("nodes", 3)), family)
    d1 = np.array([chain.d1 for chain, _ in rows])
    dn = np.array([chain.value for chain, _ in rows])
    rep = np.array([value for _, value in rows])
    monotone = np.array([chain.monotone for chain, _ in rows])
    files = [_table(config, run_dir, "distances.csv", {
        "pair": np.arange(len(rows)), "d_1": d1, "d_n": dn, "d_T_rep": rep, "monotone": monotone,
    })]
    return {
        "files": files,
        "all_monotone": bool(np.all(monotone)),
        "worst_excess": float(np.max(dn - rep)) if rows else -math.inf,
    }

