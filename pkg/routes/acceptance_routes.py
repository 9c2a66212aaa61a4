"""The acceptance-suite scenario: numbered checks against closed forms, bounds and oracles."""
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from models.experiment import Criterion
from models.field import BallPoint, BeltramiField, GridSpec
from models.germ import quadratic_germ
from models.motion import conjugate_shear_motion
from routes.scenario_routes import (
    disk_closed_form,
    disk_targets,
    distance_rows,
    extended_motion,
    load_motion,
    random_parameters,
    random_unit_field,
    scenario,
)
from services.cauchy_service import (
    bump_field,
    cauchy_transform,
    dbar_residual,
    disk_indicator_field,
    empirical_modulus,
    modulus_constants,
)
from services.chirka_service import motion_constants
from services.density_service import LIZHONG_FLOOR, hypothesis_integral, lizhong_margin
from services.fatou_service import (
    exact_chart_value,
    fatou_coordinate,
    orbit_asymptotics,
    petal_chart,
    strip_conjugacy,
)
from services.kobayashi_service import ball_distance_to_origin, beltrami_ball_distance
from services.qc_service import dilatation_bound_check, dilatation_sweep
from services.regularity_service import (
    holder_exponent_fit,
    sample_pairs,
    tangent_field,
    vector_modulus_check,
)
from utils.errors import ConfigurationError
from utils.file_utils import read_json, write_table
from utils.hash_utils import get_file_hash
from utils.parallel_utils import parallel_map

logger = logging.getLogger(__name__)

# ---------------- Config ----------------
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_ORACLES = os.path.join(ROOT, "models", "oracles.json")
ORACLE_RESOLUTION = 256

THRESHOLDS = {
    "cauchy_error": 5e-3,
    "refinement_ratio": 1.8,
    "modulus_factor": 1.1,
    "solver_residual": 1e-8,
    "data_agreement": 1e-6,
    "uniqueness": 1e-7,
    "delta": 0.3,
    "shear_dilatation": 1e-6,
    "dilatation_slack": 0.05,
    "holder_slack": 0.05,
    "base_exponent": 1e-10,
    "vanishing_tangent": 1e-6,
    "orbit_ratio": 0.1,
    "beltrami_slack": 0.05,
    "conjugacy_residual": 1e-6,
    "closed_form": 1e-12,
    "monotone": 1e-12,
}
DETERMINISM_CRITERIA = tuple(range(1, 11))

CRITERIA = {}


def criterion(number):
    def register(fn):
        CRITERIA[number] = fn
        return fn
    return register


# ---------------- Oracles ----------------
def oracle_path():
    return os.getenv("HOLOMOTION_ORACLES", DEFAULT_ORACLES)


def compute_oracles(resolution=ORACLE_RESOLUTION):
    """Quadrature values the suite compares against."""
    value, error = hypothesis_integral(resolution)
    constants = modulus_constants(R=1.0, R0=1.0, p=4.0, norm_f=1.0, resolution=resolution)
    return {
        "resolution": resolution,
        "hypothesis_integral": value,
        "hypothesis_error": error,
        "modulus_C": constants.C,
        "modulus_A_R": constants.A_R,
    }


def load_oracles():
    path = oracle_path()
    if os.path.exists(path):
        return read_json(path)
    logger.warning("oracle file %s not found; computing the oracles now", path)
    return compute_oracles()


# ---------------- Suite context ----------------
@dataclass
class SuiteContext:
    config: object
    out_dir: str
    oracles: dict = None
    cache: dict = field(default_factory=dict)

    @property
    def params(self):
        return self.config.params

    def get(self, key, default):
        return self.params.get(key, default)

    def threshold(self, name):
        return float(self.params.get("thresholds", {}).get(name, THRESHOLDS[name]))

    def rng(self, number):
        """One generator per criterion, so a criterion draws the same numbers in any selection."""
        return np.random.default_rng([self.config.seed, number])

    def table(self, name, columns):
        write_table(os.path.join(self.out_dir, name), columns, self.config.seed, self.config.scenario)
        return name

    def oracle(self):
        if self.oracles is None:
            self.oracles = load_oracles()
        return self.oracles

    def extended(self):
        """The criterion-4 motion, extended once and shared by criteria 4, 5, 7 and 8."""
        if "extended" not in self.cache:
            extra = int(self.get("chirka_params", 50))
            self.cache["extended"] = extended_motion(self.config, self.rng(4), nodes=32, extra_params=extra)
        return self.cache["extended"]


def _below(name, value, threshold):
    return Criterion(name, bool(value <= threshold), float(value), float(threshold))


def _above(name, value, threshold):
    return Criterion(name, bool(value >= threshold), float(value), float(threshold))


# ---------------- 1-3: Cauchy transform ----------------
@criterion(1)
def cauchy_closed_form(ctx):
    n = int(ctx.get("cauchy_nodes", 256))
    coarse_field = disk_indicator_field(n // 2)
    targets = disk_targets(ctx.rng(1), coarse_field.grid.spacing, int(ctx.get("cauchy_targets", 200)))
    exact = disk_closed_form(targets)
    fine = cauchy_transform(disk_indicator_field(n), targets).values
    coarse = cauchy_transform(coarse_field, targets).values
    fine_error = float(np.max(np.abs(fine - exact)))
    coarse_error = float(np.max(np.abs(coarse - exact)))
    ctx.table("criterion01.csv", {"c": targets, "Pf": fine, "error": np.abs(fine - exact),
                                  "coarse_error": np.abs(coarse - exact)})
    return [
        _below("1.closed_form", fine_error, ctx.threshold("cauchy_error")),
        _above("1.refinement", coarse_error / fine_error, ctx.threshold("refinement_ratio")),
    ]


@criterion(2)
def dbar_identity(ctx):
    levels = [int(n) for n in ctx.get("dbar_levels", [28, 56, 112])]
    residuals = np.array([dbar_residual(bump_field(n)) for n in levels])
    ratios = residuals[:-1] / residuals[1:]
    ctx.table("criterion02.csv", {"nodes": np.array(levels), "residual": residuals})
    return [_above("2.dbar_refinement", float(ratios.min()), ctx.threshold("refinement_ratio"))]


@criterion(3)
def eps_log_eps_modulus(ctx):
    rng = ctx.rng(3)
    oracle_c = ctx.oracle().get("modulus_C")
    c = oracle_c if oracle_c is not None else modulus_constants(1.0, 1.0, 4.0, 1.0).C
    count = int(ctx.get("fields", 20))
    ratios = []
    for _ in range(count):
        f = random_unit_field(rng, int(ctx.get("field_nodes", 32)))
        targets = np.sqrt(rng.uniform(0, 1, 60)) * np.exp(2j * np.pi * rng.uniform(size=60))
        ratios.append(empirical_modulus(cauchy_transform(f, targets), 1.0, "eps_log_eps") / c)
    ctx.table("criterion03.csv", {"field": np.arange(count), "ratio_to_C": np.array(ratios)})
    return [_below("3.eps_log_eps", max(ratios), ctx.threshold("modulus_factor"))]


# ---------------- 4-8: holomorphic motions ----------------
@criterion(4)
def chirka_pipeline(ctx):
    constants = motion_constants(load_motion(ctx.params))
    extended = ctx.extended()
    residual = math.inf if extended.failures else float(np.max(extended.residuals))
    separation = float(np.min(extended.separations))
    ctx.table("criterion04.csv", {"u": extended.params, "min_separation": extended.separations})
    return [
        _above("4.delta", constants.delta, ctx.threshold("delta")),
        _below("4.solver_residual", residual, ctx.threshold("solver_residual")),
        _below("4.data_agreement", extended.data_agreement, ctx.threshold("data_agreement")),
        Criterion("4.separation", bool(separation > 0), separation, 0.0),
        _below("4.uniqueness", extended.uniqueness_drift, ctx.threshold("uniqueness")),
    ]


@criterion(5)
def dilatation_bound(ctx):
    shear = conjugate_shear_motion(GridSpec.spanning(-1.0, 1.0, -1.0, 1.0, 11, 11))
    shear_error = max(abs(dilatation_bound_check(shear, c).margin) for c in (0.3, 0.6))
    extended = ctx.extended()
    cs = random_parameters(ctx.rng(5), extended.r, int(ctx.get("dilatation_samples", 10)), fraction=0.9)
    reports = dilatation_sweep(extended, cs)
    excess = np.array([rep.K - rep.bound for rep in reports])
    ctx.table("criterion05.csv", {"c": cs, "K": np.array([rep.K for rep in reports]),
                                  "bound": np.array([rep.bound for rep in reports])})
    return [
        _below("5.shear", shear_error, ctx.threshold("shear_dilatation")),
        _below("5.extended", float(excess.max()), ctx.threshold("dilatation_slack")),
    ]


@criterion(6)
def lizhong_bound(ctx):
    oracle = ctx.oracle()
    log_r = max(oracle["hypothesis_integral"], LIZHONG_FLOOR) + 0.5
    rng = ctx.rng(6)
    count = int(ctx.get("lizhong_points", 200))
    moduli = rng.uniform(1e-3, 1.0 - 1e-3, count)
    zs = moduli * np.exp(2j * np.pi * rng.uniform(size=count))
    margins = parallel_map(lambda z: lizhong_margin(z, log_r, oracle.get("resolution", ORACLE_RESOLUTION)), list(zs))
    slack = np.array([m.margin + m.quadrature_error for m in margins])
    ctx.table("criterion06.csv", {"z": zs, "margin": np.array([m.margin for m in margins]), "slack": slack})
    return [_above("6.lizhong", float(slack.min()), 0.0)]


def _tangent_points(rng, delta):
    # six distinct points per separation; 36 points give 630 pairs closer than delta
    cluster = sample_pairs(0.3 + 0.2j, 0.8 * delta, n_sep=6, n_dir=3, t_min=1e-3).ravel()
    ring = rng.uniform(1.0, 1.95, 16) * np.exp(2j * np.pi * rng.uniform(size=16))
    return np.concatenate([[0, 1], cluster, ring])


@criterion(7)
def tangent_modulus(ctx):
    delta = 0.1
    field = tangent_field(ctx.extended(), _tangent_points(ctx.rng(7), delta))
    report = vector_modulus_check(field, R=2.0, delta=delta)
    ctx.table("criterion07.csv", {"z": field.points, "V": field.values, "error": field.errors})
    vanishing = max(abs(field.values[0]), abs(field.values[1]))
    return [
        _below("7.modulus", report.worst_ratio, report.coefficient),
        _above("7.pairs", report.pairs, 500),
        _below("7.fixed_points", vanishing, ctx.threshold("vanishing_tangent")),
    ]


@criterion(8)
def holder_exponent(ctx):
    extended = ctx.extended()
    c = 0.5 * extended.r * np.exp(0.4j)
    pairs = sample_pairs(0.2 - 0.3j, 0.1)
    fit = holder_exponent_fit(extended, c, pairs)
    base = holder_exponent_fit(extended, 0, pairs)
    ctx.table("criterion08.csv", {
        "c": np.array([c, 0j]),
        "slope": np.array([fit.slope, base.slope]),
        "intercept": np.array([fit.intercept, base.intercept]),
        "floor": np.array([fit.floor, base.floor]),
        "pairs": np.array([fit.pairs, base.pairs]),
    })
    return [
        _above("8.exponent", fit.slope, fit.floor - ctx.threshold("holder_slack")),
        _below("8.base_exponent", abs(base.slope - 1.0), ctx.threshold("base_exponent")),
    ]


# ---------------- 9: Fatou coordinates ----------------
@criterion(9)
def fatou_linearization(ctx):
    germ = quadratic_germ()
    chart = petal_chart(germ)
    value = exact_chart_value(germ, 2)
    orbit = orbit_asymptotics(chart, chart.tau, 100)
    stages = [strip_conjugacy(chart, m) for m in (1, 2, 4, 8)]
    sups = np.array([s.beltrami_sup for s in stages])
    bounds = np.array([(s.boundary.K - 1.0) / (s.boundary.K + 1.0) for s in stages])
    result = fatou_coordinate(chart, m_max=int(ctx.get("m_max", 64)), tol=float(ctx.get("tol", 1e-7)))
    m, difference, sup = (np.array(column, dtype=float) for column in zip(*result.history))
    ctx.table("criterion09.csv", {"m": m.astype(int), "difference": difference, "beltrami_sup": sup})
    return [
        Criterion("9.exact_chart", value == 4, float(value), 4.0),
        _below("9.orbit_ratio", abs(orbit.ratio - 1.0), ctx.threshold("orbit_ratio")),
        _below("9.beltrami_monotone", float(np.max(np.diff(sups))), ctx.threshold("monotone")),
        _below("9.beltrami_bound", float(np.max(sups - bounds)), ctx.threshold("beltrami_slack")),
        _below("9.conjugacy_residual", result.conjugacy_residual, ctx.threshold("conjugacy_residual")),
    ]


# ---------------- 10: Kobayashi distances ----------------
@criterion(10)
def kobayashi_formulas(ctx):
    grid = GridSpec.spanning(0.0, 1.0, 0.0, 1.0, 3, 3)
    half = BeltramiField(grid, np.full(grid.shape, 0.5 + 0j), 0.5)
    minus = BeltramiField(grid, np.full(grid.shape, -0.5 + 0j), 0.5)
    origin_error = abs(ball_distance_to_origin(BallPoint([0.5])) - math.log(3.0))
    scalar_error = abs(beltrami_ball_distance(half, minus) - math.log(9.0))
    rows = distance_rows(ctx.rng(10), int(ctx.get("pairs", 50)), int(ctx.get("chain_length", 3)),
                         int(ctx.get("nodes", 3)))
    increase = max((float(np.max(np.diff(chain.raw))) for chain, _ in rows if len(chain.raw) > 1),
                   default=-math.inf)
    excess = max((chain.value - rep for chain, rep in rows), default=-math.inf)
    ctx.table("criterion10.csv", {
        "pair": np.arange(len(rows)),
        "d_1": np.array([chain.d1 for chain, _ in rows]),
        "d_n": np.array([chain.value for chain, _ in rows]),
        "d_T_rep": np.array([rep for _, rep in rows]),
    })
    return [
        _below("10.origin", origin_error, ctx.threshold("closed_form")),
        _below("10.scalar", scalar_error, ctx.threshold("closed_form")),
        _below("10.monotone", increase, ctx.threshold("monotone")),
        _below("10.representative", excess, ctx.threshold("monotone")),
    ]


# ---------------- 11: determinism ----------------
def replay_criteria(selected):
    """Criteria whose tables criterion 11 regenerates: the selected ones, or all of them."""
    return [n for n in DETERMINISM_CRITERIA if n in selected] or list(DETERMINISM_CRITERIA)


@criterion(11)
def determinism(ctx):
    """Reruns the table-writing criteria into a scratch folder and compares digests.

    The rerun builds its own extended motion, so threaded solves are replayed too.
    """
    replay = replay_criteria(ctx.cache.get("selected", ()))
    mismatches = 0
    with tempfile.TemporaryDirectory() as scratch:
        rerun = SuiteContext(ctx.config, scratch, ctx.oracles)
        for number in replay:
            first = os.path.join(ctx.out_dir, f"criterion{number:02d}.csv")
            if not os.path.exists(first):
                CRITERIA[number](SuiteContext(ctx.config, ctx.out_dir, ctx.oracles))
            CRITERIA[number](rerun)
            second = os.path.join(scratch, f"criterion{number:02d}.csv")
            mismatches += get_file_hash(first) != get_file_hash(second)
    return [Criterion("11.determinism", mismatches == 0, float(mismatches), 0.0)]


# ---------------- Suite ----------------
def selected_criteria(params):
    chosen = params.get("criteria", sorted(CRITERIA))
    if not isinstance(chosen, list):
        chosen = [chosen]
    try:
        chosen = [int(n) for n in chosen]
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"criteria must be numbers, got {chosen!r}") from exc
    unknown = [n for n in chosen if n not in CRITERIA]
    if unknown:
        raise ConfigurationError(f"unknown acceptance criteria {unknown}; known are {sorted(CRITERIA)}")
    return chosen


@scenario("acceptance-suite")
def run_acceptance(config, run_dir):
    ctx = SuiteContext(config, run_dir)
    ctx.cache["selected"] = selected_criteria(config.params)
    results = []
    for number in ctx.cache["selected"]:
        checks = CRITERIA[number](ctx)
        for check in checks:
            logger.info("%s %s: value %.6g, threshold %.6g",
                        "PASS" if check.passed else "FAIL", check.name, check.value, check.threshold)
        results.extend(checks)
    names, passed, values, thresholds = (np.array(column) for column in zip(*(c.row() for c in results)))
    ctx.table("acceptance.csv", {"criterion": names, "passed": passed, "value": values, "threshold": thresholds})
    failed = [c.name for c in results if not c.passed]
    files = sorted(name for name in os.listdir(run_dir) if name.endswith(".csv"))
    return {"files": files, "passed": not failed, "failed": failed, "checks": len(results)}
