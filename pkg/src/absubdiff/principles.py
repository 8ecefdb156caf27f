"""Maximum principles, uniqueness and continuous dependence as experiments.

Every check first audits its hypotheses on the actual grid data. A check
whose hypotheses fail is reported as not applicable (and not passed), never
as a counterexample.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .report import CheckReport, Hypothesis, not_applicable
from .solver import Field, ProblemSpec, SolverConfig, SpaceTimeGrid, solve

THEOREM_IDS = ("T3.1", "T3.2", "C1", "C2", "T3.3", "T3.4", "T4.1", "T4.2")

#: Absolute tolerance on bounds the discrete M-matrix structure enforces exactly.
THEOREM_TOL = 1e-8
#: Finite-difference step of the monotonicity audit of F in u.
AUDIT_STEP = 1e-6
#: Largest measured dF/du still read as "nonincreasing" (finite-difference noise).
AUDIT_SLOPE_TOL = 1e-8

CANONICAL_GRID = SpaceTimeGrid(1.0, 1.0, 40, 160)


# --- hypothesis audits -------------------------------------------------------


def _nodes(problem: ProblemSpec):
    g = problem.grid
    return np.meshgrid(g.x, g.t)  # shapes (n_t+1, n_x+1), like Field.values


def forcing_on_grid(problem: ProblemSpec, u: np.ndarray | None = None) -> np.ndarray:
    g = problem.grid
    u = np.zeros(g.shape) if u is None else u
    return np.stack([problem.forcing_values(g.x, g.t[n], u[n]) for n in range(g.n_t + 1)])


def audit_linear(problem: ProblemSpec) -> Hypothesis:
    """F must not depend on u: compare F at u = 0 and u = 1 on every node."""
    g = problem.grid
    gap = float(np.max(np.abs(forcing_on_grid(problem, np.ones(g.shape)) - forcing_on_grid(problem))))
    return Hypothesis("F independent of u", bool(problem.linear and gap == 0.0), gap)


def audit_forcing_sign(problem: ProblemSpec, sign: int) -> Hypothesis:
    f = forcing_on_grid(problem)
    if sign > 0:
        return Hypothesis("F >= 0 on grid", bool(f.min() >= 0.0), float(f.min()))
    return Hypothesis("F <= 0 on grid", bool(f.max() <= 0.0), float(f.max()))


def audit_nondecreasing(name: str, values: np.ndarray) -> Hypothesis:
    worst = float(np.min(np.diff(values)))
    return Hypothesis(f"{name} nondecreasing", bool(worst >= 0.0), worst)


def audit_nonincreasing(name: str, values: np.ndarray) -> Hypothesis:
    worst = float(np.max(np.diff(values)))
    return Hypothesis(f"{name} nonincreasing", bool(worst <= 0.0), worst)


def audit_zero(name: str, values: np.ndarray) -> Hypothesis:
    size = float(np.max(np.abs(values)))
    return Hypothesis(f"{name} = 0", bool(size == 0.0), size)


def audit_nonincreasing_in_u(problem: ProblemSpec, *fields: Field) -> Hypothesis:
    """Central differences of F in u at every value taken by the given solutions."""
    worst = -math.inf
    for fld in fields:
        u = fld.values
        up = forcing_on_grid(problem, u + AUDIT_STEP)
        down = forcing_on_grid(problem, u - AUDIT_STEP)
        worst = max(worst, float(np.max((up - down) / (2.0 * AUDIT_STEP))))
    return Hypothesis("F nonincreasing in u", bool(worst <= AUDIT_SLOPE_TOL), worst)


# --- maximum principles ------------------------------------------------------


def _data_extremes(problem: ProblemSpec):
    data = np.concatenate([problem.lam_values(), problem.mu_values(), problem.phi_values()])
    return float(data.min()), float(data.max())


def min_bound_check(problem: ProblemSpec, field: Field, tol: float = THEOREM_TOL) -> CheckReport:
    """Lower bound by the minimum of the data when F >= 0 and the boundary data rise."""
    hyps = (
        audit_linear(problem),
        audit_forcing_sign(problem, +1),
        audit_nondecreasing("lambda", problem.lam_values()),
        audit_nondecreasing("mu", problem.mu_values()),
    )
    if not all(h.satisfied for h in hyps):
        return not_applicable("T3.1", hyps, label=problem.label)
    m, _ = _data_extremes(problem)
    low = float(field.values.min())
    slack = low - m
    return CheckReport("T3.1", m, low, slack, slack >= -tol, hyps, tol, {"label": problem.label})


def max_bound_check(
    problem: ProblemSpec,
    field: Field,
    tol: float = THEOREM_TOL,
    boundary: Literal["nondecreasing", "nonincreasing"] = "nondecreasing",
) -> CheckReport:
    """Upper bound by the maximum of the data when F <= 0.

    The default audits nondecreasing boundary data, as in the lower bound.
    That version admits counterexamples (rising boundary data lift interior
    maxima through the nonlocal term); ``boundary="nonincreasing"`` audits the
    hypothesis the comparison argument actually needs.
    """
    if boundary == "nondecreasing":
        audit = audit_nondecreasing
    elif boundary == "nonincreasing":
        audit = audit_nonincreasing
    else:
        raise ValueError(f"boundary must be 'nondecreasing' or 'nonincreasing', got {boundary!r}")
    hyps = (
        audit_linear(problem),
        audit_forcing_sign(problem, -1),
        audit("lambda", problem.lam_values()),
        audit("mu", problem.mu_values()),
    )
    if not all(h.satisfied for h in hyps):
        return not_applicable("T3.2", hyps, label=problem.label)
    _, top = _data_extremes(problem)
    high = float(field.values.max())
    slack = top - high
    details = {"label": problem.label, "boundary": boundary}
    return CheckReport("T3.2", top, high, slack, slack >= -tol, hyps, tol, details)


def sign_preservation_check(
    problem: ProblemSpec,
    field: Field,
    sign: Literal["nonneg", "nonpos"] = "nonneg",
    tol: float = THEOREM_TOL,
) -> CheckReport:
    """Zero data and signed forcing give a solution of the same sign."""
    if sign not in ("nonneg", "nonpos"):
        raise ValueError(f"sign must be 'nonneg' or 'nonpos', got {sign!r}")
    theorem_id = "C1" if sign == "nonneg" else "C2"
    hyps = (
        audit_linear(problem),
        audit_forcing_sign(problem, +1 if sign == "nonneg" else -1),
        audit_zero("phi", problem.phi_values()),
        audit_zero("lambda", problem.lam_values()),
        audit_zero("mu", problem.mu_values()),
    )
    if not all(h.satisfied for h in hyps):
        return not_applicable(theorem_id, hyps, label=problem.label)
    if sign == "nonneg":
        measured = float(field.values.min())
        slack = measured
    else:
        measured = float(field.values.max())
        slack = -measured
    return CheckReport(theorem_id, 0.0, measured, slack, slack >= -tol, hyps, tol, {"label": problem.label})


# --- uniqueness and continuous dependence -----------------------------------


def uniqueness_experiment(problem: ProblemSpec, config_a: SolverConfig, config_b: SolverConfig) -> CheckReport:
    """Solve twice with different nonlinear-iteration settings and compare."""
    theorem_id = "T3.3" if problem.linear else "T4.1"
    field_a = solve(problem, config_a)
    field_b = solve(problem, config_b)
    hyps = [Hypothesis("distinct solver settings", config_a != config_b, float(config_a != config_b))]
    if problem.linear:
        hyps.append(audit_linear(problem))
    else:
        hyps.append(audit_nonincreasing_in_u(problem, field_a, field_b))
    if not all(h.satisfied for h in hyps):
        return not_applicable(theorem_id, hyps, label=problem.label)
    diff = float(np.max(np.abs(field_a.values - field_b.values)))
    bound = 10.0 * max(config_a.picard_tol, config_b.picard_tol)
    bitwise = bool(np.array_equal(field_a.values, field_b.values))
    return CheckReport(
        theorem_id, bound, diff, bound - diff, diff <= bound, tuple(hyps), bound,
        {"label": problem.label, "bitwise_identical": bitwise},
    )


def stability_experiment(
    problem: ProblemSpec,
    phi_alt: Callable,
    tol: float = THEOREM_TOL,
    config: SolverConfig | None = None,
) -> CheckReport:
    """Sup-distance of two solutions against the sup-distance of their initial data."""
    config = config or SolverConfig()
    alt = problem.with_phi(phi_alt, label=f"{problem.label} (perturbed)")
    u = solve(problem, config)
    u_alt = solve(alt, config)
    if problem.linear:
        theorem_id = "T3.4"
        hyps = [
            audit_zero("lambda", problem.lam_values()),
            audit_zero("mu", problem.mu_values()),
            audit_linear(problem),
        ]
    else:
        theorem_id = "T4.2"
        hyps = [
            Hypothesis("shared boundary data", True, 0.0),
            audit_nonincreasing_in_u(problem, u, u_alt),
        ]
    if not all(h.satisfied for h in hyps):
        return not_applicable(theorem_id, hyps, label=problem.label)
    delta = float(np.max(np.abs(problem.phi_values() - alt.phi_values())))
    diff = float(np.max(np.abs(u.values - u_alt.values)))
    details = {"label": problem.label, "delta": delta}
    if problem.linear:
        details["superposition_gap"] = abs(diff - superposition_sup(problem, phi_alt, config))
    return CheckReport(theorem_id, delta, diff, delta - diff, diff <= delta + tol, tuple(hyps), tol, details)


def superposition_sup(problem: ProblemSpec, phi_alt: Callable, config: SolverConfig | None = None) -> float:
    """Sup of the solution with data phi - phi_alt, zero boundary values and no forcing."""
    zero = lambda *args: 0.0  # noqa: E731
    diff_problem = ProblemSpec(
        problem.alpha, problem.grid,
        lambda x: np.asarray(problem.phi(x), dtype=float) - np.asarray(phi_alt(x), dtype=float),
        zero, zero, zero, True, math.inf, False, "superposition",
    )
    return float(np.max(np.abs(solve(diff_problem, config).values)))


# --- registered experiments --------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    theorem_id: str
    name: str
    run: Callable[[], CheckReport]


def _zero(*args):
    return 0.0


def _problem(label, phi=_zero, lam=_zero, mu=_zero, forcing=_zero, linear=True, alpha=0.5, grid=CANONICAL_GRID):
    return ProblemSpec(alpha, grid, phi, lam, mu, forcing, linear, label=label)


def _bound(check, problem, *args):
    return lambda: check(problem, solve(problem), *args)


def _bump(x):
    return 4.0 * x * (1.0 - x)


def _sine(x):
    return np.sin(np.pi * x)


def _cubic(x, t, u):
    return -(u**3)


def _perturbed_bump(x):
    return _bump(x) + 0.01 * np.sin(np.pi * x)


def canonical_problems() -> dict[str, ProblemSpec]:
    """The problems behind :func:`canonical_suite`, keyed by theorem id."""
    return {
        "T3.1": _problem("bump, zero data", phi=_bump),
        "T3.2": _problem("sine, zero data", phi=_sine),
        "C1": _problem("zero data, F = x(1-x)t", forcing=lambda x, t, u: x * (1.0 - x) * t),
        "C2": _problem("zero data, F = -x(1-x)t", forcing=lambda x, t, u: -x * (1.0 - x) * t),
        "T3.3": _problem("bump, rising boundaries, F = 1", phi=_bump, lam=lambda t: t, mu=lambda t: t,
                         forcing=lambda x, t, u: 1.0),
        "T3.4": _problem("bump, zero data", phi=_bump),
        "T4.1": _problem("bump, F = -u^3", phi=_bump, forcing=_cubic, linear=False),
        "T4.2": _problem("bump, F = -u^3", phi=_bump, forcing=_cubic, linear=False),
    }


def canonical_suite() -> list[Experiment]:
    """One registered instance per theorem, on the 40 x 160 canonical grid."""
    p = canonical_problems()
    cfg_a = SolverConfig(picard_tol=1e-10)
    cfg_b = SolverConfig(picard_tol=1e-10, damping=0.7, picard_start="zero")
    return [
        Experiment("T3.1", p["T3.1"].label, _bound(min_bound_check, p["T3.1"])),
        Experiment("T3.2", p["T3.2"].label, _bound(max_bound_check, p["T3.2"])),
        Experiment("C1", p["C1"].label, _bound(sign_preservation_check, p["C1"], "nonneg")),
        Experiment("C2", p["C2"].label, _bound(sign_preservation_check, p["C2"], "nonpos")),
        Experiment("T3.3", p["T3.3"].label, lambda: uniqueness_experiment(p["T3.3"], cfg_a, cfg_b)),
        Experiment("T3.4", p["T3.4"].label, lambda: stability_experiment(p["T3.4"], _perturbed_bump)),
        Experiment("T4.1", p["T4.1"].label, lambda: uniqueness_experiment(p["T4.1"], cfg_a, cfg_b)),
        Experiment("T4.2", p["T4.2"].label, lambda: stability_experiment(p["T4.2"], _perturbed_bump)),
    ]


def extended_suite() -> list[Experiment]:
    """Canonical suite plus the second instances of the two maximum principles."""
    p31b = _problem("zero initial data, lam = mu = t, F = 1", lam=lambda t: t, mu=lambda t: t, forcing=lambda x, t, u: 1.0)
    p32b = _problem("sine, F = -1", phi=_sine, forcing=lambda x, t, u: -1.0)
    p41b = _problem("bump, F = -u", phi=_bump, forcing=lambda x, t, u: -u, linear=False)
    cfg_a = SolverConfig(picard_tol=1e-10)
    cfg_b = SolverConfig(picard_tol=1e-10, damping=0.7, picard_start="zero")
    return canonical_suite() + [
        Experiment("T3.1", p31b.label, _bound(min_bound_check, p31b)),
        Experiment("T3.2", p32b.label, _bound(max_bound_check, p32b)),
        Experiment("T4.1", p41b.label, lambda: uniqueness_experiment(p41b, cfg_a, cfg_b)),
    ]


def _random_trig(rng, degree=3):
    coeffs = rng.uniform(-1.0, 1.0, size=2 * degree + 1)

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, coeffs[0])
        for k in range(1, degree + 1):
            out = out + coeffs[2 * k - 1] * np.cos(k * np.pi * x) + coeffs[2 * k] * np.sin(k * np.pi * x)
        return out

    return f


def random_suite(seed: int, grid: SpaceTimeGrid = CANONICAL_GRID) -> list[Experiment]:
    """Seeded random instance of every theorem, with hypotheses satisfied by construction."""
    rng = np.random.default_rng(seed)
    a = grid.a
    experiments = []

    def draw_alpha():
        return float(rng.uniform(0.2, 0.8))

    def rising_boundaries(phi):
        b1, b2 = rng.uniform(0.0, 1.0, size=2)
        l0, m0 = float(phi(np.array([0.0]))[0]), float(phi(np.array([a]))[0])
        return (lambda t, l0=l0, b1=b1: l0 + b1 * t), (lambda t, m0=m0, b2=b2: m0 + b2 * t**2)

    for theorem_id, sign in (("T3.1", +1), ("T3.2", -1)):
        phi = _random_trig(rng)
        lam, mu = rising_boundaries(phi)
        c = float(rng.uniform(0.0, 2.0))
        forcing = lambda x, t, u, c=c, s=sign: s * c * x * (a - x) * (1.0 + t)  # noqa: E731
        p = ProblemSpec(draw_alpha(), grid, phi, lam, mu, forcing, label=f"random {theorem_id} seed {seed}")
        check = min_bound_check if sign > 0 else max_bound_check
        experiments.append(Experiment(theorem_id, p.label, _bound(check, p)))

    for theorem_id, sign in (("C1", "nonneg"), ("C2", "nonpos")):
        c, k = float(rng.uniform(0.1, 2.0)), int(rng.integers(0, 3))
        s = 1.0 if sign == "nonneg" else -1.0
        forcing = lambda x, t, u, c=c, k=k, s=s: s * c * x * (a - x) * t**k  # noqa: E731
        p = ProblemSpec(draw_alpha(), grid, _zero, _zero, _zero, forcing, label=f"random {theorem_id} seed {seed}")
        experiments.append(Experiment(theorem_id, p.label, _bound(sign_preservation_check, p, sign)))

    phi = _random_trig(rng)
    lam, mu = rising_boundaries(phi)
    c = float(rng.uniform(-1.0, 1.0))
    p33 = ProblemSpec(draw_alpha(), grid, phi, lam, mu, lambda x, t, u, c=c: c * np.sin(np.pi * x / a) * (1.0 + t),
                      label=f"random T3.3 seed {seed}")
    cfg_a = SolverConfig(picard_tol=1e-10)
    cfg_b = SolverConfig(picard_tol=1e-10, damping=float(rng.uniform(0.5, 0.9)), picard_start="zero")
    experiments.append(Experiment("T3.3", p33.label, lambda: uniqueness_experiment(p33, cfg_a, cfg_b)))

    def zero_ends(f):
        # subtract the linear interpolant of the end values: homogeneous corners
        f0, fa = float(f(np.array([0.0]))[0]), float(f(np.array([a]))[0])
        return lambda x: f(x) - f0 - (fa - f0) * np.asarray(x, dtype=float) / a

    phi = zero_ends(_random_trig(rng))
    bump = zero_ends(_random_trig(rng))
    delta = float(rng.uniform(0.001, 0.05))
    scale = float(np.max(np.abs(bump(grid.x)))) or 1.0
    phi_alt = lambda x, phi=phi, bump=bump, d=delta / scale: phi(x) + d * bump(x)  # noqa: E731
    c = float(rng.uniform(-1.0, 1.0))
    p34 = ProblemSpec(draw_alpha(), grid, phi, _zero, _zero, lambda x, t, u, c=c: c * x * (a - x),
                      label=f"random T3.4 seed {seed}")
    experiments.append(Experiment("T3.4", p34.label, lambda: stability_experiment(p34, phi_alt)))

    c3, c1 = rng.uniform(0.0, 2.0, size=2)
    s0 = float(rng.uniform(-1.0, 1.0))
    forcing = lambda x, t, u, c3=c3, c1=c1, s0=s0: -c3 * u**3 - c1 * u + s0 * x * (a - x)  # noqa: E731
    p41 = ProblemSpec(draw_alpha(), grid, phi, _zero, _zero, forcing, linear=False, label=f"random T4.1 seed {seed}")
    experiments.append(Experiment("T4.1", p41.label, lambda: uniqueness_experiment(p41, cfg_a, cfg_b)))
    p42 = ProblemSpec(p41.alpha, grid, phi, _zero, _zero, forcing, linear=False, label=f"random T4.2 seed {seed}")
    experiments.append(Experiment("T4.2", p42.label, lambda: stability_experiment(p42, phi_alt)))
    return experiments


def select(experiments: list[Experiment], only) -> list[Experiment]:
    if not only:
        return experiments
    wanted = set(only)
    unknown = wanted - set(THEOREM_IDS)
    if unknown:
        raise ValueError(f"unknown theorem ids: {sorted(unknown)}")
    return [e for e in experiments if e.theorem_id in wanted]


def run_suite(experiments: list[Experiment], jobs: int = 1) -> list[CheckReport]:
    """Run experiments (concurrently when ``jobs > 1``), preserving order."""
    if jobs <= 1:
        return [e.run() for e in experiments]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda e: e.run(), experiments))


def applicable_checks(problem: ProblemSpec, field: Field, tol: float = THEOREM_TOL) -> list[CheckReport]:
    """Every bound check whose hypotheses hold for this problem, evaluated on ``field``."""
    candidates = [
        min_bound_check(problem, field, tol),
        max_bound_check(problem, field, tol),
        sign_preservation_check(problem, field, "nonneg", tol),
        sign_preservation_check(problem, field, "nonpos", tol),
    ]
    return [c for c in candidates if c.applicable]
