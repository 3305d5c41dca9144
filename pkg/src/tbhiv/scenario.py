"""Scenario files, runs and their CSV / summary outputs.

A scenario file is flat ``key = value`` text, one entry per line, with
``#`` starting a comment.  Every model parameter may be set by its
:class:`~tbhiv.model.Params` field name; initial compartments by
``init_<name>`` (e.g. ``init_L_T``).  Unknown keys are rejected.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .control import CostSpec, SweepOptions, constant_controls, evaluate_cost, fbsm_solve
from .integrate import TimeGrid, Trajectory, integrate_forward
from .model import (
    A, A_T, STATE_NAMES, DomainError, Params, disease_deaths_rate, rhs_uncontrolled, initial_state,
)

MODES = ("simulate", "analyze", "optimize", "compare")
CSV_HEADER = "t," + ",".join(STATE_NAMES) + ",u1,u2,N"
ADJOINT_HEADER = "t," + ",".join("lam_" + n for n in STATE_NAMES)
CSV_FORMAT = "%.12g"

_FLOAT_KEYS = ("T", "dt", "N0", "W1", "W2", "frozen_control", "omega", "tol")
_INT_KEYS = ("max_iter",)
_STR_KEYS = ("name", "mode", "cost", "compare_variants")
_INIT_KEYS = tuple("init_" + n for n in STATE_NAMES)


class ScenarioError(ValueError):
    """Invalid scenario file or scenario values."""


class RunError(RuntimeError):
    """A run failed after validation; carries the scenario name."""


@dataclass
class Scenario:
    name: str = "scenario"
    mode: str = "simulate"
    params: Params = field(default_factory=Params)
    N0: float = 30000.0
    initial: np.ndarray | None = None
    T: float = 50.0
    dt: float = 1.0 / 120.0
    cost: CostSpec = field(default_factory=CostSpec)
    sweep: SweepOptions = field(default_factory=SweepOptions)
    compare_variants: tuple[str, ...] = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ScenarioError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.initial is None:
            self.initial = initial_state(self.N0)
        self.initial = np.asarray(self.initial, dtype=float)
        if self.initial.shape != (len(STATE_NAMES),) or np.any(self.initial < 0):
            raise ScenarioError("initial state must have 11 non-negative entries")
        if not self.initial.sum() > 0:
            raise ScenarioError("initial population must be positive")
        if not self.T > 0 or not self.dt > 0:
            raise ScenarioError("T and dt must be positive")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.from_step(self.T, self.dt)


def parse_config(text: str, source: str = "<string>") -> dict[str, tuple[str, str]]:
    """Split ``key = value`` lines into ``{key: (value, location)}``."""
    entries: dict[str, tuple[str, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ScenarioError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ScenarioError(f"{where}: missing key")
        if key in entries:
            raise ScenarioError(f"{where}: duplicate key {key!r}")
        entries[key] = (value, where)
    return entries


def build_scenario(entries: dict[str, tuple[str, str]]) -> Scenario:
    """Scenario from parsed entries, defaults filled in."""
    param_names = set(Params.names())
    known = param_names | set(_FLOAT_KEYS) | set(_INT_KEYS) | set(_STR_KEYS) | set(_INIT_KEYS)
    for key, (_, where) in entries.items():
        if key not in known:
            raise ScenarioError(f"{where}: unknown key {key!r}")

    def get(key, conv, default):
        if key not in entries:
            return default
        value, where = entries[key]
        try:
            return conv(value)
        except ValueError as exc:
            raise ScenarioError(f"{where}: bad value for {key!r}: {value!r}") from exc

    def where_of(*keys):
        locs = [entries[k][1] for k in keys if k in entries]
        return locs[0] if locs else "<defaults>"

    overrides = {k: get(k, float, None) for k in param_names if k in entries}
    try:
        params = Params(**overrides)
    except DomainError as exc:
        raise ScenarioError(f"{where_of(*overrides)}: {exc}") from exc

    N0 = get("N0", float, 30000.0)
    if not N0 > 0:
        raise ScenarioError(f"{where_of('N0')}: N0 must be positive")
    initial = initial_state(N0)
    for i, key in enumerate(_INIT_KEYS):
        initial[i] = get(key, float, initial[i])

    try:
        cost = CostSpec(
            variant=get("cost", str, "J"),
            W1=get("W1", float, 50.0),
            W2=get("W2", float, 50.0),
            frozen=get("frozen_control", float, 0.0),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where_of('cost', 'W1', 'W2', 'frozen_control')}: {exc}") from exc

    sweep = SweepOptions(
        omega=get("omega", float, 0.5),
        tol=get("tol", float, 1e-4),
        max_iter=get("max_iter", int, 500),
    )
    if not 0 < sweep.omega <= 1 or not sweep.tol > 0 or sweep.max_iter < 1:
        raise ScenarioError(f"{where_of('omega', 'tol', 'max_iter')}: bad sweep options")

    variants = get("compare_variants", lambda s: tuple(v.strip() for v in s.split(",") if v.strip()), ())
    for v in variants:
        if v not in ("J", "J1", "J2", "J3"):
            raise ScenarioError(f"{where_of('compare_variants')}: unknown cost variant {v!r}")

    try:
        return Scenario(
            name=get("name", str, "scenario"),
            mode=get("mode", str, "simulate"),
            params=params,
            N0=N0,
            initial=initial,
            T=get("T", float, 50.0),
            dt=get("dt", float, 1.0 / 120.0),
            cost=cost,
            sweep=sweep,
            compare_variants=variants,
        )
    except ScenarioError as exc:
        raise ScenarioError(f"{where_of('mode', 'T', 'dt', *_INIT_KEYS)}: {exc}") from exc


def load_scenario(path, overrides: dict[str, str] | None = None) -> Scenario:
    """Read a scenario file; ``overrides`` (raw strings) win over file values."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    entries = parse_config(text, str(path))
    for key, value in (overrides or {}).items():
        entries[key] = (str(value), "<command line>")
    if "name" not in entries:
        entries["name"] = (path.stem, str(path))
    return build_scenario(entries)


# -- CSV ---------------------------------------------------------------------

def trajectory_table(traj: Trajectory, controls) -> np.ndarray:
    controls = np.asarray(controls, dtype=float)
    x = traj.values
    return np.column_stack([traj.times, x, controls, x.sum(axis=1)])


def write_trajectory_csv(path, traj: Trajectory, controls) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        np.savetxt(fh, trajectory_table(traj, controls), fmt=CSV_FORMAT,
                   delimiter=",", header=CSV_HEADER, comments="")
    return path


def write_adjoint_csv(path, adjoint: Trajectory) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        np.savetxt(fh, np.column_stack([adjoint.times, adjoint.values]), fmt=CSV_FORMAT,
                   delimiter=",", header=ADJOINT_HEADER, comments="")
    return path


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse a trajectory CSV into (times, states, controls)."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data[:, 0], data[:, 1:12], data[:, 12:14]


# -- runs --------------------------------------------------------------------

@dataclass
class RunReport:
    scenario: str
    mode: str
    fields: list[tuple[str, str]] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)
    converged: bool = True

    def add(self, key: str, value) -> None:
        if isinstance(value, float):
            value = f"{value:.12g}"
        elif isinstance(value, np.ndarray):
            value = " ".join(f"{v:.12g}" for v in value)
        self.fields.append((key, str(value)))

    def __getitem__(self, key: str) -> str:
        for k, v in self.fields:
            if k == key:
                return v
        raise KeyError(key)

    def text(self) -> str:
        lines = [f"scenario: {self.scenario}", f"mode: {self.mode}"]
        lines += [f"{k}: {v}" for k, v in self.fields]
        lines += [f"file: {p.name}" for p in self.files]
        return "\n".join(lines) + "\n"


def simulate(scenario: Scenario) -> Trajectory:
    """Uncontrolled trajectory (treatment fractions fixed at p and q)."""
    P = scenario.params
    return integrate_forward(lambda t, x: rhs_uncontrolled(x, P), scenario.initial, scenario.grid)


def cumulative_deaths(traj: Trajectory, params: Params) -> float:
    """Trapezoid integral of the disease-induced death rate over the run."""
    f = disease_deaths_rate(traj.values, params)
    return float(traj.grid.h * (f.sum() - 0.5 * (f[0] + f[-1])))


def _analyze(sc: Scenario, rep: RunReport) -> None:
    P = sc.params
    N0 = float(sc.initial.sum())
    rn = analysis.r0(P, N0)
    rep.add("N0", N0)
    rep.add("R1", rn.r1)
    rep.add("R2", rn.r2)
    rep.add("R0", rn.r0)
    rd = analysis.r0(P)
    rep.add("R1_at_dfe_population", rd.r1)
    rep.add("R2_at_dfe_population", rd.r2)
    rep.add("R0_at_dfe_population", rd.r0)
    rep.add("beta_star", analysis.beta_star(P))
    rep.add("dfe", analysis.dfe_full(P))
    st = analysis.full_dfe_stability(P)
    rep.add("dfe_stability", st.classification)
    rep.add("dfe_max_real_eigenvalue", float(np.max(st.eigenvalues.real)))
    rep.add("hiv_dfe_stability", analysis.hiv_dfe_stability(P).classification)
    try:
        eq = analysis.endemic_equilibrium_hiv(P)
    except analysis.NoEndemicEquilibrium:
        rep.add("hiv_endemic_equilibrium", "none")
    else:
        rep.add("hiv_endemic_equilibrium", eq)
        rep.add("hiv_endemic_stability", analysis.hiv_endemic_stability(P).classification)


def _optimize(sc: Scenario, rep: RunReport, out: Path, cost: CostSpec, suffix: str = ""):
    P, grid = sc.params, sc.grid
    res = fbsm_solve(sc.initial, P, cost, grid, sc.sweep)
    tag = f"_{cost.variant}" if suffix else ""
    rep.files.append(write_trajectory_csv(out / f"optimal{tag}.csv", res.state, res.controls))
    rep.files.append(write_adjoint_csv(out / f"adjoint{tag}.csv", res.adjoint))
    rep.add(f"cost_variant{tag}", cost.variant)
    rep.add(f"W1{tag}", float(cost.W1))
    rep.add(f"W2{tag}", float(cost.W2))
    if cost.variant in ("J2", "J3"):
        rep.add(f"frozen_control{tag}", float(cost.frozen))
    rep.add(f"cost_initial{tag}", res.initial_cost)
    rep.add(f"cost_optimal{tag}", res.cost)
    rep.add(f"iterations{tag}", res.iterations)
    rep.add(f"converged{tag}", res.converged)
    rep.add(f"final_rel_change{tag}", float(res.rel_change))
    rep.converged = rep.converged and res.converged
    return res


def run(scenario: Scenario, out_dir) -> RunReport:
    """Execute a scenario, writing CSVs and ``summary.txt`` into ``out_dir``.

    On failure, files written by this run are removed and the error is
    re-raised with the scenario name attached.
    """
    sc = scenario
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep = RunReport(sc.name, sc.mode)
    P, grid = sc.params, sc.grid
    try:
        rep.add("T", float(sc.T))
        rep.add("n_steps", grid.n_steps)
        rep.add("h", grid.h)
        if sc.mode == "analyze":
            _analyze(sc, rep)
        elif sc.mode == "simulate":
            traj = simulate(sc)
            ctrl = constant_controls(grid, P.p, P.q)
            rep.files.append(write_trajectory_csv(out / "trajectory.csv", traj, ctrl))
            rep.add("N_final", float(traj.final.sum()))
            rep.add("cumulative_disease_deaths", cumulative_deaths(traj, P))
        else:
            base = simulate(sc)
            base_ctrl = constant_controls(grid, P.p, P.q)
            res = _optimize(sc, rep, out, sc.cost)
            rep.add("cost_constant_controls", evaluate_cost(base, base_ctrl, sc.cost))
            rep.add("A_T_final_optimal", float(res.state.final[A_T]))
            rep.add("A_T_final_constant", float(base.final[A_T]))
            if sc.mode == "compare":
                rep.files.append(write_trajectory_csv(out / "baseline.csv", base, base_ctrl))
                d_base = cumulative_deaths(base, P)
                d_opt = cumulative_deaths(res.state, P)
                rep.add("deaths_constant", d_base)
                rep.add("deaths_optimal", d_opt)
                rep.add("deaths_reduction_fraction", 1 - d_opt / d_base if d_base > 0 else 0.0)
                arms = {"constant": base, sc.cost.variant: res.state}
                for v in sc.compare_variants:
                    if v == sc.cost.variant:
                        continue
                    other = CostSpec(v, sc.cost.W1, sc.cost.W2, sc.cost.frozen)
                    r = _optimize(sc, rep, out, other, suffix=v)
                    rep.add(f"deaths_optimal_{v}", cumulative_deaths(r.state, P))
                    arms[v] = r.state
                rep.files.append(_write_curves(out / "compare_curves.csv", arms, P))
        rep.files.append(out / "summary.txt")
        (out / "summary.txt").write_text(rep.text())
    except Exception as exc:
        for f in rep.files:
            try:
                os.remove(f)
            except OSError:
                pass
        raise RunError(f"scenario {sc.name!r} ({sc.mode}): {exc}") from exc
    return rep


def _write_curves(path: Path, arms: dict[str, Trajectory], P: Params) -> Path:
    """Per-arm A + A_T and cumulative disease deaths on the shared grid."""
    cols, names = [], ["t"]
    t = None
    for name, traj in arms.items():
        t = traj.times
        x = traj.values
        rate = disease_deaths_rate(x, P)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * traj.grid.h * (rate[1:] + rate[:-1]))])
        cols += [x[:, A] + x[:, A_T], cum]
        names += [f"A_plus_A_T_{name}", f"deaths_{name}"]
    with open(path, "w", newline="\n") as fh:
        np.savetxt(fh, np.column_stack([t] + cols), fmt=CSV_FORMAT, delimiter=",",
                   header=",".join(names), comments="")
    return path
