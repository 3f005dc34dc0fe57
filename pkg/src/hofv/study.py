"""Convergence-study orchestration and result emission."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .analysis import (ConvergenceReport, LevelResult, norm_errors, point_errors,
                       rate_table)
from .errors import ConfigError, HofvError, NonConvergence, SingularSystem
from .fvcore import TrialField, assemble_system
from .linsolve import relative_residual, solve_direct, solve_iterative
from .meshdual import build_uniform_mesh
from .polyquad import MAX_ORDER
from .problems import PROBLEMS, get_problem

log = logging.getLogger(__name__)

CSV_COLUMNS = ["N", "h", "e_G", "e_L", "e_N", "L2", "H1",
               "rate_G", "rate_L", "rate_N", "residual"]
FORMATS = ("csv", "md", "plot")


class SolverFailure(HofvError):
    """A linear solve failed inside a study; carries the (k, N) context."""

    def __init__(self, k, N, cause):
        super().__init__(f"solver failed for k={k}, N={N}: {cause}")
        self.k, self.N, self.cause = k, N, cause


@dataclass
class StudyConfig:
    problem: str = "paper"
    k: list = field(default_factory=lambda: [3, 4])
    levels: list = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])  # N = 2**s
    solver: str = "direct"
    tol: float = 1e-12
    load_quad: int | None = None  # None -> k + 2
    out: str = "results"
    format: list = field(default_factory=lambda: list(FORMATS))
    grad_norm: str = "l1"

    def __post_init__(self):
        self.k = [int(v) for v in _as_list(self.k)]
        self.levels = [int(v) for v in _as_list(self.levels)]
        self.format = [str(v) for v in _as_list(self.format)]
        self.validate()

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; known: {sorted(PROBLEMS)}")
        if not self.k or any(not 1 <= v <= MAX_ORDER for v in self.k):
            raise ConfigError(f"k values must lie in [1, {MAX_ORDER}]")
        if not self.levels or any(s < 0 for s in self.levels):
            raise ConfigError("levels must be nonnegative")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError("levels must be strictly ascending")
        if self.solver not in ("direct", "iterative"):
            raise ConfigError("solver must be 'direct' or 'iterative'")
        if not self.tol >= 1e-14:
            raise ConfigError("tol must be >= 1e-14")
        if self.load_quad is not None and self.load_quad < max(self.k) + 1:
            raise ConfigError("load quadrature order must be >= k+1 for every k")
        bad = set(self.format) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        if self.grad_norm not in ("l1", "euclid", "max"):
            raise ConfigError("grad_norm must be one of l1, euclid, max")

    @classmethod
    def from_file(cls, path, **overrides):
        """Read a JSON config; non-None ``overrides`` win over file values."""
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def _as_list(v):
    if isinstance(v, str):
        return parse_int_list(v) if re.fullmatch(r"[\d,.\s]+", v) else v.split(",")
    if isinstance(v, (int, float)):
        return [v]
    return list(v)


def parse_int_list(text):
    """``"3,4"`` -> [3, 4]; ``"1..6"`` -> [1, ..., 6]."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\d+)\.\.(\d+)", part)
        if m:
            out.extend(range(int(m.group(1)), int(m.group(2)) + 1))
        elif part.isdigit():
            out.append(int(part))
        else:
            raise ConfigError(f"cannot parse integer list {text!r}")
    return out


@dataclass
class LevelRun:
    """Everything produced for one (k, N) pair."""

    result: LevelResult
    u_h: TrialField
    system: object
    conservation: float  # max |flux + load| / ||b||_inf


def solve_level(problem, k, N, solver="direct", tol=1e-12, load_quad=None,
                grad_norm="l1", backend=None) -> LevelRun:
    """Build, solve and measure one uniform N x N mesh."""
    mesh = build_uniform_mesh(0.0, 1.0, 0.0, 1.0, N, N)
    system = assemble_system(mesh, k, problem.f, q=load_quad, backend=backend)
    try:
        if solver == "direct":
            x, _ = solve_direct(system.matrix, system.rhs)
        else:
            x, _ = solve_iterative(system.matrix, system.rhs, tol=tol)
    except (SingularSystem, NonConvergence) as exc:
        raise SolverFailure(k, N, exc) from exc
    # re-verified independently of whatever the solver reported
    residual = relative_residual(system.matrix, x, system.rhs)
    u_h = TrialField.from_interior(system.lattice, system.dof, x)
    e_N, e_L, e_G = point_errors(u_h, problem, system.dual, grad_norm=grad_norm)
    l2, h1 = norm_errors(u_h, problem)
    bnorm = np.abs(system.rhs).max(initial=0.0)
    imbalance = np.abs(system.local_imbalance(u_h)).max(initial=0.0)
    conservation = float(imbalance / bnorm) if bnorm > 0 else float(imbalance)
    errors = {"e_G": e_G, "e_L": e_L, "e_N": e_N, "L2": l2, "H1": h1}
    log.info("k=%d N=%d e_G=%.3e e_L=%.3e e_N=%.3e residual=%.2e", k, N, e_G, e_L, e_N, residual)
    return LevelRun(LevelResult(N, 1.0 / N, errors, residual), u_h, system, conservation)


def run_k(config: StudyConfig, k, backend=None) -> ConvergenceReport:
    problem = get_problem(config.problem)
    levels = [solve_level(problem, k, 2 ** s, config.solver, config.tol, config.load_quad,
                          config.grad_norm, backend).result
              for s in config.levels]
    if len(levels) == 1:
        return ConvergenceReport(k, levels, {kind: [] for kind in levels[0].errors})
    return rate_table(levels, k=k)


def run_study(config: StudyConfig, write=True) -> dict:
    """Run every (k, level) of ``config``; returns ``{k: ConvergenceReport}``."""
    reports = {k: run_k(config, k) for k in config.k}
    if write:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        for k, rep in reports.items():
            stem = out / f"{config.problem}_k{k}"
            if "csv" in config.format:
                stem.with_suffix(".csv").write_text(format_csv(rep))
            if "md" in config.format:
                stem.with_suffix(".md").write_text(format_markdown(rep, config.problem))
            if "plot" in config.format:
                stem.with_name(stem.name + "_plot.dat").write_text(format_plot_data(rep))
        (out / f"{config.problem}_config.json").write_text(
            json.dumps(asdict(config), indent=2, sort_keys=True) + "\n")
    return reports


def _sci(v):
    return "" if v is None else f"{v:.5e}"


def _rows(rep: ConvergenceReport):
    for i, lev in enumerate(rep.levels):
        def rate(kind):
            return rep.rates[kind][i - 1] if i > 0 and rep.rates.get(kind) else None
        yield lev, {"rate_G": rate("e_G"), "rate_L": rate("e_L"), "rate_N": rate("e_N")}


def format_csv(rep: ConvergenceReport) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for lev, rates in _rows(rep):
        e = lev.errors
        cells = [str(lev.N), _sci(lev.h), _sci(e["e_G"]), _sci(e["e_L"]), _sci(e["e_N"]),
                 _sci(e["L2"]), _sci(e["H1"]), _sci(rates["rate_G"]), _sci(rates["rate_L"]),
                 _sci(rates["rate_N"]), _sci(lev.residual)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def format_markdown(rep: ConvergenceReport, problem="") -> str:
    def r(v):
        return "---" if v is None else f"{v:.2f}"
    head = f"### problem `{problem}`, k = {rep.k}\n\n" if problem else ""
    lines = [head + "| N | e_G | rate | e_L | rate | e_N | rate | L2 | H1 | residual |",
             "|---|---|---|---|---|---|---|---|---|---|"]
    for lev, rates in _rows(rep):
        e = lev.errors
        first = lev is rep.levels[0]
        lines.append(
            f"| {lev.N} | {e['e_G']:.3e} | {'' if first else r(rates['rate_G'])} "
            f"| {e['e_L']:.3e} | {'' if first else r(rates['rate_L'])} "
            f"| {e['e_N']:.3e} | {'' if first else r(rates['rate_N'])} "
            f"| {e['L2']:.3e} | {e['H1']:.3e} | {lev.residual:.1e} |")
    return "\n".join(lines) + "\n"


def format_plot_data(rep: ConvergenceReport) -> str:
    """Blocks of ``log10(h) log10(error)`` per error kind, blank-line separated."""
    blocks = []
    for kind in ("e_G", "e_L", "e_N", "L2", "H1"):
        lines = [f"# series {kind} k={rep.k}", "# log10_h log10_error"]
        for lev in rep.levels:
            v = lev.errors[kind]
            if v > 0:
                lines.append(f"{np.log10(lev.h):.6f} {np.log10(v):.6f}")
        blocks.append("\n".join(lines))
    return "\n\n\n".join(blocks) + "\n"
