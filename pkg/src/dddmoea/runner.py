"""Experiment orchestration: configuration, the change loop, CSV output and comparisons."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ContractError, make_rng, splitmix64
from .ddm import GuidanceConfig
from .metrics import hv, hv_reference, igd, summarize, wilcoxon_rank_sum
from .moead import MoeadConfig, optimize, weight_vectors
from .problems import PROBLEM_IDS, TimeContext, get_problem, reference_front, time_of
from .response import ResponseConfig, new_history, normalize_strategy, record_truth, respond


class ConfigError(ValueError):
    """Invalid experiment configuration, detected before any computation."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "DF1"
    n_t: int = 10
    tau_t: int = 10
    changes: int = 30
    runs: int = 20
    strategy: str = "ddm"
    seed: int = 0
    N: int | None = None
    n: int = 10
    front_count: int | None = None
    jobs: int = 1
    moead: MoeadConfig = MoeadConfig()
    response: ResponseConfig = ResponseConfig()

    def population_size(self, m: int) -> int:
        return self.N if self.N is not None else (100 if m == 2 else 150)

    def problems(self) -> list[str]:
        if self.problem.lower() == "all":
            return list(PROBLEM_IDS)
        return [p.strip().upper() for p in self.problem.split(",") if p.strip()]

    def validate(self) -> ExperimentConfig:
        try:
            for pid in self.problems():
                get_problem(pid, self.n)
            normalize_strategy(self.strategy)
        except (KeyError, ContractError) as exc:
            raise ConfigError(str(exc.args[0] if exc.args else exc)) from None
        for name in ("n_t", "tau_t", "changes", "runs", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.N is not None and self.N < 3:
            raise ConfigError("N must be at least 3")
        return self


@dataclass
class EnvRow:
    env: int
    t: float
    igd: float
    hv: float
    r: np.ndarray
    resp_ms: float
    opt_ms: float


@dataclass
class RunRecord:
    problem: str
    strategy: str
    run: int
    seed: int
    rows: list[EnvRow] = field(default_factory=list)
    evaluations: int = 0

    @property
    def migd(self) -> float:
        return summarize([r.igd for r in self.rows])[0]

    @property
    def mhv(self) -> float:
        return summarize([r.hv for r in self.rows])[0]


class CountingProblem:
    """Wraps a problem instance and counts evaluated vectors."""

    def __init__(self, inner):
        self.inner = inner
        self.count = 0

    def evaluate(self, x, t):
        self.count += 1 if np.ndim(x) == 1 else np.shape(x)[0]
        return self.inner.evaluate(x, t)

    def __getattr__(self, name):
        return getattr(self.inner, name)


def run_seed(base: int, run: int) -> int:
    return splitmix64(base + run)


def run_single(cfg: ExperimentConfig, problem_id: str, run: int) -> RunRecord:
    """One independent run of the change loop."""
    seed = run_seed(cfg.seed, run)
    rng = make_rng(seed)
    base = get_problem(problem_id, cfg.n)
    problem = CountingProblem(base)
    N = cfg.population_size(base.m)
    weights = weight_vectors(N, base.m, cfg.moead.T)
    hist = new_history(cfg.response)
    rec = RunRecord(base.id, normalize_strategy(cfg.strategy), run, seed)
    for env in range(cfg.changes):
        t = time_of(TimeContext(cfg.n_t, cfg.tau_t, env * cfg.tau_t))
        t0 = time.perf_counter()
        init = respond(cfg.strategy, hist, problem, t, N, rng, cfg.response)
        t1 = time.perf_counter()
        pos = optimize(init, problem, t, cfg.tau_t, rng, cfg.moead, weights)
        t2 = time.perf_counter()
        ref = reference_front(base, t, cfg.front_count)
        r = hv_reference(ref.points)
        rec.rows.append(EnvRow(env, t, igd(ref, pos), hv(pos, r), r, (t1 - t0) * 1e3, (t2 - t1) * 1e3))
        record_truth(hist, pos, cfg.response)
    rec.evaluations = problem.count
    return rec


def run_experiment(cfg: ExperimentConfig) -> list[RunRecord]:
    """All runs for every configured problem, in (problem, run) order."""
    cfg.validate()
    tasks = [(cfg, pid, run) for pid in cfg.problems() for run in range(cfg.runs)]
    if cfg.jobs == 1 or len(tasks) == 1:
        return [run_single(*task) for task in tasks]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        futures = [pool.submit(run_single, *task) for task in tasks]
        return [f.result() for f in futures]


def _fmt(x: float) -> str:
    return repr(float(x))


def _open_for_write(path: str):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def emit_csv(records: list[RunRecord], path: str) -> list[str]:
    """Write ``<path>.rows.csv``, ``<path>.summary.csv`` and ``<path>.timing.csv``.

    Wall-clock times live in the timing file so that the rows file depends on
    the seed alone and is reproducible byte for byte.

    Returns:
        The paths written.
    """
    if not records:
        raise ContractError("no records to write")
    m = records[0].rows[0].r.size
    rows_path, summary_path, timing_path = (f"{path}.rows.csv", f"{path}.summary.csv", f"{path}.timing.csv")
    with _open_for_write(rows_path) as fh:
        w = csv.writer(fh)
        w.writerow(["run", "env", "t", "igd", "hv"] + [f"r_{j + 1}" for j in range(m)])
        for rec in records:
            for row in rec.rows:
                w.writerow([rec.run, row.env, _fmt(row.t), _fmt(row.igd), _fmt(row.hv)] + [_fmt(v) for v in row.r])
    with _open_for_write(timing_path) as fh:
        w = csv.writer(fh)
        w.writerow(["run", "env", "resp_ms", "opt_ms"])
        for rec in records:
            for row in rec.rows:
                w.writerow([rec.run, row.env, f"{row.resp_ms:.3f}", f"{row.opt_ms:.3f}"])
    with _open_for_write(summary_path) as fh:
        w = csv.writer(fh)
        w.writerow(["run", "migd", "mhv"])
        for rec in records:
            w.writerow([rec.run, _fmt(rec.migd), _fmt(rec.mhv)])
        migd = summarize([r.migd for r in records])
        mhv = summarize([r.mhv for r in records])
        w.writerow(["mean", _fmt(migd[0]), _fmt(mhv[0])])
        w.writerow(["std", _fmt(migd[1]), _fmt(mhv[1])])
    return [rows_path, summary_path, timing_path]


def write_config(cfg: ExperimentConfig, path: str) -> str:
    """Echo the effective configuration, defaults included, as INI."""
    target = f"{path}.config.ini"
    with _open_for_write(target) as fh:
        to_parser(cfg).write(fh)
    return target


def compare(strategies: list[str], cfg: ExperimentConfig,
            settings: list[tuple[int, int]] | None = None) -> list[dict]:
    """Rank-sum marks of every strategy against the first one.

    Every strategy reuses the same run seeds. A ``+`` in column
    ``<s>_migd`` means the reference strategy is significantly better than
    ``s`` on MIGD; ``-`` means significantly worse. MHV is compared the same
    way after negation.

    Returns:
        One dict per (problem, setting), in that order.
    """
    if len(strategies) < 2:
        raise ConfigError("compare needs at least two strategies")
    for s in strategies:
        try:
            normalize_strategy(s)
        except ContractError as exc:
            raise ConfigError(str(exc)) from None
    settings = settings or [(cfg.n_t, cfg.tau_t)]
    table = []
    for pid in cfg.problems():
        for n_t, tau_t in settings:
            per = {}
            for s in strategies:
                sub = dataclasses.replace(cfg, problem=pid, n_t=n_t, tau_t=tau_t, strategy=s)
                recs = run_experiment(sub)
                per[s] = (np.array([r.migd for r in recs]), np.array([r.mhv for r in recs]))
            table.append(compare_row(pid, n_t, tau_t, strategies, per))
    return table


def compare_row(pid: str, n_t: int, tau_t: int, strategies: list[str], per: dict) -> dict:
    ref = strategies[0]
    sizes = {len(per[s][0]) for s in strategies}
    if len(sizes) != 1:
        raise ContractError("strategies have different run counts")
    row = {"problem": pid, "n_t": n_t, "tau_t": tau_t}
    for s in strategies:
        migd, mhv = per[s]
        row[f"{s}_migd_mean"], row[f"{s}_migd_std"] = summarize(migd)
        row[f"{s}_mhv_mean"], row[f"{s}_mhv_std"] = summarize(mhv)
    for s in strategies[1:]:
        row[f"{s}_migd"] = wilcoxon_rank_sum(per[ref][0], per[s][0])[2]
        row[f"{s}_mhv"] = wilcoxon_rank_sum(-per[ref][1], -per[s][1])[2]
    return row


def write_table(rows: list[dict], path: str) -> str:
    with _open_for_write(path) as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()})
    return path


# configuration files

_SECTIONS = {
    "experiment": {"problem": str, "nt": int, "taut": int, "changes": int, "runs": int, "strategy": str,
                   "seed": int, "N": int, "n": int, "front_count": int, "jobs": int},
    "moead": {"T": int, "nr": int, "delta": float, "eta_c": float, "eta_m": float, "pc": float, "pm": float},
    "ddm": {"K": int, "psi_min": float, "psi_max": float, "lambda": float, "prior": str, "schedule": str,
            "sampling": str},
    "response": {"frac_pred": float, "frac_last": float, "frac_rand": float},
    "knee": {"N_s": int, "deterministic_theta": bool},
}
_EXPERIMENT_FIELDS = {"nt": "n_t", "taut": "tau_t"}


def _parse_value(kind, raw: str, where: str):
    try:
        if kind is bool:
            return configparser.ConfigParser.BOOLEAN_STATES[raw.strip().lower()]
        return kind(raw)
    except (KeyError, ValueError):
        raise ConfigError(f"bad value {raw!r} for {where}") from None


def read_config(path: str) -> dict[str, dict]:
    """Parse an INI file into ``{section: {key: value}}`` with typed values."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    out: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        keys = _SECTIONS[section]
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigError(f"unknown key {section}.{key}")
            out[section][key] = _parse_value(keys[key], raw, f"{section}.{key}")
    return out


def build_config(values: dict[str, dict]) -> ExperimentConfig:
    """ExperimentConfig from sectioned values; missing keys keep defaults."""
    exp = {_EXPERIMENT_FIELDS.get(k, k): v for k, v in values.get("experiment", {}).items()}
    mo = dict(values.get("moead", {}))
    dd = dict(values.get("ddm", {}))
    rs = dict(values.get("response", {}))
    kn = dict(values.get("knee", {}))
    try:
        guidance = GuidanceConfig(
            psi_min=dd.pop("psi_min", 0.1), psi_max=dd.pop("psi_max", 0.5), lam=dd.pop("lambda", 2.0)
        )
        response = ResponseConfig(guidance=guidance, **dd, **rs, **kn)
        moead = MoeadConfig(**mo)
        cfg = ExperimentConfig(moead=moead, response=response, **exp)
    except (ContractError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def to_parser(cfg: ExperimentConfig) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    r, g, mo = cfg.response, cfg.response.guidance, cfg.moead
    parser["experiment"] = {
        "problem": cfg.problem, "nt": str(cfg.n_t), "taut": str(cfg.tau_t), "changes": str(cfg.changes),
        "runs": str(cfg.runs), "strategy": cfg.strategy, "seed": str(cfg.seed), "n": str(cfg.n),
        "jobs": str(cfg.jobs),
    }
    if cfg.N is not None:
        parser["experiment"]["N"] = str(cfg.N)
    if cfg.front_count is not None:
        parser["experiment"]["front_count"] = str(cfg.front_count)
    parser["moead"] = {k: str(v) for k, v in dataclasses.asdict(mo).items() if v is not None}
    parser["ddm"] = {"K": str(r.K), "psi_min": str(g.psi_min), "psi_max": str(g.psi_max),
                     "lambda": str(g.lam), "prior": r.prior, "schedule": r.schedule,
                     "sampling": r.sampling}
    parser["response"] = {"frac_pred": str(r.frac_pred), "frac_last": str(r.frac_last),
                          "frac_rand": str(r.frac_rand)}
    parser["knee"] = {"N_s": str(r.N_s), "deterministic_theta": str(r.deterministic_theta).lower()}
    return parser


def output_prefix(path: str, problem: str, several: bool) -> str:
    return f"{path}.{problem}" if several else path


def ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
