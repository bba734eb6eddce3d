"""Config-driven experiments: build a problem, solve it, compare with the oracle, write files.

A config is a JSON object with up to five sections::

    {"kind": "stommel-fd",
     "problem":   {"N": 11, "epsilon": 0.1, "boundary_weight": "auto"},
     "encoding":  {"zoom": 0.8, "n_spin": 3, "epochs": 30, "center": 0, "scale": 1, "iterate": true},
     "anneal":    {"reads": 100, "sweeps": 10, "seed": 0,
                   "schedule": {"kind": "auto", "steps": 200, "target": 0.5}},
     "embedding": {"hardware": "chimera", "params": {"m": 4}, "chain_strength": "auto"}}

``sweep`` configs instead carry ``base`` (another config), ``grid`` (dotted
key -> list of values) and ``seeds``.  See ``configs/README.md`` for every key.
"""
from __future__ import annotations

import copy
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from dataclasses import field as dc_field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import embedding as emb_mod
from . import problems, sa, svg
from .encoding import IterativeResult, RealCost, ZoomParams, solve_iterative
from .errors import AnnealerError, ConfigError, EmbeddingFailure, NumericError
from .ising import IsingModel, brute_force_ground_state, energy, toy_model, gadget_model

KINDS = ("toy", "stommel-fd", "stommel-spectral", "nonlinear", "embed-demo", "sweep")
PDE_KINDS = ("stommel-fd", "stommel-spectral", "nonlinear")

_REQUIRED = {
    "stommel-fd": ("problem.N", "problem.epsilon"),
    "stommel-spectral": ("problem.n_x", "problem.epsilon"),
    "nonlinear": ("problem.n_basis",),
    "sweep": ("base", "grid"),
}

_ALLOWED = {
    "problem": {"N", "epsilon", "boundary_weight", "n_x", "n_y", "nodes", "n_basis", "bc_penalty"},
    "encoding": {"zoom", "n_spin", "epochs", "center", "scale", "iterate"},
    "anneal": {"reads", "sweeps", "seed", "schedule"},
    "embedding": {"hardware", "params", "chain_strength", "retries", "method"},
}

DEFAULT_ANNEAL = {"reads": 100, "sweeps": 10, "seed": 0,
                  "schedule": {"kind": "auto", "steps": 200, "target": 0.5, "final_ratio": 1e-3}}
DEFAULT_ENCODING = {"zoom": 0.8, "n_spin": 3, "epochs": 30, "center": 0.0, "scale": 1.0, "iterate": True}


def _get(cfg: dict, dotted: str):
    node = cfg
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            raise KeyError(dotted)
        node = node[part]
    return node


def _set(cfg: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = cfg
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def _number(section: dict, key: str, kind=float, lo=None, hi=None, lo_open=False, where=""):
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}{key} must be a number, got {v!r}")
    if kind is int and int(v) != v:
        raise ConfigError(f"{where}{key} must be an integer, got {v!r}")
    v = kind(v)
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(f"{where}{key} must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{where}{key} must be <= {hi}, got {v}")
    return v


def resolve_config(raw: dict, kind: str | None = None) -> dict:
    """Validate ``raw`` and fill defaults; raises :class:`ConfigError` naming the bad key."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = copy.deepcopy(raw)
    if kind is not None:
        if "kind" in cfg and cfg["kind"] != kind:
            raise ConfigError(f"config kind {cfg['kind']!r} does not match requested {kind!r}")
        cfg["kind"] = kind
    kind = cfg.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")
    for key in _REQUIRED.get(kind, ()):
        try:
            _get(cfg, key)
        except KeyError:
            raise ConfigError(f"missing required key '{key}' for experiment kind {kind!r}") from None
    if kind == "sweep":
        return _resolve_sweep(cfg)
    for section, allowed in _ALLOWED.items():
        sec = cfg.get(section)
        if sec is None:
            continue
        if not isinstance(sec, dict):
            raise ConfigError(f"'{section}' must be an object")
        extra = sorted(set(sec) - allowed)
        if extra:
            raise ConfigError(f"unknown key '{section}.{extra[0]}'")
    extra = sorted(set(cfg) - set(_ALLOWED) - {"kind", "output"})
    if extra:
        raise ConfigError(f"unknown top-level key '{extra[0]}'")

    anneal = {**DEFAULT_ANNEAL, **cfg.get("anneal", {})}
    anneal["schedule"] = {**(DEFAULT_ANNEAL["schedule"] if "schedule" not in cfg.get("anneal", {}) else {}),
                          **anneal["schedule"]}
    _number(anneal, "reads", int, 1, where="anneal.")
    _number(anneal, "sweeps", int, 1, where="anneal.")
    _number(anneal, "seed", int, 0, where="anneal.")
    _schedule_from(anneal["schedule"])
    cfg["anneal"] = anneal

    if kind in PDE_KINDS:
        enc = {**DEFAULT_ENCODING, **cfg.get("encoding", {})}
        _number(enc, "zoom", float, 0.0, 1.0, lo_open=True, where="encoding.")
        _number(enc, "n_spin", int, 1, 30, where="encoding.")
        _number(enc, "epochs", int, 1, where="encoding.")
        _number(enc, "scale", float, 0.0, lo_open=True, where="encoding.")
        if isinstance(enc["center"], list):
            if not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in enc["center"]):
                raise ConfigError("encoding.center must be a number or a list of numbers")
        else:
            _number(enc, "center", float, where="encoding.")
        if not isinstance(enc["iterate"], bool):
            raise ConfigError("encoding.iterate must be true or false")
        cfg["encoding"] = enc
        cfg["problem"] = _resolve_problem(kind, cfg.get("problem", {}))
        if isinstance(enc["center"], list) and len(enc["center"]) != _n_unknowns(kind, cfg["problem"]):
            raise ConfigError("encoding.center list length does not match the number of unknowns")

    if cfg.get("embedding") is not None:
        cfg["embedding"] = _resolve_embedding(cfg["embedding"])
    elif kind == "embed-demo":
        cfg["embedding"] = _resolve_embedding({"hardware": "demo"})
    return cfg


def _n_unknowns(kind, prob) -> int:
    if kind == "stommel-fd":
        return prob["N"] ** 2
    if kind == "stommel-spectral":
        return prob["n_x"] * prob["n_y"]
    return prob["n_basis"]


def _resolve_problem(kind: str, prob: dict) -> dict:
    try:
        if kind == "stommel-fd":
            out = {"N": prob["N"], "epsilon": prob["epsilon"], "boundary_weight": prob.get("boundary_weight", 1.0)}
            _number(out, "N", int, 3, where="problem.")
            _number(out, "epsilon", float, 0.0, lo_open=True, where="problem.")
            if out["boundary_weight"] != "auto":
                _number(out, "boundary_weight", float, 0.0, lo_open=True, where="problem.")
            problems.StommelConfig(**out)
        elif kind == "stommel-spectral":
            out = {"n_x": prob["n_x"], "epsilon": prob["epsilon"], "n_y": prob.get("n_y", 2),
                   "nodes": prob.get("nodes", 64)}
            _number(out, "n_x", int, 1, where="problem.")
            _number(out, "n_y", int, 1, where="problem.")
            _number(out, "nodes", int, 2, where="problem.")
            _number(out, "epsilon", float, 0.0, lo_open=True, where="problem.")
            problems.SpectralConfig(**out)
        else:
            out = {"n_basis": prob["n_basis"], "bc_penalty": prob.get("bc_penalty", 10.0)}
            _number(out, "n_basis", int, 2, where="problem.")
            _number(out, "bc_penalty", float, 0.0, lo_open=True, where="problem.")
            problems.NonlinearConfig(**out)
    except KeyError as exc:
        raise ConfigError(f"missing required key 'problem.{exc.args[0]}'") from None
    return out


def _schedule_from(sched: dict) -> sa.Schedule:
    if not isinstance(sched, dict):
        raise ConfigError("anneal.schedule must be an object")
    kind = sched.get("kind", "auto")
    allowed = {"auto": {"kind", "steps", "target", "final_ratio", "t_final"},
               "geometric": {"kind", "steps", "t0", "ratio"},
               "logarithmic": {"kind", "steps", "a", "alpha"}}
    if kind not in allowed:
        raise ConfigError(f"anneal.schedule.kind must be auto, geometric or logarithmic, got {kind!r}")
    extra = sorted(set(sched) - allowed[kind])
    if extra:
        raise ConfigError(f"unknown key 'anneal.schedule.{extra[0]}' for a {kind} schedule")
    args = {k: v for k, v in sched.items() if k != "kind"}
    for k, v in args.items():
        if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
            raise ConfigError(f"anneal.schedule.{k} must be a number, got {v!r}")
    if "steps" in args:
        _number(args, "steps", int, 1, where="anneal.schedule.")
    return sa.Schedule(kind=kind, **args)


def _resolve_embedding(emb: dict) -> dict:
    if not isinstance(emb, dict):
        raise ConfigError("'embedding' must be an object")
    extra = sorted(set(emb) - _ALLOWED["embedding"])
    if extra:
        raise ConfigError(f"unknown key 'embedding.{extra[0]}'")
    out = {"hardware": emb.get("hardware", "demo"), "params": emb.get("params", {}),
           "chain_strength": emb.get("chain_strength", "auto"), "retries": emb.get("retries", 10),
           "method": emb.get("method", "auto")}
    if out["hardware"] not in ("complete", "grid", "demo", "chimera", "custom"):
        raise ConfigError(f"embedding.hardware must be complete, grid, demo, chimera or custom, got {out['hardware']!r}")
    if out["chain_strength"] != "auto":
        _number(out, "chain_strength", float, 0.0, lo_open=True, where="embedding.")
    _number(out, "retries", int, 1, where="embedding.")
    if out["method"] not in ("auto", "heuristic", "clique"):
        raise ConfigError("embedding.method must be auto, heuristic or clique")
    if not isinstance(out["params"], dict):
        raise ConfigError("embedding.params must be an object")
    return out


def _resolve_sweep(cfg: dict) -> dict:
    base = cfg["base"]
    if not isinstance(base, dict) or base.get("kind") not in PDE_KINDS + ("toy",):
        raise ConfigError("sweep.base must be a config of kind toy, stommel-fd, stommel-spectral or nonlinear")
    grid = cfg["grid"]
    if not isinstance(grid, dict) or not grid or not all(isinstance(v, list) and v for v in grid.values()):
        raise ConfigError("sweep grid must map dotted keys to non-empty lists")
    seeds = cfg.get("seeds", [base.get("anneal", {}).get("seed", 0)])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigError("sweep seeds must be a non-empty list of non-negative integers")
    workers = cfg.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("sweep workers must be a positive integer")
    for combo in itertools.product(*grid.values()):
        cell = copy.deepcopy(base)
        for key, value in zip(grid, combo):
            _set(cell, key, value)
        resolve_config(cell)
    return {"kind": "sweep", "base": resolve_config(base), "grid": grid, "seeds": seeds, "workers": workers}


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None


# ---------------------------------------------------------------- problems


@dataclass
class Problem:
    kind: str
    cost: RealCost
    oracle_w: np.ndarray
    oracle_cost: float
    render: Callable[[np.ndarray], np.ndarray]
    oracle_seconds: float
    residual: Callable[[np.ndarray], float] | None = None


def build_problem(cfg: dict) -> Problem:
    kind, prob = cfg["kind"], cfg["problem"]
    t0 = time.perf_counter()
    if kind == "stommel-fd":
        sc = problems.StommelConfig(**prob)
        system = problems.build_stommel_fd(sc)
        cost = problems.least_squares_quadratic(system)
        w = problems.solve_quadratic_exact(cost)
        return Problem(kind, cost, w, system.residual_cost(w),
                       lambda x: problems.stommel_fd_field(x, sc.N), time.perf_counter() - t0,
                       system.residual_cost)
    if kind == "stommel-spectral":
        sc = problems.SpectralConfig(**prob)
        cost = problems.build_stommel_spectral(sc)
        w = problems.solve_quadratic_exact(cost)
        return Problem(kind, cost, w, cost(w), lambda x: problems.spectral_field(x, sc),
                       time.perf_counter() - t0)
    nc = problems.NonlinearConfig(**prob)
    cost = problems.build_nonlinear_ode(nc)
    # y = 1 + x**2 solves the ODE and both boundary conditions exactly
    w = np.zeros(nc.n_basis)
    w[0] = w[2] = 1.0
    return Problem(kind, cost, w, cost(w), problems.nonlinear_field, time.perf_counter() - t0)


# ---------------------------------------------------------------- annealers


def _hardware_for(emb_cfg: dict, n_logical: int) -> emb_mod.HardwareGraph:
    kind, params = emb_cfg["hardware"], dict(emb_cfg["params"])
    if kind == "chimera" and "m" not in params:
        params["m"] = max(1, math.ceil(n_logical / params.get("t", 4)))
    elif kind == "complete" and "n" not in params:
        params["n"] = n_logical
    elif kind == "grid" and "rows" not in params:
        side = max(2, math.ceil(2 * math.sqrt(n_logical)))
        params.update(rows=side, cols=params.get("cols", side))
    return emb_mod.generate_hardware_graph(kind, **params)


class EmbeddedAnnealer:
    """Route each logical model through embed -> anneal -> unembed.

    Embeddings are cached per coupling-graph structure, so a zoom run whose
    graph does not change pays for the search once.
    """

    def __init__(self, params: sa.AnnealParams, emb_cfg: dict):
        self.params = params
        self.cfg = emb_cfg
        self._cache: dict[frozenset, emb_mod.ChainEmbedding] = {}
        self.stats: list[dict] = []

    def embedding_for(self, model: IsingModel) -> emb_mod.ChainEmbedding:
        graph = emb_mod.coupling_graph(model)
        key = frozenset(graph.edges)
        if key in self._cache:
            return self._cache[key]
        hw = _hardware_for(self.cfg, model.n_spins)
        found = None
        method = self.cfg["method"]
        n = graph.number_of_nodes()
        # on chimera the clique layout always fits when it exists and costs nothing to build
        if method in ("clique", "auto"):
            found = emb_mod.chimera_clique_embedding(n, hw)
            if found is not None and emb_mod.check_embedding(found, graph):
                found = None
        if found is None and method != "clique":
            found = emb_mod.find_embedding(graph, hw, seed=self.params.seed, retries=self.cfg["retries"])
        if found is None:
            raise EmbeddingFailure(f"no embedding of {n} logical spins into {self.cfg['hardware']} "
                                   f"hardware with {hw.n_qubits} qubits")
        self._cache[key] = found
        return found

    def chain_strength(self, model: IsingModel) -> float:
        p = self.cfg["chain_strength"]
        return emb_mod.default_chain_strength(model) if p == "auto" else float(p)

    def run(self, model: IsingModel, seed: int) -> np.ndarray:
        emb = self.embedding_for(model)
        embedded = emb_mod.embed_model(model, emb, self.chain_strength(model))
        res = sa.anneal(embedded.physical, _with_seed(self.params, seed))
        self.stats.append({"qubits_used": emb.n_qubits_used(), "max_chain": emb.max_chain_length(),
                           "chain_strength": embedded.chain_strength,
                           "chains_broken": sum(1 for c in emb.chains if len(set(res.state[list(c)])) > 1)})
        return emb_mod.unembed(res.state, emb)

    def __call__(self, model: IsingModel, epoch: int) -> np.ndarray:
        return self.run(model, _epoch_seed(self.params.seed, epoch))


def _epoch_seed(seed: int, epoch: int) -> int:
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1)[0])


def _with_seed(params: sa.AnnealParams, seed: int) -> sa.AnnealParams:
    return sa.AnnealParams(params.schedule, params.reads, params.sweeps, seed)


def anneal_params_from(cfg: dict) -> sa.AnnealParams:
    a = cfg["anneal"]
    return sa.AnnealParams(_schedule_from(a["schedule"]), a["reads"], a["sweeps"], a["seed"])


def _annealer(cfg: dict):
    params = anneal_params_from(cfg)
    if cfg.get("embedding") is not None:
        return EmbeddedAnnealer(params, cfg["embedding"])
    return sa.make_annealer(params)


# ---------------------------------------------------------------- reports


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    epoch_cost: list[float]
    best_cost: list[float]
    solution: np.ndarray
    final_cost: float
    oracle_solution: np.ndarray | None = None
    oracle_cost: float | None = None
    relative_error: float | None = None
    field: np.ndarray | None = None
    timings: dict[str, float] = dc_field(default_factory=dict)
    extra: dict[str, Any] = dc_field(default_factory=dict)
    files: dict[str, str] = dc_field(default_factory=dict)


def run(cfg: dict, out_dir=None) -> ExperimentReport:
    """Run a resolved config and, when ``out_dir`` is given, write the output files."""
    kind = cfg["kind"]
    if kind == "sweep":
        report = run_sweep(cfg, out_dir)
        return report
    if kind == "toy":
        report = _run_toy(cfg)
    elif kind == "embed-demo":
        report = _run_embed_demo(cfg)
    else:
        report = _run_pde(cfg)
    if out_dir is not None:
        emit_outputs(report, out_dir)
    return report


def _run_toy(cfg: dict) -> ExperimentReport:
    model = toy_model()
    t0 = time.perf_counter()
    gs, e_gs = brute_force_ground_state(model)[:2]
    t_oracle = time.perf_counter() - t0
    t0 = time.perf_counter()
    ann = _annealer(cfg)
    if isinstance(ann, EmbeddedAnnealer):
        state = ann.run(model, cfg["anneal"]["seed"])
    else:
        state = sa.anneal(model, anneal_params_from(cfg)).state
    t_solve = time.perf_counter() - t0
    e = energy(model, state)
    return ExperimentReport("toy", cfg, [e], [e], state.astype(float), e, gs.astype(float), e_gs,
                            float(np.linalg.norm(state - gs) / np.linalg.norm(gs)), None,
                            {"oracle_seconds": t_oracle, "solve_seconds": t_solve})


def _run_embed_demo(cfg: dict) -> ExperimentReport:
    model = gadget_model()
    t0 = time.perf_counter()
    gs, e_gs = brute_force_ground_state(model)[:2]
    t_oracle = time.perf_counter() - t0
    ann = EmbeddedAnnealer(anneal_params_from(cfg), cfg["embedding"])
    emb = ann.embedding_for(model)
    P = ann.chain_strength(model)
    embedded = emb_mod.embed_model(model, emb, P)
    extra: dict[str, Any] = {"chains": [list(c) for c in emb.chains], "chain_strength": P,
                             "penalty_edges": len(embedded.penalty_edges),
                             "hardware_qubits": emb.hardware.n_qubits}
    t0 = time.perf_counter()
    if emb.hardware.n_qubits <= 20:
        check = emb_mod.check_penalty(model, emb, P)
        extra["physical_ground_state_consistent"] = check.chain_consistent
        extra["physical_ground_state_preserved"] = check.ground_state_preserved
        sweep = emb_mod.penalty_sweep(model, emb, [P * 2.0 ** -k for k in range(10, -1, -1)])
        extra["penalty_sweep"] = [(c.chain_strength, c.ok) for c in sweep]
    state = ann.run(model, cfg["anneal"]["seed"])
    t_solve = time.perf_counter() - t0
    extra.update(ann.stats[-1])
    e = energy(model, state)
    rep = ExperimentReport("embed-demo", cfg, [e], [e], state.astype(float), e, gs.astype(float), e_gs,
                           None, None, {"oracle_seconds": t_oracle, "solve_seconds": t_solve}, extra)
    rep.files["hardware.txt"] = emb.hardware.dumps()
    rep.files["embedding.txt"] = emb.dumps()
    return rep


def _run_pde(cfg: dict) -> ExperimentReport:
    prob = build_problem(cfg)
    enc = cfg["encoding"]
    epochs = enc["epochs"] if enc["iterate"] else 1
    zp = ZoomParams(enc["zoom"], enc["n_spin"], epochs, enc["center"], enc["scale"])
    ann = _annealer(cfg)
    t0 = time.perf_counter()
    try:
        res: IterativeResult = solve_iterative(prob.cost, zp, ann)
    except AnnealerError as exc:
        if isinstance(exc.cause, (EmbeddingFailure, ConfigError, NumericError)):
            raise exc.cause from None
        raise
    t_solve = time.perf_counter() - t0
    w = res.best_w
    final = prob.cost(w)
    if not np.all(np.isfinite(w)) or not math.isfinite(final):
        raise NumericError("solver produced a non-finite solution")
    denom = np.linalg.norm(prob.oracle_w)
    rel = float(np.linalg.norm(w - prob.oracle_w) / denom) if denom > 0 else float(np.linalg.norm(w))
    extra: dict[str, Any] = {"n_unknowns": prob.cost.n_vars, "spins_per_epoch": res.n_spins[0]}
    if prob.residual is not None:
        extra["residual_cost"] = prob.residual(w)
    if isinstance(ann, EmbeddedAnnealer) and ann.stats:
        extra["max_chain"] = max(s["max_chain"] for s in ann.stats)
        extra["qubits_used"] = max(s["qubits_used"] for s in ann.stats)
        extra["chains_broken_total"] = sum(s["chains_broken"] for s in ann.stats)
    return ExperimentReport(cfg["kind"], cfg, res.epoch_cost, res.best_cost, w, final, prob.oracle_w,
                            prob.oracle_cost, rel, prob.render(w),
                            {"oracle_seconds": prob.oracle_seconds, "solve_seconds": t_solve}, extra)


# ---------------------------------------------------------------- sweeps


def sweep_cells(cfg: dict) -> list[tuple[dict, dict]]:
    """``(overrides, resolved config)`` for every grid cell and seed, in row-major order."""
    cells = []
    keys = list(cfg["grid"])
    for combo in itertools.product(*cfg["grid"].values()):
        for seed in cfg["seeds"]:
            cell = copy.deepcopy(cfg["base"])
            overrides = dict(zip(keys, combo))
            for k, v in overrides.items():
                _set(cell, k, v)
            cell["anneal"]["seed"] = seed
            cells.append(({**overrides, "seed": seed}, resolve_config(cell)))
    return cells


def _run_cell(args):
    cell_cfg, out = args
    rep = run(cell_cfg, out)
    return rep.final_cost, rep.relative_error, rep.timings.get("solve_seconds", 0.0)


def run_sweep(cfg: dict, out_dir=None) -> ExperimentReport:
    cells = sweep_cells(cfg)
    jobs = []
    for k, (_, cell_cfg) in enumerate(cells):
        sub = None if out_dir is None else str(Path(out_dir) / f"run_{k:03d}")
        jobs.append((cell_cfg, sub))
    t0 = time.perf_counter()
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    rows = [{**ov, "final_cost": r[0], "relative_error": r[1]} for (ov, _), r in zip(cells, results)]
    costs = [r[0] for r in results]
    medians = {}
    keys = list(cfg["grid"])
    for combo in itertools.product(*cfg["grid"].values()):
        vals = [row["final_cost"] for row in rows if all(row[k] == v for k, v in zip(keys, combo))]
        medians[json.dumps(dict(zip(keys, combo)), sort_keys=True)] = float(np.median(vals))
    rep = ExperimentReport("sweep", cfg, costs, list(np.minimum.accumulate(costs)), np.array(costs),
                           float(min(costs)), timings={"solve_seconds": time.perf_counter() - t0},
                           extra={"rows": rows, "medians": medians})
    if out_dir is not None:
        emit_sweep(rep, out_dir)
    return rep


# ---------------------------------------------------------------- outputs


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    if isinstance(v, np.ndarray):
        return json.dumps([_plain(x) for x in v.tolist()])
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_plain(v), sort_keys=True)
    return str(v)


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def emit_outputs(report: ExperimentReport, out_dir) -> list[Path]:
    """Write convergence.csv, solution.csv, report.txt and field.svg (plus any extra files)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    conv = ["epoch,cost,best_cost"]
    conv += [f"{k},{c!r},{b!r}" for k, (c, b) in enumerate(zip(map(float, report.epoch_cost),
                                                               map(float, report.best_cost)))]
    _write(out / "convergence.csv", "\n".join(conv) + "\n")
    written.append(out / "convergence.csv")

    meta = [f"# kind: {report.kind}", f"# n_values: {len(report.solution)}",
            f"# final_cost: {float(report.final_cost)!r}"]
    if report.kind == "stommel-fd":
        meta.append(f"# layout: row-major psi[j, i] on an {report.config['problem']['N']}x{report.config['problem']['N']} grid")
    elif report.kind == "stommel-spectral":
        meta.append("# layout: sine coefficients, zonal mode outer, meridional mode inner")
    elif report.kind == "nonlinear":
        meta.append("# layout: monomial coefficients w_m of y(x) = sum w_m x^m")
    else:
        meta.append("# layout: spin values")
    rows = ["index,value"] + [f"{k},{float(v)!r}" for k, v in enumerate(report.solution)]
    _write(out / "solution.csv", "\n".join(meta + rows) + "\n")
    written.append(out / "solution.csv")

    lines = [f"kind = {report.kind}", f"final_cost = {float(report.final_cost)!r}",
             f"epochs = {len(report.epoch_cost)}"]
    if report.oracle_cost is not None:
        lines.append(f"oracle_cost = {float(report.oracle_cost)!r}")
    if report.relative_error is not None:
        lines.append(f"relative_l2_error = {report.relative_error!r}")
    lines.append(f"solution = {_fmt(report.solution)}")
    if report.oracle_solution is not None:
        lines.append(f"oracle_solution = {_fmt(report.oracle_solution)}")
    for k in sorted(report.extra):
        lines.append(f"{k} = {_fmt(report.extra[k])}")
    for k in sorted(report.timings):
        lines.append(f"{k} = {report.timings[k]:.6f}")
    lines.append(f"config = {json.dumps(_plain(report.config), sort_keys=True)}")
    _write(out / "report.txt", "\n".join(lines) + "\n")
    written.append(out / "report.txt")

    title = f"{report.kind}  cost {float(report.final_cost):.4g}"
    if report.field is not None and np.ndim(report.field) == 2:
        text = svg.heatmap(report.field, title)
    elif report.field is not None:
        f = np.asarray(report.field)
        text = svg.line_plot(np.linspace(0.0, 1.0, len(f)), f, title)
    else:
        text = svg.line_plot(np.arange(len(report.solution)), report.solution, title)
    _write(out / "field.svg", text)
    written.append(out / "field.svg")

    for name, text in report.files.items():
        _write(out / name, text)
        written.append(out / name)
    return written


def emit_sweep(report: ExperimentReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = report.extra["rows"]
    keys = list(rows[0])
    text = [",".join(keys)] + [",".join(_fmt(r[k]) if not isinstance(r[k], str) else r[k] for k in keys)
                              for r in rows]
    _write(out / "summary.csv", "\n".join(text) + "\n")
    lines = ["kind = sweep", f"runs = {len(rows)}"]
    for cell, med in report.extra["medians"].items():
        lines.append(f"median_final_cost {cell} = {med!r}")
    lines.append(f"solve_seconds = {report.timings['solve_seconds']:.6f}")
    lines.append(f"config = {json.dumps(_plain(report.config), sort_keys=True)}")
    _write(out / "report.txt", "\n".join(lines) + "\n")


def read_solution_csv(path) -> tuple[dict[str, str], np.ndarray]:
    """Parse a ``solution.csv`` back into its metadata and values."""
    meta, vals = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].partition(":")
            meta[k.strip()] = v.strip()
        elif line and not line.startswith("index"):
            vals.append(float(line.split(",")[1]))
    return meta, np.array(vals)


def cost_for(cfg: dict) -> RealCost:
    return build_problem(cfg).cost
