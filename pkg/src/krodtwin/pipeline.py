"""End-to-end run: generate, decompose, select, fit, validate, report.

Every artifact lands in the run's output directory and is listed with its
SHA-256 in ``manifest.json``.  Nothing time- or host-dependent is written,
so two runs with the same configuration produce identical bytes.
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .burgers import PRESETS, ExperimentSpec, generate_snapshots
from .errors import ConfigError, KrodError, NumericalError, RankDeficiencyError
from .krod import krod_offline, reconstruct, split_snapshots
from .metrics import evaluate, pearson
from .nlarx import DEFAULT_MAX_ITER, DEFAULT_NA, DEFAULT_NB, DEFAULT_NK, DEFAULT_WIDTH, MAX_ITER_BUDGET, order_grid
from .seeding import check_seed, derive_seed
from .selection import CandidateScore, score_candidate, select
from .twin import build_twin, twin_predict, twofold_validate

log = logging.getLogger(__name__)

SCHEMA = "krodtwin.config/v1"
MANIFEST_SCHEMA = "krodtwin.manifest/v1"
MANIFEST_NAME = "manifest.json"
FOLD_MODES = ("offline_only", "twofold")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def default_rank_grid(nt: int, nx: int | None = None) -> list[int]:
    """``5, 10, ..., 200`` clipped to the largest factorizable rank."""
    top = nt if nx is None else min(nt, nx)
    return [k for k in range(5, 201, 5) if k <= top]


@dataclass
class NlarxSettings:
    na: tuple[int, ...] = DEFAULT_NA
    nb: tuple[int, ...] = DEFAULT_NB
    nk: tuple[int, ...] = DEFAULT_NK
    hidden_width: int = DEFAULT_WIDTH
    max_iter: int = DEFAULT_MAX_ITER
    train_fraction: float = 2 / 3

    def __post_init__(self):
        self.na, self.nb, self.nk = (tuple(int(v) for v in x) for x in (self.na, self.nb, self.nk))
        if not self.na or not self.nb or not self.nk:
            raise ConfigError("NLARX order lists must be non-empty")
        if self.hidden_width < 1:
            raise ConfigError("hidden_width must be positive")
        if not 1 <= self.max_iter <= MAX_ITER_BUDGET:
            raise ConfigError(f"max_iter must lie in [1, {MAX_ITER_BUDGET}]")
        order_grid(self.na, self.nb, self.nk)

    def to_dict(self) -> dict:
        return {"na": list(self.na), "nb": list(self.nb), "nk": list(self.nk), "hidden_width": self.hidden_width,
                "max_iter": self.max_iter, "train_fraction": self.train_fraction}


@dataclass
class RunConfig:
    experiment: ExperimentSpec
    output_dir: Path
    rank_grid: list[int] | None = None
    master_seed: int = 0
    nlarx: NlarxSettings = field(default_factory=NlarxSettings)
    folds: str = "twofold"

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if self.rank_grid is None:
            self.rank_grid = default_rank_grid(self.experiment.nt, self.experiment.nx)
        self.rank_grid = [int(k) for k in self.rank_grid]
        if not self.rank_grid:
            raise ConfigError("rank_grid is empty")
        if any(b <= a for a, b in zip(self.rank_grid, self.rank_grid[1:])):
            raise ConfigError("rank_grid must be strictly increasing")
        if self.rank_grid[0] < 2 or self.rank_grid[-1] > self.experiment.nt:
            raise ConfigError(f"rank_grid must lie within [2, {self.experiment.nt}]")
        try:
            self.master_seed = check_seed(self.master_seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.folds not in FOLD_MODES:
            raise ConfigError(f"folds must be one of {FOLD_MODES}")

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "experiment": self.experiment.to_dict(),
            "rank_grid": self.rank_grid,
            "master_seed": self.master_seed,
            "nlarx": self.nlarx.to_dict(),
            "folds": self.folds,
        }

    @classmethod
    def from_dict(cls, d: dict, output_dir=None) -> "RunConfig":
        d = dict(d)
        schema = d.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}, expected {SCHEMA!r}")
        preset = d.pop("preset", None)
        exp = d.pop("experiment", None)
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            spec = PRESETS[preset]
            if isinstance(exp, dict):
                spec = ExperimentSpec.from_dict({**spec.to_dict(), **exp})
        elif isinstance(exp, dict):
            spec = ExperimentSpec.from_dict(exp)
        else:
            raise ConfigError("config needs an 'experiment' table or a 'preset'")
        out = output_dir if output_dir is not None else d.pop("output_dir", None)
        d.pop("output_dir", None)
        if out is None:
            raise ConfigError("no output_dir given")
        nl = d.pop("nlarx", {}) or {}
        known = {"rank_grid", "master_seed", "folds"}
        if set(d) - known:
            raise ConfigError(f"unknown config keys: {sorted(set(d) - known)}")
        try:
            nlarx = NlarxSettings(**nl)
        except TypeError as exc:
            raise ConfigError(f"bad nlarx settings: {exc}") from exc
        return cls(spec, out, d.get("rank_grid"), d.get("master_seed", 0), nlarx, d.get("folds", "twofold"))


def load_config(path, output_dir=None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python 3.10
            import tomli as tomllib
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return RunConfig.from_dict(data, output_dir)


def preset_config(name: str, output_dir, seed: int = 0, **kw) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return RunConfig(PRESETS[name], output_dir, master_seed=seed, **kw)


class _Run:
    """Mutable bookkeeping for one pipeline execution."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out = config.output_dir
        self.artifacts: dict[str, dict] = {}
        self.stages: list[str] = []
        self.summary: dict = {}
        self.notes: list[str] = []
        self.timings: dict[str, float] = {}

    def add(self, path: Path, kind: str):
        rel = path.relative_to(self.out).as_posix()
        self.artifacts[rel] = {"kind": kind}

    def manifest(self, status: str, error: dict | None = None) -> dict:
        files = []
        for rel in sorted(self.artifacts):
            p = self.out / rel
            files.append({"path": rel, "kind": self.artifacts[rel]["kind"], "sha256": io.sha256(p),
                          "bytes": p.stat().st_size})
        m = {
            "schema": MANIFEST_SCHEMA,
            "status": status,
            "config": self.config.to_dict(),
            "stages": self.stages,
            "summary": self.summary,
            "notes": self.notes,
            "artifacts": files,
        }
        if error:
            m["error"] = error
        return m


def _check_output_dir(out: Path):
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc


def _write_scores(run: _Run, grid: list[int], scores: dict[int, CandidateScore], front, chosen) -> Path:
    front_k = {s.k for s in front}
    path = run.out / "scores.csv"
    with path.open("w", newline="\n") as fh:
        fh.write("k,E,C,feasible,on_front,chosen\n")
        for k in grid:
            s = scores.get(k)
            E = io._fmt(s.error) if s else "nan"
            C = io._fmt(s.similarity) if s else "nan"
            fh.write(f"{k},{E},{C},{int(s is not None)},{int(k in front_k)},{int(k == chosen.k)}\n")
    return path


def run_pipeline(config: RunConfig) -> tuple[int, dict]:
    """Execute all stages; returns ``(exit_status, manifest)``.

    A failing stage stops the run; artifacts written so far are kept and the
    manifest is marked ``FAILED`` with the stage name.
    """
    try:
        _check_output_dir(config.output_dir)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG, {"schema": MANIFEST_SCHEMA, "status": "FAILED",
                             "error": {"stage": "config", "type": "ConfigError", "message": str(exc)}}
    run = _Run(config)
    stage = "config"
    try:
        for stage, fn in (("generate", _stage_generate), ("decompose", _stage_decompose),
                          ("select", _stage_select), ("fit", _stage_fit), ("validate", _stage_validate),
                          ("evaluate", _stage_evaluate), ("plot", _stage_plot)):
            t = time.perf_counter()
            fn(run)
            run.timings[stage] = time.perf_counter() - t
            run.stages.append(stage)
            log.info("stage %-9s done in %.2fs", stage, run.timings[stage])
    except (KrodError, OSError, np.linalg.LinAlgError) as exc:
        code = EXIT_IO if isinstance(exc, OSError) else EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_NUMERICAL
        log.error("stage %s failed: %s", stage, exc)
        err = {"stage": stage, "type": type(exc).__name__, "message": str(exc)}
        manifest = run.manifest("FAILED", err)
        try:
            io.dump_json(run.out / MANIFEST_NAME, manifest)
        except OSError:
            pass
        return code, manifest
    manifest = run.manifest("OK")
    io.dump_json(run.out / MANIFEST_NAME, manifest)
    return EXIT_OK, manifest


# stages ---------------------------------------------------------------------

def _stage_generate(run: _Run):
    spec = run.config.experiment
    snaps = generate_snapshots(spec)
    run.snaps = snaps
    run.add(io.write_snapshots_csv(run.out / "snapshots.csv", snaps), "snapshots")
    run.add(io.write_snapshots_blob(run.out / "snapshots.bin", snaps.values, snaps.dt, spec.L), "snapshots")


def _stage_decompose(run: _Run):
    V0, V1 = split_snapshots(run.snaps)
    run.V0, run.V1 = V0, V1
    run.triplets = {}
    run.infeasible = {}
    top = min(V0.shape)
    for k in run.config.rank_grid:
        if k > top:
            run.infeasible[k] = f"k exceeds min(N_x, N_t) = {top}"
            continue
        try:
            run.triplets[k] = krod_offline(V0, V1, k, derive_seed(run.config.master_seed, "krod", k))
        except RankDeficiencyError as exc:
            run.infeasible[k] = str(exc)
    if not run.triplets:
        raise NumericalError("no rank in the grid is numerically supported by the data")
    if run.infeasible:
        run.notes.append(f"ranks {sorted(run.infeasible)} rejected as numerically unsupported "
                         "(sigma_k below the 1e-12 relative guard or k > min(N_x, N_t))")


def _stage_select(run: _Run):
    scores = {k: score_candidate(run.V0, t) for k, t in run.triplets.items()}
    result = select([scores[k] for k in sorted(scores)])
    run.selection = result
    chosen = result.chosen
    run.chosen = run.triplets[chosen.k]
    if len(scores) == 1:
        run.notes.append("single feasible candidate: Pareto dominance is trivial")
    run.add(_write_scores(run, run.config.rank_grid, scores, result.front, chosen), "scores")
    for p in io.write_triplet(run.out, run.chosen):
        run.add(p, "triplet")

    approx = reconstruct(run.chosen)
    rep = evaluate(run.V0, approx, run.chosen.modes)
    run.offline_report = rep
    phi = run.chosen.modes
    run.summary.update({
        "n_dtm": chosen.k,
        "front": [s.k for s in result.front],
        "feasible_ranks": sorted(scores),
        "offline": {**rep.scalars(), "E": chosen.error, "C": chosen.similarity,
                    "orthonormality_error": float(np.linalg.norm(phi.T @ phi - np.eye(phi.shape[1])))},
    })
    run.add(io.write_matrix_csv(run.out / "mac.csv", rep.mac), "eval")
    run.add(io.write_matrix_csv(run.out / "local_error_offline.csv", rep.local_error), "eval")
    run.add(io.dump_json(run.out / "eval_offline.json", run.summary["offline"]), "eval")


def _stage_fit(run: _Run):
    if run.config.folds == "offline_only":
        run.twin = None
        run.notes.append("offline_only: online surrogates and coefficient traces skipped")
        return
    nl = run.config.nlarx
    run.twin = build_twin(
        run.chosen, run.snaps.values[:, 0], run.snaps.dt, t0=run.snaps.t0,
        seed=derive_seed(run.config.master_seed, "twin", 0),
        orders_grid=order_grid(nl.na, nl.nb, nl.nk), hidden_width=nl.hidden_width,
        train_fraction=nl.train_fraction, max_iter=nl.max_iter,
    )
    doc = {"a0": run.twin.a0.tolist(), "dt": run.twin.dt, "t0": run.twin.t0,
           "models": [m.to_dict() for m in run.twin.surrogates]}
    run.add(io.dump_json(run.out / "surrogates.json", doc), "model")


def _stage_validate(run: _Run):
    if run.twin is None:
        return
    rep = twofold_validate(run.twin, run.chosen.amplitudes, seed=derive_seed(run.config.master_seed, "validate", 0),
                           max_iter=run.config.nlarx.max_iter)
    run.validation = rep
    path = run.out / "validation.csv"
    with path.open("w", newline="\n") as fh:
        fh.write("fold,coefficient,mode,fit_percent,rmse\n")
        for fold, j, mode, fit, rmse in rep.rows():
            fh.write(f"{fold},{j + 1},{mode},{io._fmt(fit)},{io._fmt(rmse)}\n")
    run.add(path, "validation")
    run.summary["validation"] = {
        f"fold{f.fold}": {"n_train": f.n_train, "mean_fit_one_step": f.mean_fit,
                          "min_fit_one_step": float(f.fit_one_step.min()),
                          "median_fit_free_run": float(np.median(f.fit_free_run))}
        for f in rep.folds
    }


def _stage_evaluate(run: _Run):
    if run.twin is None:
        return
    n = run.V0.shape[1]
    pred = twin_predict(run.twin, run.snaps.times[:n], mode="free_run")
    rep = evaluate(run.V0, pred, run.chosen.modes)
    run.online_report = rep
    boundary = run.twin.surrogates[0].n_train
    online = {**rep.scalars(), "training_window": boundary,
              "pearson_training_window": pearson(run.V0[:, :boundary], pred[:, :boundary])}
    run.summary["online"] = online
    run.add(io.write_matrix_csv(run.out / "local_error_online.csv", rep.local_error), "eval")
    run.add(io.dump_json(run.out / "eval_online.json", online), "eval")


def _stage_plot(run: _Run):
    for p, kind in emit_plot_data(run.out, run):
        run.add(p, kind)


# plot data ------------------------------------------------------------------

def emit_plot_data(out_dir, run: _Run | None = None) -> list[tuple[Path, str]]:
    """Write tidy CSVs for plotting from the artifacts in ``out_dir``."""
    out = Path(out_dir)
    need = ["scores.csv", "local_error_offline.csv", "snapshots.csv"]
    for name in need:
        if not (out / name).exists():
            raise ConfigError(f"missing upstream artifact {name}")
    written = []
    rows = (out / "scores.csv").read_text().splitlines()[1:]
    recs = [r.split(",") for r in rows]
    p = out / "objectives_vs_rank.csv"
    p.write_text("k,E,C,feasible\n" + "".join(f"{r[0]},{r[1]},{r[2]},{r[3]}\n" for r in recs))
    written.append((p, "plot"))
    p = out / "pareto_front.csv"
    p.write_text("k,E,C,chosen\n" + "".join(f"{r[0]},{r[1]},{r[2]},{r[5]}\n" for r in recs if r[4] == "1"))
    written.append((p, "plot"))

    head, snap = io.read_matrix_csv(out / "snapshots.csv", header=True)
    x = snap[:, 0]
    times = [float(t) for t in head[1:]]
    _, err_off = io.read_matrix_csv(out / "local_error_offline.csv")
    online = out / "local_error_online.csv"
    err_on = io.read_matrix_csv(online)[1] if online.exists() else None
    p = out / "local_error_field.csv"
    with p.open("w", newline="\n") as fh:
        fh.write("x,t,offline_error" + (",online_error" if err_on is not None else "") + "\n")
        for i in range(err_off.shape[1]):
            for j in range(err_off.shape[0]):
                line = f"{io._fmt(x[j])},{io._fmt(times[i])},{io._fmt(err_off[j, i])}"
                if err_on is not None:
                    line += f",{io._fmt(err_on[j, i])}"
                fh.write(line + "\n")
    written.append((p, "plot"))

    if run is not None and getattr(run, "twin", None) is not None and hasattr(run, "validation"):
        p = out / "coefficient_traces.csv"
        with p.open("w", newline="\n") as fh:
            fh.write("fold,coefficient,step,t,measured,one_step,free_run\n")
            A = run.chosen.amplitudes
            for f in run.validation.folds:
                for j in range(A.shape[0]):
                    for i in range(A.shape[1]):
                        fh.write(f"{f.fold},{j + 1},{i},{io._fmt(times[i])},{io._fmt(A[j, i])},"
                                 f"{io._fmt(f.one_step[j, i])},{io._fmt(f.free_run[j, i])}\n")
        written.append((p, "plot"))
    elif (out / "coefficient_traces.csv").exists():
        written.append((out / "coefficient_traces.csv", "plot"))
    return written


def replot(manifest_path) -> dict:
    """Regenerate plot CSVs from an existing run and refresh the manifest."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    out = manifest_path.parent
    if manifest.get("status") != "OK":
        raise ConfigError("manifest does not describe a completed run")
    kinds = {a["path"]: a["kind"] for a in manifest["artifacts"]}
    for p, kind in emit_plot_data(out):
        kinds[p.relative_to(out).as_posix()] = kind
    manifest["artifacts"] = [
        {"path": rel, "kind": kinds[rel], "sha256": io.sha256(out / rel), "bytes": (out / rel).stat().st_size}
        for rel in sorted(kinds)
    ]
    io.dump_json(manifest_path, manifest)
    return manifest


# verification ---------------------------------------------------------------

def validate_manifest(manifest_path) -> list[str]:
    """Re-check checksums, directory completeness and stored invariants.

    Returns a list of problems (empty when everything holds).
    """
    manifest_path = Path(manifest_path)
    out = manifest_path.parent
    manifest = json.loads(manifest_path.read_text())
    problems = []
    listed = {a["path"] for a in manifest.get("artifacts", [])}
    for a in manifest.get("artifacts", []):
        p = out / a["path"]
        if not p.exists():
            problems.append(f"missing artifact {a['path']}")
        elif io.sha256(p) != a["sha256"]:
            problems.append(f"checksum mismatch for {a['path']}")
    for root, _, files in os.walk(out):
        for name in files:
            rel = (Path(root) / name).relative_to(out).as_posix()
            if rel != manifest_path.name and rel not in listed:
                problems.append(f"unlisted file {rel}")
    if manifest.get("status") != "OK" or problems:
        return problems + ([f"run status is {manifest.get('status')}"] if manifest.get("status") != "OK" else [])

    _, modes = io.read_matrix_csv(out / "modes.csv", header=True)
    ortho = np.linalg.norm(modes.T @ modes - np.eye(modes.shape[1]))
    if ortho > 1e-10:
        problems.append(f"modes are not orthonormal (||Phi^T Phi - I||_F = {ortho:.3e})")
    _, err = io.read_matrix_csv(out / "local_error_offline.csv")
    mae = json.loads((out / "eval_offline.json").read_text())["mae"]
    if abs(err.mean() - mae) > 1e-12:
        problems.append("offline MAE does not match the local error matrix")
    rows = [r.split(",") for r in (out / "scores.csv").read_text().splitlines()[1:]]
    chosen = [r for r in rows if r[5] == "1"]
    if len(chosen) != 1 or chosen[0][4] != "1":
        problems.append("chosen rank is not a unique member of the Pareto front")
    return problems
