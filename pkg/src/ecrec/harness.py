"""Experiment orchestration: trial generation, aggregation, artifacts.

A flat, fully-typed :class:`ExperimentConfig` drives everything.  Per-trial
seeds are derived from the master seed with a splitmix-style counter hash, so
any trial can be reproduced in isolation and trial order never matters.
Outputs are a trials CSV, a summary CSV with independently computed replica
prediction columns, and an SVG figure comparing empirical means against the
theoretical curves.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .ec_solver import DivergenceError, SolverParams, ec_solve, nmse
from .ensembles import EnsembleKind, EnsembleSpec, ObservationInstance, make_instance
from .gfunc import GFunction, GKind
from .priors import PriorBG
from .replica import replica_fixed_point

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "SummaryRow",
    "MATCHED_GFUN",
    "parse_config",
    "load_config",
    "derive_trial_seed",
    "run_experiment",
    "summarize",
    "replica_predictions",
    "replica_curves",
    "emit_outputs",
    "write_trials_csv",
    "write_summary_csv",
    "read_trials_csv",
    "read_summary_csv",
    "build_comparison_figure",
    "exact_posterior_mean_enum",
    "linear_mmse",
]

# Spectral assumption that matches each ensemble's actual eigenvalue law.
MATCHED_GFUN = {
    EnsembleKind.IID_GAUSSIAN: GKind.IID_GAUSSIAN,
    EnsembleKind.ROW_ORTHOGONAL: GKind.ROW_ORTHOGONAL,
    EnsembleKind.RANDOM_DCT: GKind.ROW_ORTHOGONAL,
}

_TRIAL_COLUMNS = (
    "ensemble", "gfun", "inv_alpha", "trial", "seed",
    "nmse", "iters", "converged", "wall_ms",
)
_SUMMARY_COLUMNS = (
    "ensemble", "gfun", "inv_alpha", "m", "trials", "diverged",
    "nmse_mean", "nmse_median", "nmse_stderr", "conv_rate", "replica_nmse",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; every field is also a config-file key."""

    rho: float = 0.1
    sigma_x2: float = 1.0
    sigma2: float = 0.01
    n: int = 1024
    ensembles: tuple[str, ...] = ("rowortho", "iid", "dct")
    gfuns: tuple[str, ...] = ()
    inverse_alphas: tuple[float, ...] = (1.25, 1.5, 2.0, 2.5, 3.0, 4.0)
    trials: int = 200
    gamma: float = 0.05
    max_iter: int = 3000
    tol: float = 1e-8
    seed: int = 0
    out: str = ""

    def __post_init__(self) -> None:
        if self.n < 16:
            raise ValueError(f"n must be >= 16, got {self.n}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.inverse_alphas:
            raise ValueError("inverse_alphas must be nonempty")
        if any(v < 1.0 for v in self.inverse_alphas):
            raise ValueError(f"inverse alphas must be >= 1, got {self.inverse_alphas}")
        if not self.ensembles:
            raise ValueError("ensembles must be nonempty")
        object.__setattr__(
            self, "ensembles", tuple(EnsembleKind(e).value for e in self.ensembles)
        )
        if self.gfuns:
            if len(self.gfuns) != len(self.ensembles):
                raise ValueError(
                    f"gfuns ({len(self.gfuns)}) must pair one-to-one with "
                    f"ensembles ({len(self.ensembles)})"
                )
            bad = [v for v in self.gfuns if v not in ("iid", "rowortho")]
            if bad:
                raise ValueError(f"gfuns must be 'iid' or 'rowortho', got {bad}")
            object.__setattr__(self, "gfuns", tuple(self.gfuns))
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        # Range checks on the remaining knobs live with their owners.
        self.prior
        self.solver

    @property
    def prior(self) -> PriorBG:
        return PriorBG(rho=self.rho, sigma_x2=self.sigma_x2)

    @property
    def solver(self) -> SolverParams:
        return SolverParams(gamma=self.gamma, max_iter=self.max_iter, tol=self.tol)

    def series(self) -> list[tuple[EnsembleKind, GKind]]:
        """(ensemble, assumed spectrum) pairs; defaults pick the matched G."""
        kinds = [EnsembleKind(e) for e in self.ensembles]
        if self.gfuns:
            return [(e, GKind(gf)) for e, gf in zip(kinds, self.gfuns)]
        return [(e, MATCHED_GFUN[e]) for e in kinds]


_CONFIG_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_value(key: str, raw: str):
    if key in ("rho", "sigma_x2", "sigma2", "gamma", "tol"):
        return float(raw)
    if key in ("n", "trials", "max_iter", "seed"):
        return int(raw)
    if key == "inverse_alphas":
        return tuple(float(v) for v in raw.split(",") if v.strip())
    if key in ("ensembles", "gfuns"):
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment anywhere."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_TYPES:
            raise ValueError(
                f"line {lineno}: unknown key {key!r}; valid keys: "
                f"{', '.join(sorted(_CONFIG_TYPES))}"
            )
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {raw!r}") from exc
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


_M64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def derive_trial_seed(master: int, series_index: int, grid_index: int, trial_index: int) -> int:
    """Master seed XOR a counter hash; collision-free for indices < 2^20."""
    if not (0 <= grid_index < (1 << 20) and 0 <= trial_index < (1 << 20)):
        raise ValueError("grid and trial indices must fit in 20 bits")
    counter = (series_index << 40) | (grid_index << 20) | trial_index
    return (master & _M64) ^ _splitmix64(counter)


@dataclass(frozen=True)
class TrialRecord:
    ensemble: str
    gfun: str
    inv_alpha: float
    trial: int
    seed: int
    nmse: float
    iters: int
    converged: bool
    wall_ms: float


def _sort_records(records) -> list[TrialRecord]:
    return sorted(records, key=lambda r: (r.ensemble, r.gfun, r.inv_alpha, r.trial))


def rows_for_grid(n: int, inv_alpha: float) -> int:
    """Number of measurement rows for a nominal undersampling ratio."""
    m = round(n / inv_alpha)
    if not 1 <= m <= n:
        raise ValueError(f"1/alpha={inv_alpha} gives m={m} outside [1, {n}]")
    return m


def _gfun_at(kind: GKind, alpha: float) -> GFunction:
    if kind is GKind.IID_GAUSSIAN:
        return GFunction.iid(alpha)
    if kind is GKind.ROW_ORTHOGONAL:
        return GFunction.row_orthogonal(alpha)
    raise ValueError(f"experiments require a closed-form spectrum, got {kind}")


def run_experiment(config: ExperimentConfig, progress=None) -> list[TrialRecord]:
    """Run every (series, grid, trial) cell; deterministic given config.seed.

    A diverging trial is recorded with NaN error and converged=False rather
    than aborting the sweep.  ``progress``, if given, is called after each
    grid cell with a short status string.
    """
    prior = config.prior
    params = config.solver
    records: list[TrialRecord] = []
    for s_idx, (ens, gkind) in enumerate(config.series()):
        for g_idx, inv_alpha in enumerate(config.inverse_alphas):
            m = rows_for_grid(config.n, inv_alpha)
            spec = EnsembleSpec(ens, n=config.n, m=m)
            g = _gfun_at(gkind, m / config.n)
            for t_idx in range(config.trials):
                seed = derive_trial_seed(config.seed, s_idx, g_idx, t_idx)
                obs = make_instance(spec, prior, config.sigma2, seed)
                t0 = time.perf_counter()
                try:
                    state = ec_solve(obs, prior, g, params)
                    err = nmse(state.m, obs.x0)
                    iters, converged = state.iterations, state.converged
                except DivergenceError as exc:
                    err, iters, converged = math.nan, exc.iteration, False
                wall_ms = (time.perf_counter() - t0) * 1e3
                records.append(TrialRecord(
                    ensemble=ens.value, gfun=gkind.value, inv_alpha=float(inv_alpha),
                    trial=t_idx, seed=seed, nmse=err, iters=iters,
                    converged=converged, wall_ms=wall_ms,
                ))
            if progress is not None:
                done = [r for r in records[-config.trials:]]
                mean = float(np.mean([r.nmse for r in done]))
                progress(
                    f"{ens.value}/{gkind.value} 1/alpha={inv_alpha:g}: "
                    f"mean nmse {mean:.4e} over {config.trials} trials"
                )
    return _sort_records(records)


@dataclass(frozen=True)
class SummaryRow:
    ensemble: str
    gfun: str
    inv_alpha: float
    m: int
    trials: int
    diverged: int
    nmse_mean: float
    nmse_median: float
    nmse_stderr: float
    conv_rate: float
    replica_nmse: float = math.nan


def summarize(records, n: int | None = None) -> list[SummaryRow]:
    """Aggregate trial records per (ensemble, gfun, 1/alpha) cell.

    Standard error is the ddof=1 sample deviation over sqrt(trials), zero for
    a single trial.  Diverged trials (NaN error) are excluded from the error
    statistics and counted in their own column; ``trials`` counts the records
    that went into the statistics.  ``n`` only recovers the row count m.
    """
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple, list[TrialRecord]] = {}
    for rec in records:
        groups.setdefault((rec.ensemble, rec.gfun, rec.inv_alpha), []).append(rec)
    rows = []
    for (ens, gf, ia), group in sorted(groups.items()):
        errs = np.array([r.nmse for r in group])
        finite = errs[np.isfinite(errs)]
        k = len(finite)
        stderr = float(np.std(finite, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
        rows.append(SummaryRow(
            ensemble=ens, gfun=gf, inv_alpha=ia,
            m=rows_for_grid(n, ia) if n is not None else -1,
            trials=k,
            diverged=len(errs) - k,
            nmse_mean=float(np.mean(finite)) if k else math.nan,
            nmse_median=float(np.median(finite)) if k else math.nan,
            nmse_stderr=stderr,
            conv_rate=float(np.mean([r.converged for r in group])),
        ))
    return rows


def replica_predictions(config: ExperimentConfig) -> dict[tuple[str, float], float]:
    """Predicted NMSE per (gfun, 1/alpha) cell at the realized aspect ratio.

    Computed purely from the prior, noise level, and spectrum; no empirical
    data flows in.
    """
    prior = config.prior
    out: dict[tuple[str, float], float] = {}
    for _, gkind in config.series():
        for inv_alpha in config.inverse_alphas:
            key = (gkind.value, float(inv_alpha))
            if key in out:
                continue
            alpha = rows_for_grid(config.n, inv_alpha) / config.n
            fp = replica_fixed_point(prior, config.sigma2, alpha, _gfun_at(gkind, alpha))
            out[key] = fp.mmse / prior.q0
    return out


def replica_curves(config: ExperimentConfig, points: int = 61) -> dict[str, np.ndarray]:
    """Dense theoretical NMSE curves per gfun for plotting, shape (k, 2)."""
    prior = config.prior
    lo, hi = min(config.inverse_alphas), max(config.inverse_alphas)
    grid = np.linspace(lo, hi, points) if hi > lo else np.array([lo])
    out: dict[str, np.ndarray] = {}
    for _, gkind in config.series():
        if gkind.value in out:
            continue
        vals = [
            replica_fixed_point(prior, config.sigma2, 1.0 / ia, _gfun_at(gkind, 1.0 / ia)).mmse
            / prior.q0
            for ia in grid
        ]
        out[gkind.value] = np.column_stack([grid, vals])
    return out


def _format_field(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trials_csv(records, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRIAL_COLUMNS)
        for r in _sort_records(records):
            writer.writerow([
                r.ensemble, r.gfun, repr(r.inv_alpha), r.trial, r.seed,
                repr(r.nmse), r.iters, _format_field(r.converged), repr(r.wall_ms),
            ])
    return path


def read_trials_csv(path) -> list[TrialRecord]:
    records = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(TrialRecord(
                ensemble=row["ensemble"], gfun=row["gfun"],
                inv_alpha=float(row["inv_alpha"]), trial=int(row["trial"]),
                seed=int(row["seed"]), nmse=float(row["nmse"]),
                iters=int(row["iters"]), converged=row["converged"] == "1",
                wall_ms=float(row["wall_ms"]),
            ))
    return records


def write_summary_csv(rows, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SUMMARY_COLUMNS)
        for r in rows:
            writer.writerow([
                r.ensemble, r.gfun, repr(r.inv_alpha), r.m, r.trials, r.diverged,
                repr(r.nmse_mean), repr(r.nmse_median), repr(r.nmse_stderr),
                repr(r.conv_rate), repr(r.replica_nmse),
            ])
    return path


def read_summary_csv(path) -> list[SummaryRow]:
    rows = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(SummaryRow(
                ensemble=row["ensemble"], gfun=row["gfun"],
                inv_alpha=float(row["inv_alpha"]), m=int(row["m"]),
                trials=int(row["trials"]), diverged=int(row["diverged"]),
                nmse_mean=float(row["nmse_mean"]),
                nmse_median=float(row["nmse_median"]),
                nmse_stderr=float(row["nmse_stderr"]),
                conv_rate=float(row["conv_rate"]),
                replica_nmse=float(row["replica_nmse"]),
            ))
    return rows


_SERIES_STYLE = {
    # (ensemble, gfun) -> (marker, color, label)
    ("rowortho", "rowortho"): ("o", "tab:red", "EC on row-orthogonal"),
    ("iid", "iid"): ("x", "tab:green", "AMP on i.i.d. Gaussian"),
    ("dct", "rowortho"): ("*", "tab:purple", "EC on random DCT"),
}
_CURVE_STYLE = {
    "rowortho": ("-", "tab:blue", "theory, row-orthogonal spectrum"),
    "iid": ("--", "tab:orange", "theory, i.i.d. Gaussian spectrum"),
}


def build_comparison_figure(summary_rows, curves):
    """NMSE versus 1/alpha: theory curves plus empirical means with error bars."""
    from matplotlib.figure import Figure

    fig = Figure(figsize=(6.4, 4.6))
    ax = fig.add_subplot()
    for gfun, arr in sorted(curves.items()):
        style, color, label = _CURVE_STYLE[gfun]
        ax.plot(arr[:, 0], arr[:, 1], style, color=color, label=label)
    series: dict[tuple[str, str], list[SummaryRow]] = {}
    for row in summary_rows:
        series.setdefault((row.ensemble, row.gfun), []).append(row)
    for key, rows in sorted(series.items()):
        marker, color, label = _SERIES_STYLE.get(
            key, ("s", "tab:gray", f"EC on {key[0]} ({key[1]} spectrum)")
        )
        rows = sorted(rows, key=lambda r: r.inv_alpha)
        ax.errorbar(
            [r.inv_alpha for r in rows], [r.nmse_mean for r in rows],
            yerr=[r.nmse_stderr for r in rows],
            marker=marker, color=color, label=label, linestyle="none", capsize=3,
        )
    ax.set_xlabel("1/alpha = N/M")
    ax.set_ylabel("NMSE")
    ax.set_yscale("log")
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, which="both", alpha=0.3)
    return fig


def emit_outputs(records, summary_rows, curves, out_dir) -> dict[str, Path]:
    """Write trials.csv, summary.csv, and (if anything to plot) figure.svg."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "trials": write_trials_csv(records, out_dir / "trials.csv"),
        "summary": write_summary_csv(summary_rows, out_dir / "summary.csv"),
    }
    if summary_rows or curves:
        fig = build_comparison_figure(summary_rows, curves)
        fig_path = out_dir / "figure.svg"
        fig.savefig(fig_path, format="svg")
        paths["figure"] = fig_path
    return paths


def attach_predictions(summary_rows, predictions) -> list[SummaryRow]:
    """Fill the replica_nmse column from a (gfun, inv_alpha) -> nmse map."""
    return [
        replace(row, replica_nmse=predictions.get((row.gfun, row.inv_alpha), math.nan))
        for row in summary_rows
    ]


def exact_posterior_mean_enum(obs: ObservationInstance, prior: PriorBG) -> np.ndarray:
    """Exact Bayes estimate by enumerating all 2^N supports (N <= 14).

    Each support S contributes weight (1-rho)^(N-|S|) rho^|S| times the
    Gaussian evidence of the restricted model y = A_S x_S + noise, and the
    restricted linear-MMSE mean on S.
    """
    n, m = obs.n, obs.m
    if n > 14:
        raise ValueError(f"support enumeration needs N <= 14, got N={n}")
    if prior.rho == 0.0:
        return np.zeros(n)
    a, y, s2, sx2 = obs.a, obs.y, obs.sigma2, prior.sigma_x2
    log_rho = math.log(prior.rho) if prior.rho > 0 else -math.inf
    log_1mrho = math.log1p(-prior.rho) if prior.rho < 1 else -math.inf

    log_weights = np.empty(1 << n)
    means = np.zeros((1 << n, n))
    base = -0.5 * m * math.log(2.0 * math.pi)
    for mask in range(1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        k = len(idx)
        prior_lw = (k * log_rho if k else 0.0) + ((n - k) * log_1mrho if n - k else 0.0)
        if k == 0:
            logdet = m * math.log(s2)
            quad = float(y @ y) / s2
        else:
            a_s = a[:, idx]
            cov = s2 * np.eye(m) + sx2 * (a_s @ a_s.T)
            sign, logdet = np.linalg.slogdet(cov)
            sol = np.linalg.solve(cov, y)
            quad = float(y @ sol)
            means[mask, idx] = sx2 * (a_s.T @ sol)
        log_weights[mask] = prior_lw + base - 0.5 * (logdet + quad)

    log_weights -= log_weights.max()
    w = np.exp(log_weights)
    return (w @ means) / w.sum()


def linear_mmse(a: np.ndarray, y: np.ndarray, sigma2: float, prior_var: float) -> np.ndarray:
    """Best linear estimate under an isotropic prior with variance prior_var."""
    a = np.asarray(a, dtype=float)
    n = a.shape[1]
    return np.linalg.solve(a.T @ a / sigma2 + np.eye(n) / prior_var, a.T @ y / sigma2)
