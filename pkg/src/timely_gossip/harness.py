"""Parameter sweeps, multi-trial statistics and result files."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analytics
from .core import ConfigError, PolicyKind, SimConfig, derive_seed
from .engine import run

WORKERS_ENV = "TIMELY_GOSSIP_WORKERS"

CSV_COLUMNS = (
    "policy",
    "n",
    "lambda_e",
    "lambda",
    "B",
    "delta",
    "trials",
    "mean_age",
    "stderr",
    "theory_finite_n",
    "theory_asymptote",
)

# curves with a finite large-n limit, drawn as horizontal lines in the plot files
ASYMPTOTE_POLICIES = (PolicyKind.SEMI_DISTRIBUTED, PolicyKind.FULLY_DISTRIBUTED, PolicyKind.ASUMAN)


class ConfigParseError(ConfigError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    """A grid of (policy, n, (lambda_e, lambda)) points, each run ``trials`` times.

    ``delta=None`` picks the optimal window 1/lambda at each point.  Trial k
    of every point uses seed ``derive_seed(seed, k)``, so policies at the same
    grid point see common random numbers.
    """

    n_values: tuple[int, ...]
    rates: tuple[tuple[float, float], ...]
    policies: tuple[PolicyKind, ...]
    trials: int = 20
    horizon: float = 1e5
    burn_in: float | None = None
    delta: float | None = None
    seed: int = 0
    output: Path | None = None
    workers: int | None = None

    def __post_init__(self):
        if not self.n_values or not self.rates or not self.policies:
            raise ConfigError("n_values, rates and policies must be non-empty")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")

    def delta_for(self, lam: float) -> float:
        return analytics.optimal_delta(lam) if self.delta is None else self.delta

    def grid(self) -> list[tuple[PolicyKind, int, float, float]]:
        rates = sorted(self.rates, key=lambda r: (r[0] / r[1], r[1]))
        return [(p, n, le, lam) for p in self.policies for n in sorted(self.n_values) for le, lam in rates]

    def config(self, policy, n, lambda_e, lam, trial) -> SimConfig:
        return SimConfig(
            n=n,
            lambda_e=lambda_e,
            lam=lam,
            policy=policy,
            horizon=self.horizon,
            burn_in=self.burn_in,
            delta=self.delta_for(lam) if policy is PolicyKind.FULLY_DISTRIBUTED else None,
            seed=derive_seed(self.seed, trial),
        )


@dataclass(frozen=True)
class SweepPoint:
    policy: PolicyKind
    n: int
    lambda_e: float
    lam: float
    capacity: float
    delta: float | None
    trials: int
    mean_age: float
    stderr: float
    min_age: float
    theory_finite_n: float
    theory_asymptote: float
    trial_means: tuple[float, ...] = ()
    occupancy: tuple[float, ...] = ()  # mean fraction of time with k gossipers (fully-distributed only)

    @property
    def ratio(self) -> float:
        return self.lambda_e / self.lam


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    points: tuple[SweepPoint, ...] = field(default_factory=tuple)

    def point(self, policy: PolicyKind, n: int, ratio: float) -> SweepPoint:
        for p in self.points:
            if p.policy is policy and p.n == n and math.isclose(p.ratio, ratio):
                return p
        raise KeyError((policy, n, ratio))


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def _run_trial(cfg: SimConfig) -> tuple[float, float, np.ndarray]:
    result = run(cfg)
    return result.mean_age, result.min_age, result.occupancy


def run_sweep(spec: SweepSpec) -> SweepResult:
    grid = spec.grid()
    configs = [spec.config(p, n, le, lam, k) for p, n, le, lam in grid for k in range(spec.trials)]
    workers = spec.workers or default_workers()
    if workers == 1 or len(configs) == 1:
        outcomes = [_run_trial(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial, configs, chunksize=max(1, len(configs) // (4 * workers))))

    points = []
    for idx, (policy, n, le, lam) in enumerate(grid):
        chunk = outcomes[idx * spec.trials : (idx + 1) * spec.trials]
        means = np.array([c[0] for c in chunk])
        stderr = float(means.std(ddof=1) / math.sqrt(len(means))) if len(means) > 1 else math.nan
        delta = spec.delta_for(lam) if policy is PolicyKind.FULLY_DISTRIBUTED else None
        theory = analytics.predict(policy, n, le, lam, n * lam, delta)
        occupancy = ()
        if policy is PolicyKind.FULLY_DISTRIBUTED:
            width = max(len(c[2]) for c in chunk)
            occ = np.zeros(width)
            for c in chunk:
                occ[: len(c[2])] += c[2]
            occupancy = tuple(float(x) for x in np.trim_zeros(occ / len(chunk), "b"))
        points.append(
            SweepPoint(
                policy=policy,
                n=n,
                lambda_e=le,
                lam=lam,
                capacity=n * lam,
                delta=delta,
                trials=spec.trials,
                mean_age=float(means.mean()),
                stderr=stderr,
                min_age=float(np.mean([c[1] for c in chunk])),
                theory_finite_n=theory.mean_age,
                theory_asymptote=theory.asymptote,
                trial_means=tuple(float(m) for m in means),
                occupancy=occupancy,
            )
        )
    return SweepResult(spec, tuple(points))


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def emit_csv(result: SweepResult, path) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in result.points:
        writer.writerow(
            [
                p.policy.value,
                p.n,
                _num(p.lambda_e),
                _num(p.lam),
                _num(p.capacity),
                _num(p.delta),
                p.trials,
                _num(p.mean_age),
                _num(p.stderr),
                _num(p.theory_finite_n),
                _num(p.theory_asymptote),
            ]
        )
    _atomic_write(Path(path), buf.getvalue())
    return Path(path)


def read_csv(path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def plot_series(result: SweepResult) -> dict[float, tuple[list[str], list[list[str]]]]:
    """Wide per-ratio tables: one row per n, mean/stderr/theory per policy, plus asymptotes."""
    by_ratio: dict[float, list[SweepPoint]] = {}
    lam_of: dict[float, float] = {}
    for p in result.points:
        by_ratio.setdefault(p.ratio, []).append(p)
        if lam_of.setdefault(p.ratio, p.lam) != p.lam:
            raise ConfigError(f"two lambda values share ratio {p.ratio:g}; plot files are keyed by ratio")
    tables = {}
    for ratio, pts in sorted(by_ratio.items()):
        lam = lam_of[ratio]
        lambda_e = ratio * lam
        policies = list(dict.fromkeys(p.policy for p in pts))
        header = ["n"]
        for pol in policies:
            header += [f"{pol.value}_mean", f"{pol.value}_stderr", f"{pol.value}_theory"]
        header += [f"asymptote_{pol.value}" for pol in ASYMPTOTE_POLICIES]
        asymptotes = [
            analytics.semi_distributed_asymptote(lambda_e, lam),
            analytics.fully_distributed_asymptote(lambda_e, lam, result.spec.delta_for(lam)),
            analytics.asuman_asymptote(lambda_e, lam),
        ]
        rows = []
        for n in sorted({p.n for p in pts}):
            row = [str(n)]
            for pol in policies:
                match = [p for p in pts if p.policy is pol and p.n == n]
                if match:
                    row += [_num(match[0].mean_age), _num(match[0].stderr), _num(match[0].theory_finite_n)]
                else:
                    row += ["", "", ""]
            rows.append(row + [_num(a) for a in asymptotes])
        tables[ratio] = (header, rows)
    return tables


def emit_plot_data(result: SweepResult, directory) -> list[Path]:
    directory = Path(directory)
    written = []
    for ratio, (header, rows) in plot_series(result).items():
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        path = directory / f"ratio_{ratio:g}.csv"
        _atomic_write(path, buf.getvalue())
        written.append(path)
    return written


def fig3_spec(**overrides) -> SweepSpec:
    """Desk-scale version of the three-ratio comparison grid."""
    spec = SweepSpec(
        n_values=(8, 16, 32, 64, 128, 256),
        rates=((0.4, 1.0), (1.0, 1.0), (2.0, 1.0)),
        policies=(
            PolicyKind.SEMI_DISTRIBUTED,
            PolicyKind.FULLY_DISTRIBUTED,
            PolicyKind.ASUMAN,
            PolicyKind.UNIFORM,
        ),
        trials=10,
        horizon=4e4,
        seed=2023,
    )
    return replace(spec, **overrides)


# -- config files -------------------------------------------------------------

_LIST_KEYS = {"n", "ratios", "policies"}
_KNOWN_KEYS = _LIST_KEYS | {"lambda", "delta", "trials", "horizon", "burn_in", "seed", "output", "workers"}


def _parse_value(key: str, raw: str):
    if key == "n":
        return tuple(int(x) for x in raw.split(","))
    if key == "ratios":
        return tuple(float(x) for x in raw.split(","))
    if key == "policies":
        return tuple(PolicyKind.parse(x) for x in raw.split(","))
    if key == "delta":
        return None if raw.strip().lower() == "optimal" else float(raw)
    if key in ("trials", "seed", "workers"):
        return int(raw)
    if key == "output":
        return Path(raw.strip())
    return float(raw)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Returns raw settings."""
    settings = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigParseError(f"{source}:{lineno}: unknown field {key!r}")
        try:
            settings[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigParseError(f"{source}:{lineno}: field {key!r}: {exc}") from None
    return settings


def parse_config_file(path) -> dict:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


def spec_from_settings(settings: dict, base: SweepSpec | None = None) -> SweepSpec:
    base = base or fig3_spec()
    lam = settings.get("lambda", base.rates[0][1])
    ratios = settings.get("ratios")
    rates = tuple((r * lam, lam) for r in ratios) if ratios else tuple((le / l0 * lam, lam) for le, l0 in base.rates)
    fields = {
        "n": "n_values",
        "policies": "policies",
        "trials": "trials",
        "horizon": "horizon",
        "burn_in": "burn_in",
        "seed": "seed",
        "output": "output",
        "workers": "workers",
    }
    kwargs = {attr: settings[key] for key, attr in fields.items() if key in settings}
    if "delta" in settings:
        kwargs["delta"] = settings["delta"]
    return replace(base, rates=rates, **kwargs)
