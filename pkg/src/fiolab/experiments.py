"""
Declarative experiments: a validated config in, ordered result rows out.

Each experiment is a sweep.  Rows are computed independently (optionally in
a process pool) and always emitted in sweep-key order, so the output bytes
depend only on the config.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .classical import (
    IntegerSymplecticMap,
    TorusPoint,
    commuting_locus_measure,
    periodic_orbit,
    sampled_commuting_fraction,
)
from .errors import ConfigInvalid, FiolabError
from .matrix_elements import (
    EigenBasis,
    chebyshev_bound,
    density_one_fraction,
    diagonal_series,
    hecke_row_checks,
    offdiag_bucket,
    orbit_weights,
    variance_sum,
    weyl_average_check,
)
from .sphere import HeckeSpec, RotationSpec, random_rotation, real_multiplication_op
from .torus import (
    EGOROV_TOL,
    UNITARITY_TOL,
    catmap_op,
    max_egorov_residual,
    translation_op,
    unitarity_residual,
)

COLUMNS = {
    "catmap-crossed": ["N", "variance_sum", "max_abs_element", "density_one_fraction", "eps", "egorov_residual", "unitarity_residual"],
    "commuting-locus": ["m", "exact_measure", "sampled_fraction", "grid", "tol"],
    "hecke-sphere": ["ell", "j", "eigenvalue", "skip_flag", "munuj_residual", "sa_real_part_gap", "cs_inequality_slack"],
    "catmap-qe": ["N", "n1", "n2", "fraction_below_eps", "eps", "variance_sum"],
    "orbit-mass": ["N", "period", "j", "max_dev_from_uniform", "total_mass"],
    "weyl-law": ["dim", "re_avg", "im_avg", "trace_check_residual"],
    "offdiag": ["N", "tau", "delta", "bucket_count", "mean_abs", "variance"],
}
EXPERIMENTS = tuple(COLUMNS)

IDENTITY_TOL = 1e-10
CS_SLACK_TOL = -1e-12

# key -> default (REQUIRED marks mandatory keys)
REQUIRED = object()
_COMMON = {"experiment": None, "seed": 0, "out": None, "format": "csv", "plot": False, "jobs": 1}
_SCHEMAS = {
    "catmap-crossed": {"A1": REQUIRED, "A2": REQUIRED, "N": REQUIRED, "eps": 0.1, "egorov_radius": 3},
    "commuting-locus": {"A1": REQUIRED, "A2": REQUIRED, "M": 1, "grid": 101, "tol": 1e-6},
    "hecke-sphere": {"ell": REQUIRED, "rotations": None, "random_rotations": 0, "eps": 1e-6, "Lmax": 2},
    "catmap-qe": {"A": REQUIRED, "N": REQUIRED, "modes": [[1, 0]], "eps": 0.1},
    "orbit-mass": {"A": REQUIRED, "point": REQUIRED, "N": REQUIRED, "j": None},
    "weyl-law": {"A": REQUIRED, "N": REQUIRED, "observable": {"kind": "catmap"}},
    "offdiag": {"A": REQUIRED, "N": REQUIRED, "mode": [1, 0], "tau": [0.0], "delta": 0.1},
}


class NumericalFailure(FiolabError, ArithmeticError):
    """A residual exceeded its tolerance; the run is marked FAILED."""


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    plot: bool = False
    jobs: int = 1

    def canonical(self) -> str:
        body = {"experiment": self.experiment, "seed": self.seed, **self.params}
        return json.dumps(body, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


@dataclass
class ExperimentResult:
    experiment: str
    columns: list
    rows: list
    extras: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)


# --- config validation --------------------------------------------------------


def _map(value, key):
    try:
        return IntegerSymplecticMap.coerce(value)
    except (ValueError, TypeError) as exc:
        raise ConfigInvalid(f"{key}: {exc}") from None


def _sweep(value, key, lo=None):
    if not isinstance(value, list) or not value:
        raise ConfigInvalid(f"{key} must be a nonempty list")
    if any(isinstance(v, bool) or not isinstance(v, int) for v in value):
        raise ConfigInvalid(f"{key} must contain integers")
    if any(b <= a for a, b in zip(value, value[1:])):
        raise ConfigInvalid(f"{key} must be strictly ascending")
    if lo is not None and value[0] < lo:
        raise ConfigInvalid(f"{key} entries must be >= {lo}")
    return value


def _positive(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigInvalid(f"{key} must be a positive number")
    return float(value)


def _int_vec(value, key, length=2):
    if not isinstance(value, list) or len(value) != length or any(isinstance(v, bool) or not isinstance(v, int) for v in value):
        raise ConfigInvalid(f"{key} must be a list of {length} integers")
    return value


def parse_config(raw: dict, experiment: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a config mapping strictly (unknown keys are rejected)."""
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a JSON object")
    name = experiment or raw.get("experiment")
    if name not in _SCHEMAS:
        raise ConfigInvalid(f"unknown experiment {name!r}; expected one of {', '.join(EXPERIMENTS)}")
    if raw.get("experiment") not in (None, name):
        raise ConfigInvalid(f"config is for {raw['experiment']!r}, not {name!r}")
    schema = _SCHEMAS[name]
    unknown = sorted(set(raw) - set(schema) - set(_COMMON))
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(k for k, v in schema.items() if v is REQUIRED and k not in raw)
    if missing:
        raise ConfigInvalid(f"missing config keys: {', '.join(missing)}")
    params = {k: raw.get(k, v) for k, v in schema.items()}
    common = {k: raw.get(k, v) for k, v in _COMMON.items() if k != "experiment"}
    for k, v in (overrides or {}).items():
        if v is not None:
            common[k] = v
    if isinstance(common["seed"], bool) or not isinstance(common["seed"], int):
        raise ConfigInvalid("seed must be an integer")
    if common["format"] not in ("csv", "json"):
        raise ConfigInvalid("format must be csv or json")
    if isinstance(common["jobs"], bool) or not isinstance(common["jobs"], int) or common["jobs"] < 1:
        raise ConfigInvalid("jobs must be a positive integer")
    _validate_params(name, params)
    return ExperimentConfig(name, params, **common)


def _validate_params(name, p):
    for key in ("A", "A1", "A2"):
        if key in p:
            _map(p[key], key)
    if "N" in p:
        _sweep(p["N"], "N", lo=2)
    if "eps" in p:
        _positive(p["eps"], "eps")
    if name == "catmap-crossed":
        if not isinstance(p["egorov_radius"], int) or p["egorov_radius"] < 0:
            raise ConfigInvalid("egorov_radius must be a nonnegative integer")
    elif name == "commuting-locus":
        if not isinstance(p["M"], int) or p["M"] < 1:
            raise ConfigInvalid("M must be a positive integer")
        if not isinstance(p["grid"], int) or p["grid"] < 2:
            raise ConfigInvalid("grid must be an integer >= 2")
        _positive(p["tol"], "tol")
    elif name == "hecke-sphere":
        _sweep(p["ell"], "ell", lo=0)
        if p["ell"][-1] > 200:
            raise ConfigInvalid("ell must be <= 200")
        rots = p["rotations"] or []
        if not isinstance(rots, list) or any(not isinstance(r, list) or len(r) != 3 for r in rots):
            raise ConfigInvalid("rotations must be a list of [alpha, beta, gamma]")
        if not isinstance(p["random_rotations"], int) or p["random_rotations"] < 0:
            raise ConfigInvalid("random_rotations must be a nonnegative integer")
        if not rots and not p["random_rotations"]:
            raise ConfigInvalid("need at least one rotation (rotations or random_rotations)")
        try:
            [RotationSpec(*r) for r in rots]
        except (ValueError, TypeError) as exc:
            raise ConfigInvalid(f"rotations: {exc}") from None
        if not isinstance(p["Lmax"], int) or p["Lmax"] < 0:
            raise ConfigInvalid("Lmax must be a nonnegative integer")
    elif name == "catmap-qe":
        if not isinstance(p["modes"], list) or not p["modes"]:
            raise ConfigInvalid("modes must be a nonempty list")
        for n in p["modes"]:
            _int_vec(n, "modes entry")
            if abs(n[0]) >= p["N"][0] or abs(n[1]) >= p["N"][0]:
                raise ConfigInvalid(f"mode {n} aliases at N={p['N'][0]}")
    elif name == "orbit-mass":
        i, k, Q = _int_vec(p["point"], "point", 3)
        if Q < 1:
            raise ConfigInvalid("point denominator must be positive")
        if p["j"] is not None:
            _sweep(p["j"], "j", lo=0)
            if p["j"][-1] >= p["N"][0]:
                raise ConfigInvalid("j indices must be below the smallest N")
    elif name == "weyl-law":
        obs = p["observable"]
        if not isinstance(obs, dict) or obs.get("kind") not in ("catmap", "translation"):
            raise ConfigInvalid("observable must be {'kind': 'catmap'|'translation', ...}")
        extra = set(obs) - {"kind", "map", "n"}
        if extra:
            raise ConfigInvalid(f"unknown observable keys: {', '.join(sorted(extra))}")
        if obs["kind"] == "catmap" and "map" in obs:
            _map(obs["map"], "observable.map")
        if obs["kind"] == "translation":
            _int_vec(obs.get("n"), "observable.n")
    elif name == "offdiag":
        _int_vec(p["mode"], "mode")
        if not isinstance(p["tau"], list) or not p["tau"]:
            raise ConfigInvalid("tau must be a nonempty list")
        for t in p["tau"]:
            if isinstance(t, bool) or not isinstance(t, (int, float)) or not math.isfinite(t):
                raise ConfigInvalid("tau entries must be finite numbers")
        if any(b <= a for a, b in zip(p["tau"], p["tau"][1:])):
            raise ConfigInvalid("tau must be strictly ascending")
        _positive(p["delta"], "delta")


def load_config(path, experiment=None, overrides=None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, experiment, overrides)


# --- row workers (module level so they pickle) ---------------------------------


def _row_catmap_crossed(p, N):
    A1, A2 = IntegerSymplecticMap.coerce(p["A1"]), IntegerSymplecticMap.coerce(p["A2"])
    U1, U2 = catmap_op(N, A1), catmap_op(N, A2)
    basis = EigenBasis.catmap(N, A1)
    series = diagonal_series(U2, basis, "U_N(A2)")
    S = float(np.mean(series.abs**2))
    eps = float(p["eps"])
    frac = density_one_fraction(series, eps)
    r = p["egorov_radius"]
    ego = max(max_egorov_residual(U1, A1, r), max_egorov_residual(U2, A2, r))
    uni = max(unitarity_residual(U1), unitarity_residual(U2))
    if uni > UNITARITY_TOL or ego > EGOROV_TOL:
        raise NumericalFailure(f"N={N}: unitarity {uni:.2e} / Egorov {ego:.2e} above tolerance")
    if frac < chebyshev_bound(S, eps):
        raise NumericalFailure(f"N={N}: density fraction {frac} below the Chebyshev bound")
    return [[N, S, float(series.abs.max()), frac, eps, ego, uni]]


def _row_commuting(p, m):
    A1 = IntegerSymplecticMap.coerce(p["A1"]) ** m
    A2 = IntegerSymplecticMap.coerce(p["A2"])
    exact = commuting_locus_measure(A1, A2)
    frac = sampled_commuting_fraction(A1, A2, p["grid"], p["tol"])
    return [[m, exact, frac, p["grid"], float(p["tol"])]]


def _hecke_spec(p, seed):
    rots = [RotationSpec(*r) for r in (p["rotations"] or [])]
    rng = np.random.default_rng(seed)
    rots += [random_rotation(rng) for _ in range(p["random_rotations"])]
    return HeckeSpec(tuple(rots))


def _row_hecke(p, ell, seed):
    spec = _hecke_spec(p, seed)
    basis = EigenBasis.hecke(ell, spec)
    Lmax = min(p["Lmax"], 2 * ell)
    symbols = [real_multiplication_op(ell, L, M) for L in range(0, Lmax + 1, 2) for M in range(-L, L + 1)]
    rows, extras = [], []
    for j, (lam, skipped, mu, mu_norm, gap, cs) in enumerate(hecke_row_checks(ell, spec, basis, symbols, p["eps"])):
        if mu > IDENTITY_TOL or gap > IDENTITY_TOL or cs < CS_SLACK_TOL:
            raise NumericalFailure(f"ell={ell}, j={j}: identity residual above tolerance")
        rows.append([ell, j, lam, int(skipped), mu, gap, cs])
        extras.append({"ell": ell, "j": j, "munuj_normalized_residual": mu_norm})
    return rows, extras


def _row_catmap_qe(p, N):
    basis = EigenBasis.catmap(N, p["A"])
    eps = float(p["eps"])
    rows = []
    for n1, n2 in p["modes"]:
        series = diagonal_series(translation_op(N, (n1, n2)), basis, f"T({n1},{n2})")
        S = float(np.mean(series.abs**2))
        rows.append([N, n1, n2, density_one_fraction(series, eps), eps, S])
    return rows


def _row_orbit_mass(p, N):
    A = IntegerSymplecticMap.coerce(p["A"])
    i, k, Q = p["point"]
    z = TorusPoint.rational(i, k, Q)
    L, _ = periodic_orbit(A, z)
    basis = EigenBasis.catmap(N, A)
    W = orbit_weights(A, N, z, basis)
    js = p["j"] if p["j"] is not None else range(N)
    rows = []
    for j in js:
        total = float(W[:, j].sum())
        dev = float(np.abs(W[:, j] / total - 1.0 / L).max()) if total >= 1e-300 else math.nan
        rows.append([N, L, j, dev, total])
    return rows


def _row_weyl(p, N):
    basis = EigenBasis.catmap(N, p["A"])
    obs = p["observable"]
    if obs["kind"] == "catmap":
        F = catmap_op(N, obs.get("map", p["A"]))
    else:
        F = translation_op(N, tuple(obs["n"]))
    avg, res = weyl_average_check(F, basis)
    if res > IDENTITY_TOL:
        raise NumericalFailure(f"N={N}: trace identity residual {res:.2e}")
    return [[N, avg.real, avg.imag, res]]


def _row_offdiag(p, N):
    basis = EigenBasis.catmap(N, p["A"])
    F = translation_op(N, tuple(p["mode"]))
    rows = []
    for tau in p["tau"]:
        b = offdiag_bucket(F, basis, float(tau), float(p["delta"]))
        rows.append([N, float(tau), float(p["delta"]), b.count, b.mean_abs, b.mean_sq])
    return rows


def _tasks(cfg: ExperimentConfig):
    p = cfg.params
    name = cfg.experiment
    if name == "catmap-crossed":
        return [(_row_catmap_crossed, (p, N)) for N in p["N"]]
    if name == "commuting-locus":
        return [(_row_commuting, (p, m)) for m in range(1, p["M"] + 1)]
    if name == "hecke-sphere":
        return [(_row_hecke, (p, ell, cfg.seed)) for ell in p["ell"]]
    if name == "catmap-qe":
        return [(_row_catmap_qe, (p, N)) for N in p["N"]]
    if name == "orbit-mass":
        return [(_row_orbit_mass, (p, N)) for N in p["N"]]
    if name == "weyl-law":
        return [(_row_weyl, (p, N)) for N in p["N"]]
    return [(_row_offdiag, (p, N)) for N in p["N"]]


def _call(task):
    fn, args = task
    out = fn(*args)
    return out if isinstance(out, tuple) else (out, [])


def run(cfg: ExperimentConfig) -> ExperimentResult:
    """Compute every row of the experiment; outputs are not written here."""
    tasks = _tasks(cfg)
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            parts = list(pool.map(_call, tasks))
    else:
        parts = [_call(t) for t in tasks]
    rows = [r for rs, _ in parts for r in rs]
    extras = [e for _, es in parts for e in es]
    prov = {
        "experiment": cfg.experiment,
        "config_sha256": cfg.digest(),
        "config": json.loads(cfg.canonical()),
        "tool": "fiolab",
        "version": __version__,
    }
    return ExperimentResult(cfg.experiment, list(COLUMNS[cfg.experiment]), rows, extras, prov)


# --- output -------------------------------------------------------------------


def format_cell(x) -> str:
    """Integers as-is; floats in shortest round-trip form (at most 17 digits)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def render_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([format_cell(x) for x in row])
    return buf.getvalue()


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def render_json(result: ExperimentResult) -> str:
    body = {
        "experiment": result.experiment,
        "columns": result.columns,
        "rows": [[_json_value(x) for x in row] for row in result.rows],
    }
    if result.extras:
        body["extras"] = [{k: _json_value(v) for k, v in e.items()} for e in result.extras]
    return json.dumps(body, sort_keys=True, indent=1) + "\n"


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over the target."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_csv(result: ExperimentResult, path) -> None:
    atomic_write(path, render_csv(result))


def emit_json(result: ExperimentResult, path) -> None:
    atomic_write(path, render_json(result))


def emit_provenance(result: ExperimentResult, path) -> None:
    """Provenance with a timestamp; kept apart so data files stay byte-stable."""
    prov = dict(result.provenance)
    prov["timestamp"] = datetime.now(timezone.utc).isoformat()
    atomic_write(path, json.dumps(prov, sort_keys=True, indent=1) + "\n")


_PLOT_AXES = {
    "catmap-crossed": ("N", "variance_sum", True),
    "catmap-qe": ("N", "variance_sum", True),
    "commuting-locus": ("m", "sampled_fraction", False),
    "hecke-sphere": ("j", "eigenvalue", False),
    "orbit-mass": ("N", "max_dev_from_uniform", True),
    "weyl-law": ("dim", "re_avg", False),
    "offdiag": ("N", "mean_abs", True),
}


def plot_svg(result: ExperimentResult, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "fiolab"
    xk, yk, loglog = _PLOT_AXES[result.experiment]
    xi, yi = result.columns.index(xk), result.columns.index(yk)
    xs = np.array([float(r[xi]) for r in result.rows])
    ys = np.array([float(r[yi]) for r in result.rows])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ok = np.isfinite(ys) & (ys > 0 if loglog else True)
    ax.plot(xs[ok], ys[ok], "o-" if loglog else "o", ms=3)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(xk)
    ax.set_ylabel(yk)
    ax.set_title(result.experiment)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write(path, buf.getvalue())


def write_outputs(result: ExperimentResult, cfg: ExperimentConfig, out_dir) -> list:
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, result.experiment)
    written = []
    if cfg.format == "csv":
        emit_csv(result, base + ".csv")
        written.append(base + ".csv")
    else:
        emit_json(result, base + ".json")
        written.append(base + ".json")
    if cfg.plot:
        plot_svg(result, base + ".svg")
        written.append(base + ".svg")
    emit_provenance(result, base + ".provenance.json")
    written.append(base + ".provenance.json")
    return written
