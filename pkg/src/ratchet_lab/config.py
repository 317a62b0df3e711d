"""TOML experiment configs.

A config fully determines a run.  Layout::

    model = "random-flashing"
    seed = 0
    output_dir = "runs/transport"

    [grid]            # optional; default is the smallest admissible n >= 2001
    n = 2001

    [coefficients]
    sigma = 0.1
    varsigma = 1.0
    kappa = 1.0

    [potential]
    k = 2
    a = 0.15
    depth = 1.0

    [nu]
    kind = "peaked"   # constant | peaked | cosine
    s_star = 0.35
    width = 0.05
    base = 0.1
    mass = 1.0

    [eta]
    kind = "constant" # constant | peaked | cosine | conjugate
    value = 1.0

Optional tables: ``[psi_alt]`` (collaborative), ``[sweep]``, ``[transient]``,
``[schedule]`` (deterministic flashing) and ``[particles]``.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import (
    Grid,
    GridFn,
    ModelError,
    RatchetParams,
    conjugate_eta,
    make_constant_rate,
    make_peaked_rate,
    make_smooth_rate,
    make_smoothed_sawtooth,
)
from .transient import FlashingSchedule

MODELS = (
    "random-flashing",
    "deterministic-flashing",
    "collaborative",
    "squeezing",
    "diffusive-mean",
    "particles",
)

DEFAULT_SIGMAS = tuple(float(s) for s in np.logspace(-1, -4, 10))
DEFAULT_KAPPAS = tuple(float(c) for c in np.logspace(0, np.log10(200.0), 8))

_ALLOWED = {
    "": {"model", "seed", "output_dir", "grid", "coefficients", "potential", "nu", "eta",
         "psi_alt", "sweep", "transient", "schedule", "particles"},
    "grid": {"n"},
    "coefficients": {"sigma", "varsigma", "kappa"},
    "potential": {"k", "a", "depth"},
    "nu": {"kind", "value", "s_star", "width", "base", "mass", "mean", "amplitude", "phase"},
    "eta": {"kind", "value", "s_star", "width", "base", "mass", "mean", "amplitude", "phase"},
    "psi_alt": {"kind", "a", "depth"},
    "sweep": {"sigma", "kappa"},
    "transient": {"dt", "tol", "max_steps", "record_every"},
    "schedule": {"T", "T_tr", "sigma", "dt", "tol", "max_cycles"},
    "particles": {"n", "t_end", "dt"},
}


class ConfigError(ValueError):
    """Invalid config; the message carries ``file:line`` when it can be located."""


def _key_line(text: str, table: str, key: str | None) -> int | None:
    current = ""
    header = re.compile(r"^\s*\[\s*([A-Za-z0-9_.-]+)\s*\]")
    for no, line in enumerate(text.splitlines(), 1):
        m = header.match(line)
        if m:
            current = m.group(1)
            if key is None and current == table:
                return no
            continue
        if key is not None and current == table and re.match(rf"^\s*{re.escape(key)}\s*=", line):
            return no
    return None


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    seed: int
    output_dir: Path
    raw: dict
    source: str = ""
    path: Path | None = None
    grid_n: int | None = None
    sweep_sigmas: tuple = ()
    sweep_kappas: tuple = ()

    # -- error reporting ---------------------------------------------------
    def error(self, message: str, table: str = "", key: str | None = None) -> ConfigError:
        line = _key_line(self.source, table, key) if self.source else None
        if line is None and key is not None:
            line = _key_line(self.source, table, None)
        where = f"{self.path or '<config>'}:{line}" if line else str(self.path or "<config>")
        name = f"{table}.{key}" if table and key else (key or table or "config")
        return ConfigError(f"{where}: {name}: {message}")

    def table(self, name: str) -> dict:
        return self.raw.get(name, {})

    def number(self, table: str, key: str, default=None, positive: bool = True, integer: bool = False):
        t = self.table(table)
        if key not in t:
            if default is None:
                raise self.error("missing required value", table, None if not t else key)
            return default
        v = t[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.error(f"expected a number, got {v!r}", table, key)
        if integer and int(v) != v:
            raise self.error(f"expected an integer, got {v!r}", table, key)
        if not np.isfinite(v) or (positive and not v > 0):
            raise self.error(f"must be a positive finite number, got {v!r}", table, key)
        return int(v) if integer else float(v)

    # -- model objects -----------------------------------------------------
    @property
    def k(self) -> int:
        k = self.number("potential", "k", integer=True)
        if k < 2:
            raise self.error(f"tooth count must be an integer > 1, got {k}", "potential", "k")
        return k

    def grid(self) -> Grid:
        k = self.k
        n = self.grid_n if self.grid_n is not None else self.table("grid").get("n")
        if n is None:
            return Grid.for_teeth(k)
        if isinstance(n, bool) or not isinstance(n, int) or n < 3:
            raise self.error(f"grid size must be an integer >= 3, got {n!r}", "grid", "n")
        if (n - 1) % (2 * k):
            raise self.error(
                f"n - 1 must be divisible by 2k = {2 * k} so every half-period ends on a node (n={n})",
                "grid", "n",
            )
        return Grid(n)

    def _rate(self, table: str, grid: Grid, potential=None, sigma=None, kappa=None, nu=None):
        t = self.table(table)
        if not t:
            raise self.error("missing rate table", table)
        kind = t.get("kind", "constant")
        k = self.k
        try:
            if kind == "constant":
                return make_constant_rate(self.number(table, "value"), k, grid)
            if kind == "peaked":
                return make_peaked_rate(
                    k,
                    self.number(table, "s_star"),
                    self.number(table, "width"),
                    self.number(table, "base"),
                    self.number(table, "mass"),
                    grid,
                )
            if kind == "cosine":
                return make_smooth_rate(
                    k,
                    self.number(table, "mean"),
                    self.number(table, "amplitude", 0.0, positive=False),
                    self.number(table, "phase", 0.0, positive=False),
                    grid,
                )
            if kind == "conjugate" and table == "eta":
                return conjugate_eta(potential, nu, kappa, sigma)
        except ModelError as exc:
            raise self.error(str(exc), table) from exc
        raise self.error(f"unknown rate kind {kind!r}", table, "kind")

    def params(self) -> RatchetParams:
        """Build and validate the model objects named by the config."""
        grid = self.grid()
        k = self.k
        a = self.number("potential", "a")
        if not a < 1.0 / k:
            raise self.error(f"minimum offset must satisfy 0 < a < 1/k = {1.0 / k:.6g}, got a={a}",
                             "potential", "a")
        try:
            pot = make_smoothed_sawtooth(k, a, self.number("potential", "depth", 1.0), grid)
        except ModelError as exc:
            raise self.error(str(exc), "potential") from exc
        sigma = self.number("coefficients", "sigma")
        kappa = self.number("coefficients", "kappa")
        varsigma = self.number("coefficients", "varsigma", 1.0)
        nu = self._rate("nu", grid)
        eta = self._rate("eta", grid, pot, sigma, kappa, nu)
        psi_alt = self._psi_alt(grid)
        if self.model == "collaborative" and psi_alt is None:
            raise self.error("collaborative model needs a [psi_alt] table", "psi_alt")
        try:
            return RatchetParams(sigma, varsigma, kappa, pot, nu, eta, psi_alt)
        except ModelError as exc:
            raise self.error(str(exc), "coefficients") from exc

    def _psi_alt(self, grid: Grid) -> GridFn | None:
        t = self.table("psi_alt")
        if not t:
            return None
        kind = t.get("kind", "sawtooth")
        if kind == "zero":
            return GridFn(grid, np.zeros(grid.n))
        if kind == "same":
            return make_smoothed_sawtooth(self.k, self.number("potential", "a"),
                                          self.number("potential", "depth", 1.0), grid).samples
        if kind == "sawtooth":
            try:
                return make_smoothed_sawtooth(self.k, self.number("psi_alt", "a"),
                                              self.number("psi_alt", "depth", 1.0), grid).samples
            except ModelError as exc:
                raise self.error(str(exc), "psi_alt") from exc
        raise self.error(f"unknown second-potential kind {kind!r}", "psi_alt", "kind")

    def schedule(self) -> FlashingSchedule:
        T = self.number("schedule", "T")
        T_tr = self.number("schedule", "T_tr")
        try:
            return FlashingSchedule(T, T_tr)
        except ModelError as exc:
            raise self.error(str(exc), "schedule") from exc

    def with_overrides(self, grid_n=None, output_dir=None, seed=None) -> "ExperimentConfig":
        cfg = self
        if grid_n is not None:
            cfg = replace(cfg, grid_n=int(grid_n))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=Path(output_dir))
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        return cfg

    def validate(self) -> "ExperimentConfig":
        """Construct every model object once so errors surface before any solve."""
        self.params()
        if self.model == "deterministic-flashing":
            self.schedule()
        if self.model == "particles":
            self.number("particles", "n", 100_000, integer=True)
            self.number("particles", "t_end", 6.0)
            self.number("particles", "dt", 2e-3)
        return self


def _float_list(cfg: ExperimentConfig, key: str, default: tuple) -> tuple:
    vals = cfg.table("sweep").get(key)
    if vals is None:
        return default
    if not isinstance(vals, list) or not vals:
        raise cfg.error("expected a nonempty list of positive numbers", "sweep", key)
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise cfg.error(f"expected positive numbers, got {v!r}", "sweep", key)
        out.append(float(v))
    return tuple(out)


def parse_config(text: str, path: Path | None = None) -> ExperimentConfig:
    where = str(path or "<config>")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{where}: TOML syntax error: {exc}") from exc
    probe = ExperimentConfig("", 0, Path("."), raw, text, path)
    for table, allowed in _ALLOWED.items():
        section = raw if table == "" else raw.get(table, {})
        if not isinstance(section, dict):
            raise probe.error("expected a table", table)
        for key in section:
            if key not in allowed:
                raise probe.error("unknown key", table, key)
    model = raw.get("model")
    if model not in MODELS:
        raise probe.error(f"model must be one of {', '.join(MODELS)}; got {model!r}", "", "model")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise probe.error(f"seed must be a nonnegative integer, got {seed!r}", "", "seed")
    out = raw.get("output_dir", "out")
    if not isinstance(out, str):
        raise probe.error("output_dir must be a string", "", "output_dir")
    cfg = ExperimentConfig(model, seed, Path(out), raw, text, path)
    has_sweep = "sweep" in raw
    return replace(
        cfg,
        sweep_sigmas=_float_list(cfg, "sigma", DEFAULT_SIGMAS) if has_sweep else (),
        sweep_kappas=_float_list(cfg, "kappa", DEFAULT_KAPPAS) if has_sweep else (),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    return parse_config(text, path)
