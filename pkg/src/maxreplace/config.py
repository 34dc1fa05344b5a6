"""Flat key-value experiment configs.

Format: one ``dotted.key = value`` per line, ``#`` comments, blank lines
ignored.  Values are scalars, comma lists, or ``start:step:stop`` grid
ranges.  The full schema is documented in the README and mirrored by the
bundled presets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


from . import models
from .engine import CONTRAST, ExperimentPlan
from .errors import ConfigParseError, InvalidParameter
from .norming import (Norming, chi_norming, explicit_norming, gaussian_norming,
                      order_stat_norming, quantile_norming)


def parse_config_text(text: str) -> dict[str, str]:
    """Raw key -> value-string mapping; duplicate keys are an error."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigParseError(f"line {lineno}: empty key or value in {raw!r}")
        if key in out:
            raise ConfigParseError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


class _Fields:
    """Typed access to the raw mapping with field-naming errors."""

    def __init__(self, raw: dict[str, str]):
        self.raw = dict(raw)
        self.seen: set[str] = set()

    def _get(self, key, default=None, required=False):
        self.seen.add(key)
        if key in self.raw:
            return self.raw[key]
        if required:
            raise ConfigParseError(f"missing required field {key!r}")
        return default

    def str_(self, key, default=None, required=False, choices=None):
        v = self._get(key, default, required)
        if v is not None and choices is not None and v not in choices:
            raise ConfigParseError(f"field {key!r}: expected one of {sorted(choices)}, got {v!r}")
        return v

    def int_(self, key, default=None, required=False):
        v = self._get(key, default, required)
        if v is None or isinstance(v, int):
            return v
        try:
            return int(v)
        except ValueError:
            raise ConfigParseError(f"field {key!r}: expected an integer, got {v!r}") from None

    def float_(self, key, default=None, required=False):
        v = self._get(key, default, required)
        if v is None or isinstance(v, float):
            return v
        try:
            return float(v)
        except ValueError:
            raise ConfigParseError(f"field {key!r}: expected a number, got {v!r}") from None

    def bool_(self, key, default=None):
        v = self._get(key, default)
        if v is None or isinstance(v, bool):
            return v
        low = v.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigParseError(f"field {key!r}: expected true/false, got {v!r}")

    def float_list(self, key, default=None, required=False):
        v = self._get(key, default, required)
        if v is None or isinstance(v, tuple):
            return v
        try:
            return tuple(float(part) for part in v.split(","))
        except ValueError:
            raise ConfigParseError(f"field {key!r}: expected comma-separated numbers, got {v!r}") from None

    def int_list(self, key, default=None, required=False):
        v = self._get(key, default, required)
        if v is None or isinstance(v, tuple):
            return v
        try:
            return tuple(int(part) for part in v.split(","))
        except ValueError:
            raise ConfigParseError(f"field {key!r}: expected comma-separated integers, got {v!r}") from None

    def axis(self, key, required=True):
        """Grid axis: 'start:step:stop' (inclusive) or a comma list."""
        v = self._get(key, required=required)
        if v is None:
            return None
        if ":" in v:
            parts = v.split(":")
            if len(parts) != 3:
                raise ConfigParseError(f"field {key!r}: ranges are start:step:stop, got {v!r}")
            try:
                start, step, stop = (float(p) for p in parts)
            except ValueError:
                raise ConfigParseError(f"field {key!r}: non-numeric range {v!r}") from None
            if step <= 0 or stop < start:
                raise ConfigParseError(f"field {key!r}: need step > 0 and stop >= start")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(start + i * step for i in range(count))
        try:
            return tuple(float(part) for part in v.split(","))
        except ValueError:
            raise ConfigParseError(f"field {key!r}: expected a range or comma list, got {v!r}") from None

    def reject_unknown(self):
        unknown = set(self.raw) - self.seen
        if unknown:
            raise ConfigParseError(f"unknown config field(s): {sorted(unknown)}")


@dataclass(frozen=True)
class DPrimeRequest:
    k_values: tuple[int, ...]
    x_level: float
    replications: int


@dataclass(frozen=True)
class ExperimentConfig:
    process: models.ProcessSpec
    selection: models.SelectionSpec
    mode: str
    n: int
    replications: int
    grid: models.EvalGrid
    seed: int | None
    norming_choice: str          # auto | quantile | explicit
    norming_a: float | None
    norming_b: float | None
    outputs_dir: str | None
    figures: bool
    dprime: DPrimeRequest | None
    contrast_point: tuple[float, float] | None
    echo: dict[str, str] = field(default_factory=dict)

    def resolve_norming(self) -> Norming:
        proc, n = self.process, self.n
        if self.norming_choice == "explicit":
            if self.norming_a is None or self.norming_b is None:
                raise ConfigParseError("explicit norming needs fields norming.a and norming.b")
            return explicit_norming(self.norming_a, self.norming_b, n)
        if self.norming_choice == "quantile":
            if isinstance(proc, models.GaussianProcess):
                return quantile_norming("gaussian", n)
            if isinstance(proc, models.GenericIIDProcess):
                return quantile_norming(proc.marginal.name, n)
            raise ConfigParseError(
                f"quantile norming is not available for {type(proc).__name__}")
        # auto-by-family
        if isinstance(proc, models.GaussianProcess):
            return gaussian_norming(n)
        if isinstance(proc, models.ChiProcess):
            return chi_norming(n, proc.d)
        if isinstance(proc, models.OrderStatProcess):
            return order_stat_norming(n, proc.d, proc.r)
        if isinstance(proc, models.GenericIIDProcess):
            return quantile_norming(proc.marginal.name, n)
        raise ConfigParseError(f"no automatic norming for {type(proc).__name__}")

    def build_plan(self, seed: int | None = None) -> ExperimentPlan:
        use_seed = seed if seed is not None else self.seed
        if use_seed is None:
            raise ConfigParseError(
                "no seed: set 'seed' in the config, pass --seed, or export MAXREPLACE_SEED")
        plan = ExperimentPlan(
            process=self.process, selection=self.selection, mode=self.mode,
            n=self.n, replications=self.replications, grid=self.grid,
            seed=use_seed, norming=self.resolve_norming())
        return plan.validate()


def _build_covariance(f: _Fields) -> models.CovarianceSpec:
    kind = f.str_("process.cov.kind", default="iid",
                  choices={"iid", "ar1", "powerdecay", "mdependent", "explicit"})
    if kind == "iid":
        return models.IID()
    if kind == "ar1":
        return models.AR1(rho=f.float_("process.cov.rho", required=True))
    if kind == "powerdecay":
        return models.PowerDecay(gamma=f.float_("process.cov.gamma", required=True),
                                 scale=f.float_("process.cov.scale", default=1.0))
    if kind == "mdependent":
        return models.MDependent(m=f.int_("process.cov.m", required=True),
                                 weights=f.float_list("process.cov.weights", required=True))
    return models.Explicit(values=f.float_list("process.cov.values", required=True))


def _build_process(f: _Fields) -> models.ProcessSpec:
    family = f.str_("process.family", required=True,
                    choices={"gaussian", "chi", "orderstat", "iid"})
    if family == "gaussian":
        return models.GaussianProcess(cov=_build_covariance(f))
    if family == "chi":
        return models.ChiProcess(d=f.int_("process.d", required=True),
                                 cov=_build_covariance(f))
    if family == "orderstat":
        return models.OrderStatProcess(d=f.int_("process.d", required=True),
                                       r=f.int_("process.r", required=True),
                                       cov=_build_covariance(f))
    name = f.str_("process.marginal", required=True)
    marginal = models.Marginal(
        name=name,
        alpha=f.float_("process.pareto_alpha"),
        values=f.float_list("process.values"),
        probs=f.float_list("process.probs"))
    return models.GenericIIDProcess(marginal=marginal)


def _build_lambda(f: _Fields) -> models.LambdaLaw:
    kind = f.str_("selection.lambda.kind", required=True,
                  choices={"pointmass", "uniform01", "beta", "discrete"})
    if kind == "pointmass":
        return models.PointMass(p=f.float_("selection.lambda.p", required=True))
    if kind == "uniform01":
        return models.Uniform01()
    if kind == "beta":
        return models.BetaLaw(alpha=f.float_("selection.lambda.alpha", required=True),
                              beta=f.float_("selection.lambda.beta", required=True))
    return models.DiscreteLaw(values=f.float_list("selection.lambda.values", required=True),
                              probs=f.float_list("selection.lambda.probs", required=True))


def _build_selection(f: _Fields) -> models.SelectionSpec:
    scheme = f.str_("selection.scheme", default="conditionally_iid",
                    choices={"conditionally_iid", "periodic"})
    law = _build_lambda(f)
    if scheme == "periodic":
        return models.SelectionSpec(lambda_law=law, scheme=models.PERIODIC_PATTERN,
                                    pattern=f.int_list("selection.pattern", required=True))
    return models.SelectionSpec(lambda_law=law)


def load_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigParseError naming the offending field."""
    raw = parse_config_text(text)
    f = _Fields(raw)
    try:
        process = _build_process(f)
        selection = _build_selection(f)
        mode = f.str_("mode", required=True, choices={models.REPLACING, models.MISSING, CONTRAST})
        n = f.int_("n", required=True)
        replications = f.int_("replications", required=True)
        grid = models.EvalGrid(xs=f.axis("grid.xs"), ys=f.axis("grid.ys"))
        seed = f.int_("seed")
        norming_choice = f.str_("norming.choice", default="auto",
                                choices={"auto", "quantile", "explicit"})
        norming_a = f.float_("norming.a")
        norming_b = f.float_("norming.b")
        outputs_dir = f.str_("outputs.dir")
        figures = f.bool_("outputs.figures", default=True)
        dprime = None
        if f.bool_("dprime.enabled", default=False):
            dprime = DPrimeRequest(
                k_values=f.int_list("dprime.k", default=(5, 10, 20)),
                x_level=f.float_("dprime.x_level", default=0.0),
                replications=f.int_("dprime.replications", default=200_000))
        else:
            for key in ("dprime.k", "dprime.x_level", "dprime.replications"):
                f.seen.add(key)
        contrast_point = None
        cx, cy = f.float_("contrast.x"), f.float_("contrast.y")
        if mode == CONTRAST:
            contrast_point = (cx if cx is not None else 0.0,
                              cy if cy is not None else 1.0)
        elif cx is not None or cy is not None:
            raise ConfigParseError("contrast.x/contrast.y only apply when mode = contrast")
        f.reject_unknown()

        for spec in (process, selection, grid):
            models.validate_spec(spec)
        cfg = ExperimentConfig(
            process=process, selection=selection, mode=mode, n=n,
            replications=replications, grid=grid, seed=seed,
            norming_choice=norming_choice, norming_a=norming_a, norming_b=norming_b,
            outputs_dir=outputs_dir, figures=figures, dprime=dprime,
            contrast_point=contrast_point,
            echo={k: v for k, v in raw.items() if not k.startswith("outputs.")})
        if cfg.replications < 1:
            raise ConfigParseError("field 'replications': must be >= 1")
        if cfg.n < 1:
            raise ConfigParseError("field 'n': must be >= 1")
        return cfg
    except InvalidParameter as exc:
        raise ConfigParseError(str(exc)) from exc


def load_config_file(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())
