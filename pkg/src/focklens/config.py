"""Recipe configuration documents.

A config is a line-oriented ``key = value`` document ('#' starts a comment).
Every key belongs to the schema of its recipe; unknown keys are rejected and
all values are range-checked.  ``parse_config`` resolves defaults so a run
can echo its fully-resolved configuration alongside the outputs.

List values are comma-separated: ``n_list = 1000, 2500, 10000``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .errors import ParseError, RangeViolation, UnknownKey

RECIPE_IDS = ("fig1b", "fig1c", "fig1d", "fig2b", "fig2c", "fig3c", "fig3d",
              "custom")


@dataclass(frozen=True)
class KeySpec:
    """Type, default and bounds of one configuration key."""

    type: str                     # int | float | str | int_list | float_list
    default: Any = None
    lo: float | None = None
    hi: float | None = None
    required: bool = False
    help: str = ""


_COMMON = {
    "recipe": KeySpec("str", required=True, help="recipe id"),
    "seed": KeySpec("int", default=1234, help="base RNG seed"),
    "out_dir": KeySpec("str", default="out", help="output directory"),
    "workers": KeySpec("int", default=1, lo=1, help="parallel worker count"),
}

_OPT_KEYS = {
    "restarts": KeySpec("int", default=4, lo=1, help="optimizer restarts"),
    "budget": KeySpec("int", default=6000, lo=50,
                      help="fidelity evaluations per restart"),
    "phi_bound": KeySpec("float", default=1.2, lo=1e-6,
                         help="bound on |phi0| per lens (rad)"),
}

SCHEMAS: dict[str, dict[str, KeySpec]] = {
    "fig1b": {
        "alpha": KeySpec("float", default=100.0, lo=0.0,
                         help="initial coherent amplitude"),
        "phi0": KeySpec("float", default=2.45e-3, lo=0.0,
                        help="Kerr chirp accumulated over the Kerr stage"),
        "kerr_time": KeySpec("float", default=0.5, lo=0.0,
                             help="duration of the Kerr stage (1/eps_p)"),
        "eps_p": KeySpec("float", default=1.0, lo=1e-12,
                         help="drive strength"),
        "total_time": KeySpec("float", default=1.9, lo=0.0,
                              help="total protocol duration"),
        "snapshots": KeySpec("int", default=36, lo=1,
                             help="number of snapshot times"),
        "n_stride": KeySpec("int", default=1, lo=1,
                            help="downsampling stride over n in snapshots"),
        "window_sigma": KeySpec("float", default=10.0, lo=1.0,
                                help="window half-width in units of sqrt(n)"),
    },
    "fig1d": {
        "n0": KeySpec("float", default=1.0e4, lo=1.0, help="focal center"),
        "eps_p": KeySpec("float", default=1.0, lo=1e-12),
        "phi_m": KeySpec("float", default=2.45e-3, lo=1e-12,
                         help="phase normalization of the sweep"),
        "phi_frac_min": KeySpec("float", default=0.2, lo=1e-6),
        "phi_frac_max": KeySpec("float", default=1.0, lo=1e-6),
        "phi_points": KeySpec("int", default=7, lo=2),
        "t_min": KeySpec("float", default=0.2, lo=0.0),
        "t_max": KeySpec("float", default=6.0, lo=1e-6),
        "t_points": KeySpec("int", default=80, lo=2),
    },
    "fig2b": {
        "n_list": KeySpec("int_list", default=[10000, 100000]),
        "lens_counts": KeySpec("int_list", default=[1, 2, 3]),
        **_OPT_KEYS,
    },
    "fig2c": {
        "n_list": KeySpec("int_list",
                          default=[1000, 2500, 10000, 40000, 100000]),
        "lens_counts": KeySpec("int_list", default=[0, 1, 2, 3]),
        "fit_min_n": KeySpec("float", default=0.0, lo=0.0,
                             help="fit only photon numbers >= this"),
        **_OPT_KEYS,
    },
    "fig3c": {
        "n_list": KeySpec("int_list", default=[2500, 10000, 40000, 100000]),
        "fit_min_n": KeySpec("float", default=2500.0, lo=0.0),
        **_OPT_KEYS,
    },
    "fig3d": {
        "n": KeySpec("int", default=2500, lo=1),
        "ratios": KeySpec("float_list",
                          default=[1.0, 3.0, 10.0, 30.0, 100.0, 200.0],
                          lo=1e-12,
                          help="chi/kappa grid (kappa = chi/ratio > 0)"),
        "n_traj": KeySpec("int", default=200, lo=1),
        "tau_kerr": KeySpec("float", default=0.5, lo=1e-9,
                            help="Kerr stage duration; chi = phi0/tau_kerr"),
        "eps_p": KeySpec("float", default=1.0, lo=1e-12),
        **_OPT_KEYS,
    },
    "custom": {
        # lens run (evolve subcommand)
        "alpha": KeySpec("float", lo=0.0),
        "target_n": KeySpec("int", lo=0),
        "phi0_list": KeySpec("float_list"),
        "beta_re_list": KeySpec("float_list"),
        "beta_im_list": KeySpec("float_list"),
        "center_list": KeySpec("float_list"),
        # power-law fit (fit subcommand)
        "input_csv": KeySpec("str"),
        "x_column": KeySpec("str"),
        "y_column": KeySpec("str"),
        "min_x": KeySpec("float", default=0.0),
    },
}
SCHEMAS["fig1c"] = dict(SCHEMAS["fig1b"])


@dataclass
class RecipeConfig:
    """A fully-resolved recipe configuration."""

    recipe: str
    seed: int
    out_dir: str
    workers: int
    params: dict

    def resolved(self) -> dict:
        out = {"recipe": self.recipe, "seed": self.seed,
               "out_dir": self.out_dir, "workers": self.workers}
        out.update(self.params)
        return out


def _coerce(key: str, raw: str, spec: KeySpec, line_no: int):
    def fail(msg):
        raise ParseError(f"line {line_no}: key '{key}': {msg}")

    def check_range(v):
        if spec.lo is not None and v < spec.lo:
            raise RangeViolation(
                f"line {line_no}: key '{key}' = {v} below minimum {spec.lo}")
        if spec.hi is not None and v > spec.hi:
            raise RangeViolation(
                f"line {line_no}: key '{key}' = {v} above maximum {spec.hi}")
        return v

    if spec.type == "str":
        return raw
    if spec.type == "int":
        try:
            return check_range(int(raw))
        except ValueError:
            fail(f"expected integer, got {raw!r}")
    if spec.type == "float":
        try:
            return check_range(float(raw))
        except ValueError:
            fail(f"expected number, got {raw!r}")
    if spec.type in ("int_list", "float_list"):
        cast = int if spec.type == "int_list" else float
        try:
            vals = [cast(tok.strip()) for tok in raw.split(",") if tok.strip()]
        except ValueError:
            fail(f"expected comma-separated {cast.__name__}s, got {raw!r}")
        if not vals:
            fail("expected a non-empty list")
        return [check_range(v) for v in vals]
    fail(f"unhandled type {spec.type}")


def parse_config(text: str) -> RecipeConfig:
    """Parse and validate a configuration document; defaults resolved."""
    entries: dict[str, tuple[str, int]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(f"line {line_no}: expected 'key = value', got {line!r}")
        key, raw = body.split("=", 1)
        key = key.strip()
        raw = raw.strip()
        if not key:
            raise ParseError(f"line {line_no}: empty key")
        if key in entries:
            raise ParseError(f"line {line_no}: duplicate key '{key}'")
        entries[key] = (raw, line_no)

    if "recipe" not in entries:
        raise ParseError(
            "missing required key: recipe (one of " + ", ".join(RECIPE_IDS) + ")")
    recipe = entries.pop("recipe")[0]
    if recipe not in RECIPE_IDS:
        raise RangeViolation(
            f"unknown recipe '{recipe}'; expected one of " + ", ".join(RECIPE_IDS))

    schema = SCHEMAS[recipe]
    common = {k: v for k, v in _COMMON.items() if k != "recipe"}
    resolved_common = {k: spec.default for k, spec in common.items()}
    params = {k: spec.default for k, spec in schema.items()
              if spec.default is not None}

    for key, (raw, line_no) in entries.items():
        if key in common:
            resolved_common[key] = _coerce(key, raw, common[key], line_no)
        elif key in schema:
            params[key] = _coerce(key, raw, schema[key], line_no)
        else:
            raise UnknownKey(
                f"line {line_no}: unknown key '{key}' for recipe '{recipe}'")

    return RecipeConfig(recipe=recipe, seed=resolved_common["seed"],
                        out_dir=resolved_common["out_dir"],
                        workers=resolved_common["workers"], params=params)


def require_keys(config: RecipeConfig, keys: list[str], purpose: str):
    """Raise ParseError listing any of the given keys that are missing."""
    missing = [k for k in keys if k not in config.params]
    if missing:
        raise ParseError(
            f"recipe '{config.recipe}' used for {purpose} requires keys: "
            + ", ".join(missing))
