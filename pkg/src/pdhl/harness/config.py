"""Experiment configuration: a line-based ``key = value`` grammar.

Configs are plain text, one assignment per line::

    # A_4 lower-bound sweep at fixed eps
    experiment = scaling
    dim        = 2
    outer      = 0, 1
    sweep.eps  = 0.125
    sweep.eta  = 0.25, 0.125, 0.0625
    sweep.n    = 513, 1025, 2049
    p          = 4
    which      = A_p
    out        = runs/a4-sweep

``#`` starts a comment anywhere on a line; blank lines are skipped.
Keys are dotted lowercase words, list values are comma-separated, and
scalars broadcast against the longest sweep list.  Unknown keys,
duplicate keys, and malformed values are rejected with their line
number, so a typo cannot silently fall back to a default.

Recognized keys (defaults in brackets):

==================  =====================================================
experiment          solve | corrector | rate | scaling | eig | witness
dim                 grid dimension, >= 2 (required)
outer               box as ``lo, hi`` (all axes) or ``2*dim`` numbers
                    [0, 1]; must be square
sweep.eps           cell size list (required when there are holes)
sweep.eta           hole size list, each in (0, 1/2)
sweep.n             nodes per axis of the domain grid (solve, corrector,
                    rate, scaling, and boxed eig runs)
sweep.cell          nodes per cell edge (witness and periodic-cell eig)
p                   exponent list for scaling runs [2]
which               constants to estimate: A_p, B_p, C_p, D_p (scaling)
trials              full | witness | random [full]
trials.random       random trials per sweep point [20]
holes.shape         ball | square | axis_ellipse | none [ball]
holes.radius        ball radius in cell units [0.125]
holes.half_side     square half-side in cell units
holes.semi_axes     ellipse semi-axes, one per dimension
holes.offsets       fixed | random [fixed]
holes.amplitude     random-offset amplitude, < 0.25 [0.24]
profile.radius      truncation radius for numeric hole profiles [auto]
profile.n           grid nodes for numeric hole profiles [auto]
boundary            linear | zero boundary trace for rate runs [linear]
seed                base RNG seed [0]
solver.tol          iterative-solver tolerance [1e-10]
fit.x               eta | log_eta abscissa for exponent fits
                    [eta for scaling, log_eta otherwise]
plot                yes | no: emit SVG plots for fits [yes]
coarse              yes | no: record window-RMS gradient ratios [no]
snapshots           yes | no: write per-point field snapshots [no]
out                 output directory [runs/<experiment>]
threads             worker pool size [1]
==================  =====================================================

Every ``(eps, eta, grid)`` triple is checked against the four-nodes-per-
hole-diameter resolution rule before any solve starts, so an infeasible
sweep fails at load time, not hours in.  ``out``, ``threads``, and
``plot`` steer execution only; all other keys are part of the
experiment's identity and enter the manifest's config hash.
"""

import hashlib
import re
from dataclasses import dataclass, fields
from pathlib import Path

from ..errors import ConfigInvalid
from ..geometry import axis_ellipse, ball, square

KINDS = ("solve", "corrector", "rate", "scaling", "eig", "witness")
CONSTANT_NAMES = ("A_p", "B_p", "C_p", "D_p")

# kinds that rasterize the outer box (sweep.n); witness is cell-only and
# eig accepts either grid
_BOX_KINDS = ("solve", "corrector", "rate", "scaling")
_HOLE_FREE_OK = ("solve", "eig")

_TOL = 1e-12
_KEY_RE = re.compile(r"[a-z][a-z0-9_]*(\.[a-z][a-z0-9_]*)*")
_BOOLS = {
    "yes": True, "true": True, "on": True, "1": True,
    "no": False, "false": False, "off": False, "0": False,
}


def parse_config(text):
    """Parse config text into ``{key: (raw_value, line_number)}``.

    Raises ConfigInvalid for lines that are not assignments, malformed
    or duplicate keys, and empty values.
    """
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(
                f"line {lineno}: expected 'key = value', got {raw.strip()!r}"
            )
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not _KEY_RE.fullmatch(key):
            raise ConfigInvalid(f"line {lineno}: malformed key {key!r}")
        if not value:
            raise ConfigInvalid(f"line {lineno}: empty value for {key!r}")
        if key in entries:
            raise ConfigInvalid(
                f"line {lineno}: duplicate key {key!r} "
                f"(first set on line {entries[key][1]})"
            )
        entries[key] = (value, lineno)
    return entries


# key -> (field name, converter tag, choices)
_KEYS = {
    "experiment": ("kind", "choice", KINDS),
    "dim": ("dim", "int", None),
    "outer": ("outer", "float_list", None),
    "sweep.eps": ("eps", "float_list", None),
    "sweep.eta": ("eta", "float_list", None),
    "sweep.n": ("n", "int_list", None),
    "sweep.cell": ("cell", "int_list", None),
    "p": ("p", "float_list", None),
    "which": ("which", "str_list", CONSTANT_NAMES),
    "trials": ("trials", "choice", ("full", "witness", "random")),
    "trials.random": ("n_random", "int", None),
    "holes.shape": ("shape", "choice", ("ball", "square", "axis_ellipse", "none")),
    "holes.radius": ("radius", "float", None),
    "holes.half_side": ("half_side", "float", None),
    "holes.semi_axes": ("semi_axes", "float_list", None),
    "holes.offsets": ("offsets", "choice", ("fixed", "random")),
    "holes.amplitude": ("amplitude", "float", None),
    "profile.radius": ("profile_radius", "float", None),
    "profile.n": ("profile_n", "int", None),
    "boundary": ("boundary", "choice", ("linear", "zero")),
    "seed": ("seed", "int", None),
    "solver.tol": ("tol", "float", None),
    "fit.x": ("fit_x", "choice", ("eta", "log_eta")),
    "plot": ("plot", "bool", None),
    "coarse": ("coarse", "bool", None),
    "snapshots": ("snapshots", "bool", None),
    "out": ("out", "str", None),
    "threads": ("threads", "int", None),
}


def _convert(key, raw, tag, choices, lineno):
    where = f"line {lineno}: {key}"
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "str":
            return raw
        if tag == "bool":
            if raw.lower() not in _BOOLS:
                raise ValueError
            return _BOOLS[raw.lower()]
        if tag == "choice":
            if raw not in choices:
                raise ConfigInvalid(
                    f"{where} must be one of {', '.join(choices)}, got {raw!r}"
                )
            return raw
        if tag == "float_list":
            return tuple(float(tok.strip()) for tok in raw.split(","))
        if tag == "int_list":
            return tuple(int(tok.strip()) for tok in raw.split(","))
        if tag == "str_list":
            items = tuple(tok.strip() for tok in raw.split(","))
            for item in items:
                if item not in choices:
                    raise ConfigInvalid(
                        f"{where} entries must be among {', '.join(choices)}, "
                        f"got {item!r}"
                    )
            return items
    except (ValueError, TypeError):
        raise ConfigInvalid(f"{where}: cannot parse value {raw!r}") from None
    raise AssertionError(f"unhandled converter {tag}")


@dataclass(frozen=True)
class SweepPoint:
    """One resolved sweep entry: ``grid`` is nodes per axis (or per cell)."""

    index: int
    eps: float
    eta: float
    grid: int


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully validated experiment description.

    Construction validates everything up front -- key combinations,
    ranges, the square outer box, hole-shape sizes, and the resolution
    guard for every sweep point -- raising ConfigInvalid on the first
    violation.  Instances are immutable; derived quantities come from
    :meth:`points`, :meth:`hole_shape`, and :meth:`config_sha256`.
    """

    kind: str
    dim: int
    outer: tuple = ((0.0, 1.0),)
    eps: tuple = ()
    eta: tuple = ()
    n: tuple = ()
    cell: tuple = ()
    p: tuple = (2.0,)
    which: tuple = ()
    trials: str = "full"
    n_random: int = 20
    shape: str = "ball"
    radius: float = 0.125
    half_side: float = 0.0
    semi_axes: tuple = ()
    offsets: str = "fixed"
    amplitude: float = 0.24
    profile_radius: float = 0.0
    profile_n: int = 0
    boundary: str = "linear"
    seed: int = 0
    tol: float = 1e-10
    fit_x: str = ""
    plot: bool = True
    coarse: bool = False
    snapshots: bool = False
    out: str = ""
    threads: int = 1

    def __post_init__(self):
        norm = {
            "outer": _normalize_outer(self.outer, self.dim),
            "eps": tuple(float(v) for v in self.eps),
            "eta": tuple(float(v) for v in self.eta),
            "n": tuple(int(v) for v in self.n),
            "cell": tuple(int(v) for v in self.cell),
            "p": tuple(float(v) for v in self.p),
            "which": tuple(self.which),
            "semi_axes": tuple(float(v) for v in self.semi_axes),
        }
        if not self.fit_x:
            norm["fit_x"] = "eta" if self.kind == "scaling" else "log_eta"
        if not self.out:
            norm["out"] = f"runs/{self.kind}"
        for name, value in norm.items():
            object.__setattr__(self, name, value)
        _validate(self)

    # -- derived views ---------------------------------------------------

    def hole_shape(self):
        """The HoleShape described by the holes.* keys, or None."""
        if self.shape == "none":
            return None
        if self.shape == "ball":
            return ball(self.radius)
        if self.shape == "square":
            return square(self.half_side, self.dim)
        return axis_ellipse(self.semi_axes)

    def grid_list(self):
        return self.n if self.n else self.cell

    def points(self):
        """The broadcast sweep as a tuple of SweepPoint."""
        grid = self.grid_list()
        length = max(len(t) for t in (self.eps, self.eta, grid) if t)

        def pick(tup, i):
            if not tup:
                return None
            return tup[i] if len(tup) > 1 else tup[0]

        return tuple(
            SweepPoint(i, pick(self.eps, i), pick(self.eta, i), pick(grid, i))
            for i in range(length)
        )

    def side(self):
        lo, hi = self.outer[0]
        return hi - lo

    # -- identity ----------------------------------------------------------

    def canonical(self):
        """Canonical one-line-per-field rendering, for hashing.

        ``out``, ``threads``, and ``plot`` steer execution, not the
        experiment, and are excluded; everything else (including the
        seed) is part of the result's identity.
        """
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            if f.name in ("out", "threads", "plot"):
                continue
            lines.append(f"{f.name} = {_canon_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def config_sha256(self):
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()


def _canon_value(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, tuple):
        return "(" + ", ".join(_canon_value(x) for x in v) + ")"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _normalize_outer(outer, dim):
    vals = []
    for entry in outer:
        if isinstance(entry, (tuple, list)):
            vals.extend(float(x) for x in entry)
        else:
            vals.append(float(entry))
    if len(vals) == 2:
        vals = vals * dim
    if len(vals) != 2 * dim:
        raise ConfigInvalid(
            f"outer needs 2 or {2 * dim} numbers for dim={dim}, got {len(vals)}"
        )
    return tuple((vals[2 * a], vals[2 * a + 1]) for a in range(dim))


def _validate(cfg):
    def bad(msg):
        raise ConfigInvalid(msg)

    if cfg.kind not in KINDS:
        bad(f"experiment must be one of {', '.join(KINDS)}, got {cfg.kind!r}")
    if cfg.dim < 2:
        bad(f"dim must be >= 2, got {cfg.dim}")
    if cfg.threads < 1:
        bad(f"threads must be >= 1, got {cfg.threads}")
    if cfg.seed < 0:
        bad(f"seed must be >= 0, got {cfg.seed}")
    if cfg.tol <= 0.0:
        bad(f"solver.tol must be positive, got {cfg.tol}")
    if cfg.n_random < 1:
        bad(f"trials.random must be >= 1, got {cfg.n_random}")
    if cfg.profile_radius < 0.0:
        bad("profile.radius must be positive")
    if cfg.profile_n and cfg.profile_n < 17:
        bad(f"profile.n must be >= 17, got {cfg.profile_n}")

    sides = [hi - lo for lo, hi in cfg.outer]
    if any(s <= 0 for s in sides):
        bad("outer box must have positive extent on every axis")
    if any(abs(s - sides[0]) > _TOL for s in sides):
        bad("outer box must be square (equal side lengths)")

    # grid mode: which of sweep.n / sweep.cell this kind takes
    if cfg.kind in _BOX_KINDS:
        if not cfg.n:
            bad(f"{cfg.kind} runs need sweep.n")
        if cfg.cell:
            bad(f"{cfg.kind} runs take sweep.n, not sweep.cell")
    elif cfg.kind == "witness":
        if not cfg.cell:
            bad("witness runs need sweep.cell")
        if cfg.n:
            bad("witness runs take sweep.cell, not sweep.n")
    else:  # eig
        if bool(cfg.n) == bool(cfg.cell):
            bad("eig runs need exactly one of sweep.n and sweep.cell")
    if any(v < 2 for v in cfg.n):
        bad("sweep.n entries must be >= 2")
    if any(v < 4 for v in cfg.cell):
        bad("sweep.cell entries must be >= 4")

    # holes
    if cfg.shape == "none":
        if cfg.kind not in _HOLE_FREE_OK or cfg.cell:
            bad(f"{cfg.kind} runs need holes (holes.shape = none not allowed)")
        if cfg.eps or cfg.eta:
            bad("sweep.eps and sweep.eta are meaningless with holes.shape = none")
    else:
        if not cfg.eps:
            bad("sweep.eps is required when there are holes")
        if not cfg.eta:
            bad("sweep.eta is required when there are holes")
        if any(e <= 0 for e in cfg.eps):
            bad("sweep.eps entries must be positive")
        if any(not 0.0 < v < 0.5 for v in cfg.eta):
            bad("sweep.eta entries must lie in (0, 1/2)")
        if cfg.shape == "ball" and cfg.radius <= 0:
            bad("holes.radius must be positive")
        if cfg.shape == "square" and cfg.half_side <= 0:
            bad("holes.half_side must be positive for square holes")
        if cfg.shape == "axis_ellipse":
            if len(cfg.semi_axes) != cfg.dim:
                bad(
                    f"holes.semi_axes needs {cfg.dim} entries for dim={cfg.dim}, "
                    f"got {len(cfg.semi_axes)}"
                )
            if any(s <= 0 for s in cfg.semi_axes):
                bad("holes.semi_axes entries must be positive")
        if cfg.offsets == "random" and not 0.0 <= cfg.amplitude < 0.25:
            bad(f"holes.amplitude must lie in [0, 0.25), got {cfg.amplitude}")
        shape = cfg.hole_shape()
        # boxed runs place holes through the domain builder, which caps
        # the circumradius at 1/8 cell; cell-level runs only need the
        # hole to stay inside its cell
        cap = 0.125 if cfg.n else 0.5
        if shape.circumradius > cap * (1.0 + 1e-9):
            bad(
                f"hole circumradius {shape.circumradius:.4g} exceeds the "
                f"{cap} cap for this run type"
            )

    if cfg.kind == "scaling":
        if not cfg.which:
            bad("scaling runs need which (A_p, B_p, C_p, or D_p)")
        if not cfg.p:
            bad("scaling runs need at least one p")
        if any(v <= 1.0 for v in cfg.p):
            bad("p entries must exceed 1")

    # broadcast lengths
    lists = [t for t in (cfg.eps, cfg.eta, cfg.grid_list()) if t]
    length = max(len(t) for t in lists)
    for name, t in (("sweep.eps", cfg.eps), ("sweep.eta", cfg.eta),
                    ("sweep.n" if cfg.n else "sweep.cell", cfg.grid_list())):
        if t and len(t) not in (1, length):
            bad(
                f"{name} has {len(t)} entries; sweep lists must have "
                f"length 1 or {length}"
            )

    # resolution guard: four grid intervals across every hole diameter
    if cfg.shape != "none":
        shape = cfg.hole_shape()
        for pt in cfg.points():
            h = (cfg.side() / (pt.grid - 1)) if cfg.n else (pt.eps / pt.grid)
            diameter = 2.0 * pt.eps * pt.eta * shape.inradius
            if diameter < 4.0 * h * (1.0 - _TOL):
                bad(
                    f"sweep point {pt.index} (eps={pt.eps:g}, eta={pt.eta:g}, "
                    f"grid={pt.grid}) cannot resolve the hole: diameter "
                    f"{diameter:.3g} spans under four grid intervals at "
                    f"h={h:.3g}"
                )


def config_from_entries(entries, expected_kind=None, out=None, seed=None,
                        threads=None):
    """Build an ExperimentConfig from parsed entries plus CLI overrides.

    ``expected_kind`` (the CLI subcommand) fills a missing ``experiment``
    key and must agree with an explicit one.  ``out``, ``seed``, and
    ``threads`` override their config keys when not None.
    """
    kwargs = {}
    for key, (raw, lineno) in entries.items():
        name, tag, choices = _KEYS.get(key, (None, None, None))
        if name is None:
            raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
        kwargs[name] = _convert(key, raw, tag, choices, lineno)

    if expected_kind is not None:
        stated = kwargs.get("kind")
        if stated is not None and stated != expected_kind:
            raise ConfigInvalid(
                f"config says experiment = {stated} but the {expected_kind} "
                f"command was invoked"
            )
        kwargs["kind"] = expected_kind
    if "kind" not in kwargs:
        raise ConfigInvalid("missing required key: experiment")
    if "dim" not in kwargs:
        raise ConfigInvalid("missing required key: dim")
    if out is not None:
        kwargs["out"] = out
    if seed is not None:
        kwargs["seed"] = seed
    if threads is not None:
        kwargs["threads"] = threads
    return ExperimentConfig(**kwargs)


def load_config(path, expected_kind=None, out=None, seed=None, threads=None):
    """Read and validate a config file; see :func:`config_from_entries`."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    return config_from_entries(
        parse_config(text), expected_kind=expected_kind, out=out, seed=seed,
        threads=threads,
    )
