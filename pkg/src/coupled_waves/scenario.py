"""Scenario files: ``[section]`` headers with ``key = value`` lines.

A complete file looks like::

    [domain]
    length = pi
    n = 199

    [coefficients]
    alpha = bump(1.3, 0.8, 1)
    beta = bump(1.9, 0.8, 1)
    g = constant(1)

    [initial]
    data = random(7)

    [solver]
    dt = 0.05
    T = 100
    stride = 20

    [frequency]
    sigma_min = 1.5
    sigma_max = 20
    count = 200

    [carleman]
    family = poly_sine
    mu = 1, 2, 4
    lambdas = 2, 4, 8, 16, 32, 64
    omega0 = 1.2, 1.8
    C = 10

Numbers may be written with ``pi`` and ``+ - * /``.  Profiles are
``constant(c)``, ``bump(center, width, height)`` (a Gaussian
``height * exp(-((x - center) / width)^2)``) and
``piecewise(b1, ..., bk; v0, ..., vk)``.  Only ``[domain]`` and
``[coefficients]`` are required; the other sections fall back to the
defaults below.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import counterexample
from .core import CoefficientField, Grid1D, InputError, StateVector, piecewise_constant
from .discretization import GeneratorMatrix, build_generator


class ConfigError(InputError):
    """Parse or validation failure, located at ``line:column`` of the file."""

    def __init__(self, msg: str, line: int = 0, column: int = 0, source: str = "<config>"):
        self.line, self.column, self.source = line, column, source
        super().__init__(f"{source}:{line}:{column}: {msg}")


# --------------------------------------------------------------------------
# scalar expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval_node(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    raise ValueError(f"unsupported expression {ast.dump(node)[:40]}")


def number(text: str) -> float:
    """Evaluate ``text`` made of numbers, ``pi`` and ``+ - * /``."""
    try:
        val = _eval_node(ast.parse(text.strip(), mode="eval").body)
    except (SyntaxError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a number: {text.strip()!r}") from exc
    if not math.isfinite(val):
        raise ValueError(f"not finite: {text.strip()!r}")
    return val


def number_list(text: str) -> tuple[float, ...]:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(number(p) for p in parts)


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_list(xs) -> str:
    return ", ".join(_fmt(x) for x in xs)


# --------------------------------------------------------------------------
# coefficient profiles

_PROFILE = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*$")


@dataclass(frozen=True)
class Profile:
    """A named coefficient profile: ``constant``, ``bump`` or ``piecewise``."""

    kind: str
    params: tuple = ()
    values: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "Profile":
        m = _PROFILE.match(text)
        if not m:
            raise ValueError(f"expected name(args), got {text.strip()!r}")
        kind, body = m.group(1), m.group(2)
        if kind == "constant":
            p = number_list(body)
            if len(p) != 1:
                raise ValueError("constant takes one argument")
            return cls(kind, p)
        if kind == "bump":
            p = number_list(body)
            if len(p) != 3:
                raise ValueError("bump takes (center, width, height)")
            if not p[1] > 0:
                raise ValueError("bump width must be positive")
            return cls(kind, p)
        if kind == "piecewise":
            if body.count(";") != 1:
                raise ValueError("piecewise takes (breaks; values)")
            b, v = body.split(";")
            breaks = number_list(b) if b.strip() else ()
            vals = number_list(v)
            if len(vals) != len(breaks) + 1:
                raise ValueError("piecewise needs one more value than breaks")
            if any(np.diff(breaks) <= 0):
                raise ValueError("piecewise breaks must increase")
            return cls(kind, breaks, vals)
        raise ValueError(f"unknown profile {kind!r}; use constant, bump or piecewise")

    def to_text(self) -> str:
        if self.kind == "piecewise":
            return f"piecewise({_fmt_list(self.params)}; {_fmt_list(self.values)})"
        return f"{self.kind}({_fmt_list(self.params)})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape, self.params[0])
        if self.kind == "bump":
            c, w, h = self.params
            return h * np.exp(-(((x - c) / w) ** 2))
        return piecewise_constant(self.params, self.values)(x)

    def lower_bound(self) -> float:
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "bump":
            return min(0.0, self.params[2])
        return min(self.values)


# --------------------------------------------------------------------------
# initial data

_INITIAL = re.compile(r"^\s*(counterexample|zero|eigenmode|random)\s*(?:\((.*)\))?\s*$")


def _initial_key(text: str) -> tuple[str, int | None]:
    m = _INITIAL.match(text)
    if not m:
        raise ValueError("initial data must be counterexample, zero, eigenmode(k) or random(seed)")
    kind, arg = m.group(1), m.group(2)
    if kind in ("counterexample", "zero"):
        if arg is not None:
            raise ValueError(f"{kind} takes no argument")
        return kind, None
    if arg is None or not re.fullmatch(r"\s*\d+\s*", arg):
        raise ValueError(f"{kind} needs a nonnegative integer argument")
    k = int(arg)
    if kind == "eigenmode" and k < 1:
        raise ValueError("eigenmode index starts at 1")
    return kind, k


def random_smooth_state(grid: Grid1D, seed: int, modes: int = 8) -> StateVector:
    """Four random sine series with ``1/k^2`` decay (PCG64 stream from ``seed``).

    The data is smooth, so its graph norm stays bounded under refinement.
    """
    rng = np.random.default_rng(seed)
    k = np.arange(1, modes + 1)
    basis = np.sin(np.outer(grid.nodes, k) * np.pi / grid.length)
    coef = rng.standard_normal((4, modes)) / k**2
    return StateVector(*(basis @ c for c in coef))


def eigenmode_state(grid: Grid1D, A: GeneratorMatrix, k: int) -> StateVector:
    """``y = z = k``-th eigenvector of ``-L_g`` (unit max-norm), zero velocities."""
    n = grid.n
    if k > n:
        raise InputError(f"eigenmode({k}) needs n >= {k}")
    K = -A.Lg.toarray()
    _, vecs = np.linalg.eigh(K)
    phi = vecs[:, k - 1]
    phi = phi / phi[np.argmax(np.abs(phi))]
    zero = np.zeros(n)
    return StateVector(phi, zero, phi.copy(), zero.copy())


# --------------------------------------------------------------------------
# the scenario

SECTIONS = {
    "domain": ("length", "n"),
    "coefficients": ("alpha", "beta", "g"),
    "initial": ("data",),
    "solver": ("dt", "T", "stride"),
    "frequency": ("sigma_min", "sigma_max", "count"),
    "carleman": ("family", "mu", "lambdas", "omega0", "C"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    length: float
    n: int
    alpha: Profile
    beta: Profile
    g: Profile = Profile("constant", (1.0,))
    initial: str = "random(0)"
    dt: float = 0.05
    T: float = 10.0
    stride: int = 10
    sigma_min: float = 1.5
    sigma_max: float = 20.0
    count: int = 100
    family: str = "poly_sine"
    mu: tuple = (1.0, 2.0, 4.0)
    lambdas: tuple = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    omega0: tuple = (1.2, 1.8)
    C: float = 10.0
    source: str = field(default="<config>", compare=False)

    # -- construction ------------------------------------------------------
    def grid(self) -> Grid1D:
        return Grid1D(self.length, self.n)

    def coefficients(self, grid: Grid1D | None = None) -> CoefficientField:
        grid = grid or self.grid()
        return CoefficientField.from_functions(grid, self.alpha, self.beta, self.g)

    def generator(self, grid: Grid1D | None = None) -> GeneratorMatrix:
        grid = grid or self.grid()
        return build_generator(grid, self.coefficients(grid))

    def initial_state(self, grid: Grid1D | None = None, A: GeneratorMatrix | None = None) -> StateVector:
        grid = grid or self.grid()
        kind, k = _initial_key(self.initial)
        if kind == "zero":
            return StateVector.zeros(grid.n)
        if kind == "counterexample":
            if not np.isclose(grid.length, counterexample.LENGTH):
                raise InputError("counterexample initial data needs length = 2 pi")
            return counterexample.state(grid)
        if kind == "random":
            return random_smooth_state(grid, k)
        return eigenmode_state(grid, A or self.generator(grid), k)

    def refined(self) -> "ScenarioConfig":
        """Same scenario with ``n -> 2n + 1`` (every old node stays a node)."""
        return replace(self, n=2 * self.n + 1)

    # -- text form ---------------------------------------------------------
    def to_text(self) -> str:
        lines = [
            "[domain]",
            f"length = {_fmt(self.length)}",
            f"n = {self.n}",
            "",
            "[coefficients]",
            f"alpha = {self.alpha.to_text()}",
            f"beta = {self.beta.to_text()}",
            f"g = {self.g.to_text()}",
            "",
            "[initial]",
            f"data = {self.initial}",
            "",
            "[solver]",
            f"dt = {_fmt(self.dt)}",
            f"T = {_fmt(self.T)}",
            f"stride = {self.stride}",
            "",
            "[frequency]",
            f"sigma_min = {_fmt(self.sigma_min)}",
            f"sigma_max = {_fmt(self.sigma_max)}",
            f"count = {self.count}",
            "",
            "[carleman]",
            f"family = {self.family}",
            f"mu = {_fmt_list(self.mu)}",
            f"lambdas = {_fmt_list(self.lambdas)}",
            f"omega0 = {_fmt_list(self.omega0)}",
            f"C = {_fmt(self.C)}",
        ]
        return "\n".join(lines) + "\n"


def _locate(text: str, section: str, key: str | None) -> tuple[int, int]:
    """1-based ``(line, column)`` of ``key``'s value (or the section header)."""
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip().lower()
            if key is None and current == section:
                return i, raw.index("[") + 1
            continue
        if current == section and key is not None:
            m = re.match(r"\s*([^=:]+?)\s*[=:]\s*", raw)
            if m and m.group(1).lower() == key.lower():
                return i, m.end() + 1
    return 0, 0


def _int(text: str) -> int:
    v = number(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text.strip()!r}")
    return int(v)


_CONVERTERS = {
    "length": number,
    "n": _int,
    "alpha": Profile.parse,
    "beta": Profile.parse,
    "g": Profile.parse,
    "data": lambda t: (_initial_key(t), " ".join(t.split()))[1],
    "dt": number,
    "T": number,
    "stride": _int,
    "sigma_min": number,
    "sigma_max": number,
    "count": _int,
    "family": lambda t: t.strip(),
    "mu": number_list,
    "lambdas": number_list,
    "omega0": number_list,
    "C": number,
}
_FIELD = {"data": "initial"}


def parse(text: str, source: str = "<config>") -> ScenarioConfig:
    """Parse scenario text; any problem raises :class:`ConfigError` with a location."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header", exc.lineno, 1, source) from None
    except configparser.ParsingError as exc:
        line, bad = exc.errors[0]
        raise ConfigError(f"cannot parse {bad!r}", line, 1, source) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1], exc.lineno or 0, 1, source) from None

    values = {}
    for section in cp.sections():
        sec = section.lower()
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", *_locate(text, sec, None), source)
        for key, raw in cp.items(section):
            allowed = {k.lower(): k for k in SECTIONS[sec]}
            if key.lower() not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]", *_locate(text, sec, key), source)
            name = allowed[key.lower()]
            try:
                values[_FIELD.get(name, name)] = _CONVERTERS[name](raw)
            except ValueError as exc:
                raise ConfigError(str(exc), *_locate(text, sec, key), source) from None

    for sec in ("domain", "coefficients"):
        for key in SECTIONS[sec]:
            if key not in values and not (key == "g"):
                raise ConfigError(f"missing {key!r} in [{sec}]", *_locate(text, sec, None), source)

    cfg = ScenarioConfig(**values, source=source)
    _validate(cfg, text)
    return cfg


def _validate(cfg: ScenarioConfig, text: str) -> None:
    def fail(msg, sec, key):
        raise ConfigError(msg, *_locate(text, sec, key), cfg.source)

    if not cfg.length > 0:
        fail("length must be positive", "domain", "length")
    if cfg.n < 3:
        fail("n must be at least 3", "domain", "n")
    for key in ("alpha", "beta"):
        if getattr(cfg, key).lower_bound() < 0:
            fail(f"{key} must be nonnegative", "coefficients", key)
    if not cfg.g.lower_bound() > 0:
        fail("g must be bounded below by a positive constant", "coefficients", "g")
    try:
        cfg.coefficients()
    except InputError as exc:
        fail(str(exc), "coefficients", None)
    if not cfg.dt > 0:
        fail("dt must be positive", "solver", "dt")
    if not cfg.T >= cfg.dt:
        fail("need T >= dt", "solver", "T")
    if cfg.stride < 1:
        fail("stride must be positive", "solver", "stride")
    if not 1 < cfg.sigma_min < cfg.sigma_max:
        fail("need 1 < sigma_min < sigma_max", "frequency", "sigma_min")
    if cfg.count < 2:
        fail("count must be at least 2", "frequency", "count")
    if len(cfg.omega0) != 2 or not 0 < cfg.omega0[0] < cfg.omega0[1] < cfg.length:
        fail("omega0 must be an interval inside (0, length)", "carleman", "omega0")
    if not cfg.C > 0:
        fail("C must be positive", "carleman", "C")


def load(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), source=str(path))


def serialize(cfg: ScenarioConfig) -> str:
    return cfg.to_text()


# --------------------------------------------------------------------------
# shipped scenarios

def counterexample_scenario(n: int = 399, T: float = 10.0) -> ScenarioConfig:
    """The closed-form example: coupling on ``(0, pi)``, damping on ``(pi, 2 pi)``."""
    h = counterexample.LENGTH / (n + 1)
    return ScenarioConfig(
        length=counterexample.LENGTH,
        n=n,
        alpha=Profile("piecewise", (counterexample.INTERFACE,), (counterexample.ALPHA_VALUE, 0.0)),
        beta=Profile("piecewise", (counterexample.INTERFACE,), (0.0, counterexample.BETA_VALUE)),
        initial="counterexample",
        dt=h,
        T=T,
        stride=max(1, int(round(T / h / 100))),
        sigma_min=1.5,
        sigma_max=10.0,
    )


def overlap_scenario(n: int = 199, T: float = 100.0, seed: int = 0) -> ScenarioConfig:
    """Overlapping Gaussian coupling and damping bumps on ``(0, pi)``."""
    return ScenarioConfig(
        length=math.pi,
        n=n,
        alpha=Profile("bump", (1.3, 0.8, 1.0)),
        beta=Profile("bump", (1.9, 0.8, 1.0)),
        initial=f"random({seed})",
        dt=0.05,
        T=T,
        stride=20,
        sigma_min=1.5,
        sigma_max=20.0,
    )
