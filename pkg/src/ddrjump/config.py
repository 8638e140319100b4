"""Run configuration read from INI-style text.

Grammar: ``[section]`` headers followed by ``key = value`` lines; ``#`` and
``;`` start comments.  Lists are comma separated.  Sections and keys::

    [run]      case, k, seed
    [mesh]     family, levels, refinement_ratio
    [physics]  ratios  (sigma_int / sigma_ext), sigma_ext, eta
    [ldm]      t_c, capacitance, t_final, n0
    [output]   directory

family, refinement_ratio, ratios, eta, capacitance and t_final accept
"auto"; ``RunConfig.resolved()`` replaces the automatic values with the
case defaults (see ``CASE_DEFAULTS``).
"""

import configparser
import io
from dataclasses import dataclass, field, replace

from .cases import CASES, PAPER_RATIOS

FAMILIES = ("cartesian", "perturbed", "triangular")


# family, interface refinement ratio M and contrast ratios per case
CASE_DEFAULTS = {
    "square": ("cartesian", 0, list(PAPER_RATIOS)),
    "patch": ("cartesian", 0, [1.0 / 3.0]),
    "circle": ("triangular", 4, list(PAPER_RATIOS)),
    "generic": ("triangular", 2, list(PAPER_RATIOS)),
    "ldm": ("triangular", 2, [0.1]),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case: str = "square"
    k: int = 0
    seed: int = 0
    family: str = "auto"
    levels: list = field(default_factory=lambda: [8, 16, 32, 64])
    refinement_ratio: object = "auto"
    ratios: object = "auto"
    sigma_ext: float = 1.0
    eta: object = "auto"
    t_c: float = 1.0
    capacitance: object = "auto"
    t_final: object = "auto"
    n0: int = 4
    output: str = "out"

    def validate(self):
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; choose from {', '.join(CASES)}")
        if self.family != "auto" and self.family not in FAMILIES:
            raise ConfigError(f"unknown mesh family {self.family!r}")
        if not self.levels or any(n < 1 for n in self.levels):
            raise ConfigError("levels must be a non-empty list of positive integers")
        if self.k < 0:
            raise ConfigError("k must be >= 0")
        if self.refinement_ratio != "auto" and self.refinement_ratio < 0:
            raise ConfigError("refinement_ratio must be >= 0")
        if self.ratios != "auto" and (not self.ratios or any(r <= 0 for r in self.ratios)):
            raise ConfigError("ratios must be a non-empty list of positive numbers")
        if self.sigma_ext <= 0:
            raise ConfigError("sigma_ext must be positive")
        for name in ("eta", "capacitance", "t_final"):
            v = getattr(self, name)
            if v != "auto" and not float(v) > 0:
                raise ConfigError(f"{name} must be 'auto' or positive")
        if self.t_c <= 0:
            raise ConfigError("t_c must be positive")
        if self.n0 < 1:
            raise ConfigError("n0 (time steps on the coarsest level) must be >= 1")
        return self

    def resolved(self):
        """Copy with the "auto" mesh and contrast settings replaced by case defaults."""
        self.validate()
        family, M, ratios = CASE_DEFAULTS[self.case]
        return replace(
            self,
            family=family if self.family == "auto" else self.family,
            refinement_ratio=M if self.refinement_ratio == "auto" else self.refinement_ratio,
            ratios=list(ratios) if self.ratios == "auto" else list(self.ratios),
        )

    def eta_value(self):
        return None if self.eta == "auto" else float(self.eta)


_LAYOUT = {
    "run": ("case", "k", "seed"),
    "mesh": ("family", "levels", "refinement_ratio"),
    "physics": ("ratios", "sigma_ext", "eta"),
    "ldm": ("t_c", "capacitance", "t_final", "n0"),
    "output": ("output",),
}
_KEY_ALIAS = {"output": "directory"}


def _fmt(v):
    if isinstance(v, list):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(name, text):
    text = text.strip()
    try:
        if text == "auto" and name in ("family", "refinement_ratio", "ratios", "eta", "capacitance", "t_final"):
            return "auto"
        if name == "levels":
            return [int(x) for x in text.split(",") if x.strip()]
        if name == "ratios":
            return [float(x) for x in text.split(",") if x.strip()]
        if name in ("eta", "capacitance", "t_final", "sigma_ext", "t_c"):
            return float(text)
        if name in ("k", "seed", "refinement_ratio", "n0"):
            return int(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


def dumps(cfg):
    cp = configparser.ConfigParser(interpolation=None)
    for section, names in _LAYOUT.items():
        cp[section] = {_KEY_ALIAS.get(n, n): _fmt(getattr(cfg, n)) for n in names}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def loads(text, base=None):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    values = {}
    for section in cp.sections():
        if section not in _LAYOUT:
            raise ConfigError(f"unknown section [{section}]")
        allowed = {_KEY_ALIAS.get(n, n): n for n in _LAYOUT[section]}
        for key, raw in cp[section].items():
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[allowed[key]] = _parse_value(allowed[key], raw)
    cfg = RunConfig(**{**(vars(base) if base else {}), **values})
    return cfg.validate()


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
