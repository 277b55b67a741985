"""ExperimentConfig and its INI-style reader (key = value with sections)."""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ..errors import ConfigError
from ..group import DEFAULT_POINT_CAP, REFERENCE_DISKS

EXPERIMENTS = ("orbit", "measure", "hc", "thmA", "corB", "thmD", "roblin", "dw", "checks")


@dataclass(frozen=True)
class ExperimentConfig:
    disks: tuple = REFERENCE_DISKS
    base_point: complex = 0j
    max_dist: float = 14.0
    rho: tuple = (1.0,)
    R: float = 2.0
    bin_count: int = 4096
    s_offset: float = 0.05
    experiments: tuple = EXPERIMENTS
    output_dir: str = "runs"
    point_cap: int = DEFAULT_POINT_CAP
    seed: int = 0
    threads: int = 1
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["disks"] = [list(p) for p in self.disks]
        d["base_point"] = [self.base_point.real, self.base_point.imag]
        d["rho"] = list(self.rho)
        d["experiments"] = list(self.experiments)
        return d

    def override(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


DEFAULT_TOLERANCES = {
    "alpha_gap": 0.02,
    "ratio": 0.05,
    "conformality": 0.10,
    "invariance": 0.05,
    "cauchy": 0.05,
    "shadow_stability": 0.20,
    "hc_band": 20.0,
    "hc_slope": 0.02,
    "supnorm_slope": 0.02,
    "thmA": 0.05,
    "corB": 0.05,
    "thmD": 0.10,
    "roblin": 0.05,
    "dw_tail": 0.05,
    "geometry": 1e-9,
}


def validate(cfg: ExperimentConfig) -> None:
    if cfg.max_dist <= 0:
        raise ConfigError("max_dist must be positive")
    if not cfg.rho or any(r <= 0 for r in cfg.rho):
        raise ConfigError("rho values must be positive")
    if cfg.R <= 0:
        raise ConfigError("R must be positive")
    if cfg.bin_count < 256 or cfg.bin_count & (cfg.bin_count - 1):
        raise ConfigError("bin_count must be a power of two, at least 256")
    if cfg.s_offset <= 0:
        raise ConfigError("s_offset must be positive")
    if cfg.point_cap < 1:
        raise ConfigError("point_cap must be positive")
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1")
    unknown = set(cfg.experiments) - set(EXPERIMENTS)
    if unknown:
        raise ConfigError(f"unknown experiments: {sorted(unknown)}")
    if len(cfg.disks) < 2 or len(cfg.disks) % 2:
        raise ConfigError("disks must come in pairs")
    if abs(cfg.base_point) >= 1:
        raise ConfigError("base point must lie in the open disk")
    bad = [k for k, v in cfg.tolerances.items() if not (isinstance(v, (int, float)) and v > 0)]
    if bad:
        raise ConfigError(f"tolerances must be positive: {bad}")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _angle(token: str) -> float:
    # "pi", "pi/2", "3pi/2" are accepted next to plain numbers
    t = token.strip().lower().replace("*", "")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    coef = num.replace("pi", "") or "1"
    return float(coef) * math.pi / (float(den) if den else 1.0)


def _disks(text: str) -> tuple:
    text = text.strip()
    if text == "reference":
        return REFERENCE_DISKS
    out = []
    for item in text.split(";"):
        if not item.strip():
            continue
        parts = item.split()
        if len(parts) != 2:
            raise ConfigError(f"disk entry needs 'center radius': {item!r}")
        out.append((_angle(parts[0]), float(parts[1])))
    return tuple(out)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
        return _from_parser(parser)
    except ConfigError:
        raise
    except (configparser.Error, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _from_parser(p: configparser.ConfigParser) -> ExperimentConfig:
    kw: dict = {}
    if p.has_section("group"):
        g = p["group"]
        if "disks" in g:
            kw["disks"] = _disks(g["disks"])
        if "base_point" in g:
            re_, im = _floats(g["base_point"])
            kw["base_point"] = complex(re_, im)
    if p.has_section("orbit"):
        o = p["orbit"]
        if "max_dist" in o:
            kw["max_dist"] = o.getfloat("max_dist")
        if "point_cap" in o:
            kw["point_cap"] = int(float(o["point_cap"]))
    if p.has_section("measure"):
        m = p["measure"]
        if "bin_count" in m:
            kw["bin_count"] = m.getint("bin_count")
        if "s_offset" in m:
            kw["s_offset"] = m.getfloat("s_offset")
        if "R" in m:
            kw["R"] = m.getfloat("R")
    if p.has_section("run"):
        r = p["run"]
        if "experiments" in r:
            kw["experiments"] = tuple(t for t in r["experiments"].replace(",", " ").split())
        if "rho" in r:
            kw["rho"] = tuple(_floats(r["rho"]))
        if "output_dir" in r:
            kw["output_dir"] = r["output_dir"]
        if "seed" in r:
            kw["seed"] = r.getint("seed")
        if "threads" in r:
            kw["threads"] = r.getint("threads")
    if p.has_section("tolerances"):
        tol = dict(DEFAULT_TOLERANCES)
        for k, v in p["tolerances"].items():
            if k not in tol:
                raise ConfigError(f"unknown tolerance {k!r}")
            tol[k] = float(v)
        kw["tolerances"] = tol
    known = {"group", "orbit", "measure", "run", "tolerances"}
    extra = set(p.sections()) - known
    if extra:
        raise ConfigError(f"unknown sections: {sorted(extra)}")
    return ExperimentConfig(**kw)
