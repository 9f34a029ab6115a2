"""Flat ``key = value`` tuning files covering policies, follower and filter chain."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .controller import FollowerConfig
from .filters import FilterParams
from .rmp import CollisionSphere, PolicyParams, RmpParams

DEFAULT_FILE = Path(__file__).parent / "data" / "default_tuning.txt"
POLICIES = ("gdf_goal", "freespace_goal", "obstacle", "heading", "damping")
LIMIT_KEYS = ("limits.vx", "limits.vy", "limits.wtheta")


class UnknownTuningKey(KeyError):
    pass


def parse_spheres(text: str) -> tuple[CollisionSphere, ...]:
    out = []
    for chunk in text.split(";"):
        if chunk.strip():
            x, y, r = (float(v) for v in chunk.split(","))
            out.append(CollisionSphere((x, y), r))
    return tuple(out)


def format_spheres(spheres) -> str:
    return "; ".join(f"{s.offset[0]:g},{s.offset[1]:g},{s.radius:g}" for s in spheres)


def parse_file(text: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


@dataclass(frozen=True)
class Tuning:
    rmp: RmpParams = RmpParams()
    follower: FollowerConfig = FollowerConfig()
    filters: FilterParams = dataclasses.field(default_factory=FilterParams)

    @classmethod
    def default(cls) -> "Tuning":
        return cls.load(DEFAULT_FILE)

    @classmethod
    def load(cls, path) -> "Tuning":
        return cls().with_overrides(parse_file(Path(path).read_text()))

    def as_dict(self) -> dict:
        d = {}
        for name in POLICIES:
            pol = getattr(self.rmp, name)
            keys = ("k",) if name == "damping" else ("k", "d_c", "alpha")
            for k in keys:
                d[f"{name}.{k}"] = getattr(pol, k)
        d["regularization.s"] = self.rmp.regularization_s
        d.update(zip(LIMIT_KEYS, self.rmp.limits))
        d["spheres"] = format_spheres(self.rmp.spheres)
        for f in dataclasses.fields(self.follower):
            d[f"follower.{f.name}"] = getattr(self.follower, f.name)
        for f in dataclasses.fields(self.filters):
            d[f"filters.{f.name}"] = getattr(self.filters, f.name)
        return d

    def with_overrides(self, overrides: dict) -> "Tuning":
        if not overrides:
            return self
        known = self.as_dict()
        for key in overrides:
            if key not in known:
                raise UnknownTuningKey(key)
        merged = {**known, **overrides}

        def num(key, like):
            v = merged[key]
            return int(v) if isinstance(like, int) and not isinstance(like, bool) else float(v)

        policies = {}
        for name in POLICIES:
            pol = getattr(self.rmp, name)
            keys = ("k",) if name == "damping" else ("k", "d_c", "alpha")
            policies[name] = dataclasses.replace(pol, **{k: num(f"{name}.{k}", 0.0) for k in keys})
        spheres = merged["spheres"]
        rmp = RmpParams(
            **policies,
            regularization_s=num("regularization.s", 0.0),
            limits=tuple(num(k, 0.0) for k in LIMIT_KEYS),
            spheres=parse_spheres(spheres) if isinstance(spheres, str) else tuple(spheres),
        )
        follower = FollowerConfig(**{
            f.name: num(f"follower.{f.name}", getattr(self.follower, f.name))
            for f in dataclasses.fields(self.follower)
        })
        filters = FilterParams(**{
            f.name: num(f"filters.{f.name}", getattr(self.filters, f.name))
            for f in dataclasses.fields(self.filters)
        })
        return Tuning(rmp, follower, filters)

    def dumps(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.as_dict().items())
