"""Offline gazetteer: place-name strings to canonical countries with ISO
codes and coordinates. A snapshot file stands in for a live lookup service."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

CONTINENTS = {"AF", "AN", "AS", "EU", "NA", "OC", "SA"}


class GazetteerError(Exception):
    pass


@dataclass(frozen=True)
class ResolvedLocation:
    canonical_name: str
    country: str
    iso2: str
    latitude: float
    longitude: float
    continent: str

    def __post_init__(self):
        if not re.match(r"^[A-Z]{2}$", self.iso2):
            raise ValueError(f"iso2 must be two uppercase letters, got {self.iso2!r}")
        if not -90 <= self.latitude <= 90:
            raise ValueError(f"latitude out of bounds: {self.latitude}")
        if not -180 <= self.longitude <= 180:
            raise ValueError(f"longitude out of bounds: {self.longitude}")
        if self.continent not in CONTINENTS:
            raise ValueError(f"unknown continent code: {self.continent!r}")

    def to_dict(self) -> dict:
        return {
            "canonical_name": self.canonical_name,
            "country": self.country,
            "iso2": self.iso2,
            "latitude": self.latitude,
            "longitude": self.longitude,
            "continent": self.continent,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResolvedLocation":
        return cls(
            canonical_name=d["canonical_name"],
            country=d["country"],
            iso2=d["iso2"],
            latitude=d["latitude"],
            longitude=d["longitude"],
            continent=d["continent"],
        )


class Gazetteer:
    """Lookup table over a TSV snapshot; names and aliases are matched
    case-insensitively."""

    REQUIRED_COLUMNS = [
        "canonical_name",
        "country",
        "iso2",
        "latitude",
        "longitude",
        "continent",
        "aliases",
    ]

    def __init__(self, entries: list[tuple[ResolvedLocation, list[str]]]):
        self._locations: list[ResolvedLocation] = []
        self._by_name: dict[str, ResolvedLocation] = {}
        for loc, aliases in entries:
            self._locations.append(loc)
            for name in [loc.canonical_name, *aliases]:
                key = self._key(name)
                if key and key not in self._by_name:
                    self._by_name[key] = loc

    @staticmethod
    def _key(name: str) -> str:
        return re.sub(r"\s+", " ", name.strip()).casefold()

    @classmethod
    def from_text(cls, text: str) -> "Gazetteer":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise GazetteerError("gazetteer file is empty")
        header = lines[0].split("\t")
        if header != cls.REQUIRED_COLUMNS:
            raise GazetteerError(
                f"bad gazetteer header {header!r}, expected {cls.REQUIRED_COLUMNS!r}"
            )
        entries = []
        for lineno, line in enumerate(lines[1:], start=2):
            cols = line.split("\t")
            if len(cols) != len(header):
                raise GazetteerError(f"line {lineno}: expected {len(header)} columns")
            name, country, iso2, lat, lon, continent, aliases = cols
            try:
                loc = ResolvedLocation(
                    canonical_name=name,
                    country=country,
                    iso2=iso2,
                    latitude=float(lat),
                    longitude=float(lon),
                    continent=continent,
                )
            except ValueError as exc:
                raise GazetteerError(f"line {lineno}: {exc}") from exc
            alias_list = [a for a in aliases.split("|") if a.strip()]
            entries.append((loc, alias_list))
        return cls(entries)

    @classmethod
    def from_file(cls, path: str | Path) -> "Gazetteer":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def bundled(cls) -> "Gazetteer":
        text = (
            resources.files("r0scope.data").joinpath("gazetteer.tsv").read_text("utf-8")
        )
        return cls.from_text(text)

    def lookup(self, name: str) -> Optional[ResolvedLocation]:
        return self._by_name.get(self._key(name))

    def names(self) -> list[str]:
        """All known lookup keys (canonical names and aliases, casefolded)."""
        return list(self._by_name.keys())

    def locations(self) -> list[ResolvedLocation]:
        return list(self._locations)

    def __len__(self) -> int:
        return len(self._locations)
