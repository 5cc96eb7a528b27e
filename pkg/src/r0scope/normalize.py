"""Validation and normalization of raw summaries: R0 ranges, confidence
intervals, disease keys, and gazetteer-backed location resolution."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass
from typing import Optional

from .extraction import RawSummary
from .gazetteer import Gazetteer, GazetteerError, ResolvedLocation

__all__ = [
    "ConfidenceInterval",
    "StructuredSummary",
    "Gazetteer",
    "GazetteerError",
    "ResolvedLocation",
    "NormalizeError",
    "Unparseable",
    "NegativeValue",
    "CiUnparseable",
    "NormalizationError",
    "parse_r0",
    "parse_ci",
    "canonical_disease",
    "resolve_location",
    "normalize_summary",
    "render_r0",
]

logger = logging.getLogger(__name__)

_EMPTY_TOKENS = {"", "none", "unknown", "n/a", "na", "not reported", "-"}

# trailing lookaheads tolerate sentence-ending periods ("R0 was 2.5.")
_NUM = r"\d+(?:\.\d+)?(?:[eE][-+]?\d+)?"
_RANGE_RE = re.compile(
    rf"(?<![\d.])({_NUM})\s*(?:-|–|—|to)\s*({_NUM})(?!\.?\d)", re.IGNORECASE
)
_BETWEEN_RE = re.compile(rf"between\s+(-?{_NUM})\s+and\s+(-?{_NUM})", re.IGNORECASE)
_SINGLE_RE = re.compile(rf"(?<![\d.\w])(-?{_NUM})(?!\.?\d)")
_DECIMAL_COMMA_RE = re.compile(r"(?<=\d),(?=\d)")
_CI_LEVEL_RE = re.compile(rf"(\d+(?:\.\d+)?)\s*%")
_YEAR_RE = re.compile(r"(?:19|20)\d{2}")


class NormalizeError(Exception):
    pass


class Unparseable(NormalizeError):
    """No usable number found in the text."""

    def __init__(self, text: str, what: str = "value"):
        super().__init__(f"no {what} found in {text!r}")
        self.text = text


class NegativeValue(NormalizeError):
    def __init__(self, value: float, text: str):
        super().__init__(f"negative value {value} in {text!r}")
        self.value = value
        self.text = text


class CiUnparseable(NormalizeError):
    """CI text present but no low-high range could be read from it."""

    def __init__(self, text: str):
        super().__init__(f"no interval range found in {text!r}")
        self.text = text


class NormalizationError(NormalizeError):
    """A raw summary could not be normalized (fatal only for the R0 value)."""

    def __init__(self, pmid: str, cause: NormalizeError):
        super().__init__(f"pmid {pmid}: {cause}")
        self.pmid = pmid
        self.cause = cause


@dataclass(frozen=True)
class ConfidenceInterval:
    level: float
    low: float
    high: float
    raw: str
    level_defaulted: bool = False

    def __post_init__(self):
        if not (0 < self.level <= 100):
            raise ValueError(f"level must be in (0, 100], got {self.level}")
        if self.low > self.high:
            raise ValueError(f"low {self.low} > high {self.high}")

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "low": self.low,
            "high": self.high,
            "raw": self.raw,
            "level_defaulted": self.level_defaulted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConfidenceInterval":
        return cls(
            level=d["level"],
            low=d["low"],
            high=d["high"],
            raw=d["raw"],
            level_defaulted=d.get("level_defaulted", False),
        )


@dataclass(frozen=True)
class StructuredSummary:
    """One validated six-property R0 contribution extracted from a paper."""

    pmid: str
    disease_raw: str
    disease_key: str
    location_raw: str
    location: Optional[ResolvedLocation]
    date_raw: str
    year: Optional[int]
    r0_min: float
    r0_max: float
    ci: Optional[ConfidenceInterval]
    method_raw: str

    def __post_init__(self):
        if not (math.isfinite(self.r0_min) and math.isfinite(self.r0_max)):
            raise ValueError("r0 bounds must be finite")
        if self.r0_min < 0 or self.r0_max < 0:
            raise ValueError("r0 bounds must be >= 0")
        if self.r0_min > self.r0_max:
            raise ValueError(f"r0_min {self.r0_min} > r0_max {self.r0_max}")

    def content_hash(self) -> str:
        """Hash over the normalized six-property content; summary identity
        within a paper is (pmid, content_hash)."""
        payload = json.dumps(
            {
                "disease_key": self.disease_key,
                "location_raw": self.location_raw,
                "date_raw": self.date_raw,
                "r0_min": repr(self.r0_min),
                "r0_max": repr(self.r0_max),
                "ci": self.ci.to_dict() if self.ci else None,
                "method_raw": self.method_raw,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return {
            "pmid": self.pmid,
            "disease_raw": self.disease_raw,
            "disease_key": self.disease_key,
            "location_raw": self.location_raw,
            "location": self.location.to_dict() if self.location else None,
            "date_raw": self.date_raw,
            "year": self.year,
            "r0_min": self.r0_min,
            "r0_max": self.r0_max,
            "ci": self.ci.to_dict() if self.ci else None,
            "method_raw": self.method_raw,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StructuredSummary":
        return cls(
            pmid=d["pmid"],
            disease_raw=d["disease_raw"],
            disease_key=d["disease_key"],
            location_raw=d["location_raw"],
            location=ResolvedLocation.from_dict(d["location"]) if d.get("location") else None,
            date_raw=d["date_raw"],
            year=d.get("year"),
            r0_min=d["r0_min"],
            r0_max=d["r0_max"],
            ci=ConfidenceInterval.from_dict(d["ci"]) if d.get("ci") else None,
            method_raw=d["method_raw"],
        )

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)


def _is_empty(text: str) -> bool:
    return text.strip().casefold() in _EMPTY_TOKENS


def parse_r0(text: str) -> tuple[float, float]:
    """Read an R0 value or range into ordered (min, max).

    Accepts "2.5", "2.2-3.5", "2.2 – 3.5", "1.5 to 6.7",
    "between 6.7 and 1.5"; decimal commas are converted.
    """
    if not text or not text.strip():
        raise Unparseable(text, "number")
    cleaned = _DECIMAL_COMMA_RE.sub(".", text)

    m = _BETWEEN_RE.search(cleaned)
    if not m:
        m = _RANGE_RE.search(cleaned)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        if a < 0 or b < 0:
            raise NegativeValue(min(a, b), text)
        return (min(a, b), max(a, b))

    m = _SINGLE_RE.search(cleaned)
    if not m:
        raise Unparseable(text, "number")
    x = float(m.group(1))
    if x < 0:
        raise NegativeValue(x, text)
    return (x, x)


def render_r0(r0_min: float, r0_max: float) -> str:
    """Inverse of parse_r0 for a parsed pair: "min-max", or "min" when equal."""
    if r0_min == r0_max:
        return repr(r0_min)
    return f"{r0_min!r}-{r0_max!r}"


def parse_ci(text: str) -> Optional[ConfidenceInterval]:
    """Read a confidence interval such as "95% CI: 1.4-3.9".

    Empty-equivalent text yields None; a bare range defaults the level to 95
    and marks the default on the returned interval.
    """
    if text is None or _is_empty(text):
        return None
    cleaned = _DECIMAL_COMMA_RE.sub(".", text)

    level = None
    level_m = _CI_LEVEL_RE.search(cleaned)
    if level_m:
        candidate = float(level_m.group(1))
        if 0 < candidate <= 100:
            level = candidate
        # strip the level token so it cannot be mistaken for an interval bound
        cleaned = cleaned[: level_m.start()] + cleaned[level_m.end():]

    m = _BETWEEN_RE.search(cleaned) or _RANGE_RE.search(cleaned)
    if not m:
        raise CiUnparseable(text)
    a, b = float(m.group(1)), float(m.group(2))
    return ConfidenceInterval(
        level=level if level is not None else 95.0,
        low=min(a, b),
        high=max(a, b),
        raw=text,
        level_defaulted=level is None,
    )


def canonical_disease(text: str) -> str:
    """Lowercase, trim, collapse whitespace, strip trailing punctuation.
    Purely textual; no semantic merging of disease names."""
    s = re.sub(r"\s+", " ", text.strip().lower())
    # one rstrip set: punctuation stripping may expose spaces and vice versa
    return s.rstrip(".,;:!? ")


def resolve_location(text: str, gazetteer: Gazetteer) -> Optional[ResolvedLocation]:
    """Look up the full string, then comma-separated segments right to left,
    so "Wuhan, China" falls back to "China" when "Wuhan" is unknown."""
    if not text or _is_empty(text):
        return None
    hit = gazetteer.lookup(text)
    if hit is not None:
        return hit
    segments = [seg for seg in text.split(",") if seg.strip()]
    for seg in reversed(segments):
        hit = gazetteer.lookup(seg)
        if hit is not None:
            return hit
    return None


def _parse_year(text: str) -> Optional[int]:
    m = _YEAR_RE.search(text)
    return int(m.group(0)) if m else None


def normalize_summary(raw: RawSummary, gazetteer: Gazetteer) -> StructuredSummary:
    """Normalize a raw summary; raises NormalizationError only when the R0
    value itself cannot be parsed."""
    try:
        r0_min, r0_max = parse_r0(raw.r0_value)
    except NormalizeError as exc:
        raise NormalizationError(raw.pmid, exc) from exc

    try:
        ci = parse_ci(raw.ci_values)
    except CiUnparseable:
        logger.warning(
            "pmid %s: unparseable CI %r, keeping summary", raw.pmid, raw.ci_values
        )
        ci = None

    return StructuredSummary(
        pmid=raw.pmid,
        disease_raw=raw.disease_name,
        disease_key=canonical_disease(raw.disease_name),
        location_raw=raw.location,
        location=resolve_location(raw.location, gazetteer),
        date_raw=raw.date,
        year=_parse_year(raw.date),
        r0_min=r0_min,
        r0_max=r0_max,
        ci=ci,
        method_raw=raw.method,
    )
