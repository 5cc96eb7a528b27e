"""Turn papers into raw six-property summaries: prompt construction, the
inference-endpoint client, response parsing, and a rule-based fallback."""

from __future__ import annotations

import json
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Optional

import requests

from .gazetteer import Gazetteer
from .ingest import PaperRecord

logger = logging.getLogger(__name__)

PROMPT_QUESTION = (
    "What are the values for the following properties of the basic "
    "reproduction number estimate (R0): disease name, location, date, "
    "R0 value, %CI values, and method?"
)

UNKNOWN = "unknown"

_UNANSWERABLE_RE = re.compile(r"^\W*unanswerable\W*$", re.IGNORECASE)

# canonical key -> RawSummary attribute; incoming keys are matched after
# casefolding, %-stripping, and underscore/space collapsing
_KEY_MAP = {
    "disease name": "disease_name",
    "disease": "disease_name",
    "location": "location",
    "date": "date",
    "r0 value": "r0_value",
    "r0": "r0_value",
    "ci values": "ci_values",
    "ci": "ci_values",
    "confidence interval values": "ci_values",
    "method": "method",
}

# empty-equivalent sentinels; present-but-unparseable text (e.g. "not
# reported") stays constructible and is rejected later at normalization
_EMPTY_R0 = {"", "none", "unknown", "n/a", "na"}


class ExtractionError(Exception):
    """Base class; carries the originating pmid when known."""

    def __init__(self, message: str, pmid: Optional[str] = None):
        super().__init__(message)
        self.pmid = pmid


class EndpointUnreachable(ExtractionError):
    pass


class EndpointRejected(ExtractionError):
    def __init__(self, status: int, pmid: Optional[str] = None):
        super().__init__(f"endpoint rejected request with status {status}", pmid)
        self.status = status


class EndpointTimeout(ExtractionError):
    pass


class Unparseable(ExtractionError):
    """Model output had no JSON value and was not the unanswerable sentinel."""

    def __init__(self, raw_text: str, pmid: Optional[str] = None):
        super().__init__(f"unparseable extractor output: {raw_text[:200]!r}", pmid)
        self.raw_text = raw_text


@dataclass(frozen=True)
class RawSummary:
    """One verbatim six-property extraction; empty non-R0 slots are held as
    the "unknown" sentinel, an empty R0 value is never allowed."""

    pmid: str
    disease_name: str
    location: str
    date: str
    r0_value: str
    ci_values: str
    method: str

    def __post_init__(self):
        if self.r0_value.strip().casefold() in _EMPTY_R0:
            raise ValueError("a RawSummary must carry an R0 value")
        for name in ("disease_name", "location", "date", "ci_values", "method"):
            if not getattr(self, name).strip():
                object.__setattr__(self, name, UNKNOWN)

    def to_dict(self) -> dict:
        return {
            "disease_name": self.disease_name,
            "location": self.location,
            "date": self.date,
            "r0_value": self.r0_value,
            "ci_values": self.ci_values,
            "method": self.method,
        }


ANSWERABLE = "answerable"
UNANSWERABLE = "unanswerable"


@dataclass(frozen=True)
class ExtractorResponse:
    kind: str
    summaries: tuple[RawSummary, ...]
    raw_text: str

    def __post_init__(self):
        if self.kind not in (ANSWERABLE, UNANSWERABLE):
            raise ValueError(f"bad kind {self.kind!r}")
        if self.kind == ANSWERABLE and not self.summaries:
            raise ValueError("answerable response must carry summaries")
        if self.kind == UNANSWERABLE and self.summaries:
            raise ValueError("unanswerable response cannot carry summaries")

    @classmethod
    def answerable(cls, summaries: Iterable[RawSummary], raw_text: str) -> "ExtractorResponse":
        return cls(ANSWERABLE, tuple(summaries), raw_text)

    @classmethod
    def unanswerable(cls, raw_text: str) -> "ExtractorResponse":
        return cls(UNANSWERABLE, (), raw_text)

    @property
    def is_answerable(self) -> bool:
        return self.kind == ANSWERABLE

    def to_dict(self, pmid: Optional[str] = None) -> dict:
        if pmid is None and self.summaries:
            pmid = self.summaries[0].pmid
        return {
            "pmid": pmid,
            "kind": self.kind,
            "summaries": [s.to_dict() for s in self.summaries],
            "raw_text": self.raw_text,
        }


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    token: Optional[str] = None
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 0.5
    concurrency: int = 4


def build_prompt(paper: PaperRecord) -> str:
    """The extraction instruction followed by the paper's title and abstract."""
    return f"{PROMPT_QUESTION}\n\ntitle: {paper.title}\nabstract: {paper.abstract}"


def _first_text_field(body) -> str:
    """Depth-first search for the first string value in a decoded JSON body."""
    if isinstance(body, str):
        return body
    if isinstance(body, dict):
        for value in body.values():
            found = _first_text_field(value)
            if found is not None:
                return found
        return None
    if isinstance(body, list):
        for item in body:
            found = _first_text_field(item)
            if found is not None:
                return found
        return None
    return None


def query_endpoint(
    prompt: str,
    config: EndpointConfig,
    pmid: Optional[str] = None,
    session: Optional[requests.Session] = None,
) -> str:
    """POST the prompt to the inference endpoint and return its completion.

    Transient failures (connection errors, timeouts, 5xx) are retried up to
    config.retries with exponential backoff; 4xx responses are never retried.
    """
    sess = session or requests
    headers = {}
    if config.token:
        headers["Authorization"] = f"Bearer {config.token}"

    last_exc: Optional[Exception] = None
    for attempt in range(config.retries + 1):
        if attempt:
            time.sleep(config.backoff * (2 ** (attempt - 1)))
        try:
            resp = sess.post(
                config.base_url,
                json={"inputs": prompt},
                headers=headers,
                timeout=config.timeout,
            )
        except requests.Timeout as exc:
            last_exc = EndpointTimeout(str(exc), pmid)
            continue
        except requests.RequestException as exc:
            last_exc = EndpointUnreachable(str(exc), pmid)
            continue
        if 400 <= resp.status_code < 500:
            raise EndpointRejected(resp.status_code, pmid)
        if resp.status_code >= 500:
            last_exc = EndpointUnreachable(f"status {resp.status_code}", pmid)
            continue
        try:
            body = resp.json()
        except ValueError:
            return resp.text
        text = _first_text_field(body)
        if text is None:
            raise Unparseable(resp.text, pmid)
        return text
    raise last_exc if last_exc is not None else EndpointUnreachable("no attempt made", pmid)


def _normalize_key(key: str) -> str:
    key = key.replace("%", "").replace("_", " ")
    return re.sub(r"\s+", " ", key.strip().casefold())


def _coerce_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        # kept verbatim; whitespace-only counts as missing
        return value if value.strip() else ""
    if isinstance(value, (int, float, bool)):
        return str(value)
    return json.dumps(value, ensure_ascii=False)


def _scan_json(text: str):
    """Return the first balanced JSON object or array embedded in the text."""
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch not in "{[":
            continue
        try:
            value, _ = decoder.raw_decode(text, i)
        except ValueError:
            continue
        return value
    return None


def _element_to_summary(pmid: str, element: dict) -> Optional[RawSummary]:
    fields = {
        "disease_name": UNKNOWN,
        "location": UNKNOWN,
        "date": UNKNOWN,
        "r0_value": "",
        "ci_values": UNKNOWN,
        "method": UNKNOWN,
    }
    for key, value in element.items():
        attr = _KEY_MAP.get(_normalize_key(str(key)))
        if attr is None:
            continue
        coerced = _coerce_value(value)
        if coerced:
            fields[attr] = coerced
    if fields["r0_value"].strip().casefold() in _EMPTY_R0:
        return None
    return RawSummary(pmid=pmid, **fields)


def parse_response(pmid: str, text: str) -> ExtractorResponse:
    """Parse model output into an answerable/unanswerable verdict.

    Tolerates leading/trailing prose around the first balanced JSON object
    or array; keys are matched case-insensitively with spaces or
    underscores; elements without an R0 value are dropped.
    """
    if _UNANSWERABLE_RE.match(text.strip()):
        return ExtractorResponse.unanswerable(text)

    value = _scan_json(text)
    if value is None:
        raise Unparseable(text, pmid)

    elements = value if isinstance(value, list) else [value]
    summaries = []
    for element in elements:
        if not isinstance(element, dict):
            continue
        summary = _element_to_summary(pmid, element)
        if summary is not None:
            summaries.append(summary)
    if not summaries:
        return ExtractorResponse.unanswerable(text)
    return ExtractorResponse.answerable(summaries, text)


def render_response(summaries: Iterable[RawSummary]) -> str:
    """Format summaries as the JSON array shape parse_response accepts;
    formatting then re-parsing yields an equal summary list."""
    payload = [
        {
            "disease name": s.disease_name,
            "location": s.location,
            "date": s.date,
            "R0 value": s.r0_value,
            "%CI values": s.ci_values,
            "method": s.method,
        }
        for s in summaries
    ]
    return json.dumps(payload, ensure_ascii=False)


def _load_disease_lexicon() -> list[str]:
    text = resources.files("r0scope.data").joinpath("diseases.txt").read_text("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


class RuleBasedExtractor:
    """Deterministic pattern-based fallback extractor.

    Finds R0 mentions followed by a number or range within a short window,
    an optional CI group, and the first lexicon/gazetteer hits for disease
    and location. Lower fidelity than the model endpoint by design.
    """

    MENTION_RE = re.compile(
        r"(?:\bR0\b|R₀|\bbasic\s+reproducti(?:on|ve)\s+(?:number|ratio|rate)\b"
        r"|\breproduction\s+number\b)",
        re.IGNORECASE,
    )
    WINDOW = 90
    _NUM = r"\d+(?:\.\d+)?"
    # leading lookbehind rejects word- or hyphen-attached digits ("COVID-19",
    # "H1N1"); trailing lookahead tolerates sentence-ending periods ("was 1.9.")
    VALUE_RE = re.compile(
        rf"(?<![\d.\w-])({_NUM})(?:\s*(?:-|–|—|to)\s*({_NUM}))?(?!\.?\d)"
    )
    CI_RE = re.compile(
        rf"\(?\s*({_NUM})\s*%\s*(?:CI|CrI|confidence interval|credible interval)"
        rf"[:\s]*({_NUM})\s*[-–—]\s*({_NUM})\s*\)?",
        re.IGNORECASE,
    )
    DATE_RE = re.compile(
        r"(?:(?:January|February|March|April|May|June|July|August|September|"
        r"October|November|December)\s+)?(?:19|20)\d{2}",
    )
    YEAR_ONLY_RE = re.compile(r"^(?:19|20)\d{2}$")

    def __init__(
        self,
        gazetteer: Optional[Gazetteer] = None,
        diseases: Optional[list[str]] = None,
    ):
        self.gazetteer = gazetteer or Gazetteer.bundled()
        lexicon = diseases if diseases is not None else _load_disease_lexicon()
        self._disease_re = self._alternation(lexicon)
        self._location_re = self._alternation(self.gazetteer.names())

    @staticmethod
    def _alternation(names: Iterable[str]) -> Optional[re.Pattern]:
        # longest-first so "zika virus" beats "zika"; name tiebreak keeps the
        # pattern deterministic across runs
        cleaned = sorted({n.strip() for n in names if n.strip()}, key=lambda n: (-len(n), n))
        if not cleaned:
            return None
        joined = "|".join(re.escape(n) for n in cleaned)
        return re.compile(rf"\b(?:{joined})\b", re.IGNORECASE)

    def _find_values(self, text: str) -> list[tuple[str, str]]:
        """(r0_value, ci_values) pairs, one per R0 mention with a number."""
        found: list[tuple[str, str]] = []
        seen: set[str] = set()
        for mention in self.MENTION_RE.finditer(text):
            window = text[mention.end(): mention.end() + self.WINDOW]
            value = None
            for num in self.VALUE_RE.finditer(window):
                token = num.group(1)
                # years and percentages are not R0 values
                if num.group(2) is None and self.YEAR_ONLY_RE.match(token):
                    continue
                rest = window[num.end():].lstrip()
                if num.group(2) is None and rest.startswith("%"):
                    continue
                value = num
                break
            if value is None:
                continue
            if value.group(2) is not None:
                r0_text = f"{value.group(1)}-{value.group(2)}"
            else:
                r0_text = value.group(1)
            ci_m = self.CI_RE.search(window, value.end())
            ci_text = ""
            if ci_m:
                ci_text = f"{ci_m.group(1)}% CI: {ci_m.group(2)}-{ci_m.group(3)}"
            if r0_text not in seen:
                seen.add(r0_text)
                found.append((r0_text, ci_text))
        return found

    def _first_match(self, pattern: Optional[re.Pattern], text: str) -> str:
        if pattern is None:
            return UNKNOWN
        m = pattern.search(text)
        return m.group(0) if m else UNKNOWN

    def _find_location(self, text: str) -> str:
        if self._location_re is None:
            return UNKNOWN
        m = self._location_re.search(text)
        if not m:
            return UNKNOWN
        # join an immediately following known name ("Wuhan, China")
        combined = m.group(0)
        rest = text[m.end():]
        follow = re.match(r",\s*", rest)
        if follow:
            nxt = self._location_re.match(rest, follow.end())
            if nxt:
                combined = f"{combined}, {nxt.group(0)}"
        return combined

    def extract(self, paper: PaperRecord) -> ExtractorResponse:
        text = f"{paper.title}. {paper.abstract}" if paper.abstract else paper.title
        values = self._find_values(text)
        if not values:
            return ExtractorResponse.unanswerable("unanswerable")

        disease = self._first_match(self._disease_re, text)
        location = self._find_location(text)
        date_m = self.DATE_RE.search(text)
        date = date_m.group(0) if date_m else UNKNOWN
        summaries = [
            RawSummary(
                pmid=paper.pmid,
                disease_name=disease,
                location=location,
                date=date,
                r0_value=r0_text,
                ci_values=ci_text or UNKNOWN,
                method=UNKNOWN,
            )
            for r0_text, ci_text in values
        ]
        return ExtractorResponse.answerable(summaries, render_response(summaries))


_default_rule_extractor: Optional[RuleBasedExtractor] = None


def rule_extract(paper: PaperRecord) -> ExtractorResponse:
    """Extract with the bundled lexicon and gazetteer; deterministic, total."""
    global _default_rule_extractor
    if _default_rule_extractor is None:
        _default_rule_extractor = RuleBasedExtractor()
    return _default_rule_extractor.extract(paper)


def extract_papers(
    papers: Iterable[PaperRecord],
    extractor: Callable[[PaperRecord], ExtractorResponse],
    concurrency: int = 1,
) -> list[tuple[PaperRecord, ExtractorResponse | ExtractionError]]:
    """Run the extractor over papers, bounding in-flight calls by
    `concurrency`; per-paper failures are returned, not raised."""

    def run_one(paper: PaperRecord):
        try:
            return extractor(paper)
        except ExtractionError as exc:
            if exc.pmid is None:
                exc.pmid = paper.pmid
            return exc

    papers = list(papers)
    if concurrency <= 1:
        return [(p, run_one(p)) for p in papers]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        results = list(pool.map(run_one, papers))
    return list(zip(papers, results))


def endpoint_extractor(
    config: EndpointConfig,
    session: Optional[requests.Session] = None,
) -> Callable[[PaperRecord], ExtractorResponse]:
    """Extractor closure that prompts the configured inference endpoint."""

    def extract(paper: PaperRecord) -> ExtractorResponse:
        completion = query_endpoint(
            build_prompt(paper), config, pmid=paper.pmid, session=session
        )
        return parse_response(paper.pmid, completion)

    return extract
