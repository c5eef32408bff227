"""Lexicon matching with context-aware false-positive suppression and polarity."""

from __future__ import annotations

import enum
import json
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Optional

import yaml

from adsurveil.model import AdRecord, TermGroup

_TOKEN_RE = re.compile(r"[^\W_]+")
# Punctuation that ends a clause; qualifier/negation windows do not cross it.
_CLAUSE_BREAK = re.compile(r"[.!?;,|()\[\]\n]")
_PHRASE_GAPS = frozenset({"", "-", "/"})


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    pre: str = ""   # punctuation char touching the token on the left, if any
    post: str = ""  # ... and on the right

    @property
    def norm(self) -> str:
        return self.text.casefold()

    @property
    def is_digits(self) -> bool:
        return self.text.isdigit()


def tokenize(text: str) -> list[Token]:
    """Split into alphanumeric tokens with offsets into ``text``.

    Adjacent punctuation (``#``, ``$``, ``:``, ``-``, ``/`` and others) is kept
    on the token as ``pre``/``post`` markers for the false-positive rules.
    """
    tokens = []
    n = len(text)
    for m in _TOKEN_RE.finditer(text):
        s, e = m.span()
        pre = text[s - 1] if s > 0 and not text[s - 1].isspace() else ""
        post = text[e] if e < n and not text[e].isspace() else ""
        tokens.append(Token(m.group(), s, e, pre, post))
    return tokens


class Field(str, enum.Enum):
    TITLE = "title"
    BODY = "body"


class Polarity(str, enum.Enum):
    FRIENDLY = "friendly"
    PROHIBITED = "prohibited"
    NEUTRAL = "neutral_mention"


@dataclass(frozen=True)
class MatchSite:
    """A raw lexicon match plus at most four tokens of context on each side."""

    text: str
    matched: tuple[Token, ...]
    before: tuple[Token, ...]
    after: tuple[Token, ...]
    group: TermGroup
    pattern: tuple[str, ...]

    @property
    def start(self) -> int:
        return self.matched[0].start

    @property
    def end(self) -> int:
        return self.matched[-1].end

    def gap(self, left: Token, right: Token) -> str:
        return self.text[left.end:right.start]

    def clause_before(self, k: int) -> list[Token]:
        """Up to ``k`` tokens left of the match, stopping at a clause break."""
        out = []
        right = self.matched[0]
        for tok in reversed(self.before):
            if len(out) == k or _CLAUSE_BREAK.search(self.gap(tok, right)):
                break
            out.append(tok)
            right = tok
        return out[::-1]

    def clause_after(self, k: int) -> list[Token]:
        out = []
        left = self.matched[-1]
        for tok in self.after:
            if len(out) == k or _CLAUSE_BREAK.search(self.gap(left, tok)):
                break
            out.append(tok)
            left = tok
        return out

    def neighbours(self, tok: Token) -> tuple[Optional[Token], Optional[Token]]:
        seq = self.before + self.matched + self.after
        i = seq.index(tok)
        return (seq[i - 1] if i > 0 else None, seq[i + 1] if i + 1 < len(seq) else None)

    def numerals(self) -> list[Token]:
        return [t for t in self.matched if t.is_digits]


# ---------------------------------------------------------------- rules

@dataclass(frozen=True)
class FalsePositiveRule:
    name: str
    description: str
    predicate: Callable[[MatchSite], bool]
    extension: bool = False

    def __call__(self, site: MatchSite) -> bool:
        return self.predicate(site)


UNIT_WORDS = frozenset({"apt", "apartment", "unit", "suite", "ste", "rm", "bldg", "building", "lot"})
MONEY_WORDS = frozenset({"bucks", "buck", "dollars", "dollar", "usd"})
PERIOD_WORDS = frozenset({"month", "months", "mo", "mos", "mth", "monthly", "week", "wk", "weekly"})
STREET_SUFFIXES = frozenset({
    "st", "street", "ave", "av", "avenue", "blvd", "boulevard", "rd", "road", "dr", "drive",
    "way", "ct", "court", "ln", "lane", "pl", "place", "pkwy", "parkway", "cir", "circle", "hwy",
})
DIRECTIONS = frozenset({"n", "s", "e", "w", "ne", "nw", "se", "sw", "north", "south", "east", "west"})
CLOCK_WORDS = frozenset({"am", "pm", "oclock"})
POT_BEFORE = frozenset({"coffee", "crock", "flower", "plant", "tea", "cooking", "stock", "melting"})
POT_AFTER = frozenset({"rack", "holder", "holders", "roast", "pie", "pies", "hole", "holes", "belly", "luck"})
_DIGIT_GROUP = re.compile(r"(?:\d{2,4}|[xX]{2,4})")


def _first_numeral_is_leading(site: MatchSite) -> Optional[Token]:
    tok = site.matched[0]
    return tok if tok.is_digits else None


def _last_numeral_is_trailing(site: MatchSite) -> Optional[Token]:
    tok = site.matched[-1]
    return tok if tok.is_digits else None


def _rule_hash(site: MatchSite) -> bool:
    return any(t.pre == "#" for t in site.numerals())


def _rule_unit(site: MatchSite) -> bool:
    if _first_numeral_is_leading(site) is None or not site.before:
        return False
    prev = site.before[-1]
    return prev.norm in UNIT_WORDS and not _CLAUSE_BREAK.search(site.gap(prev, site.matched[0]).replace(".", ""))


def _rule_money(site: MatchSite) -> bool:
    lead = _first_numeral_is_leading(site)
    if lead is not None and lead.pre == "$":
        return True
    tail = _last_numeral_is_trailing(site)
    if tail is None:
        return False
    if tail.post == "$":
        return True
    nxt = site.after[:2]
    if not nxt:
        return False
    first = nxt[0].norm
    if first in MONEY_WORDS or first in PERIOD_WORDS or first == "k":
        return True
    if tail.post == "." and nxt[0].is_digits and nxt[0].start == tail.end + 1:
        return True  # 420.00
    return len(nxt) == 2 and first in {"per", "a", "each", "every"} and nxt[1].norm in PERIOD_WORDS


def _rule_phone(site: MatchSite) -> bool:
    for tok in site.numerals():
        prev, nxt = site.neighbours(tok)
        if prev is not None and _DIGIT_GROUP.fullmatch(prev.text):
            gap = site.gap(prev, tok)
            if gap in {"-", ".", ")", ") "}:
                return True
        if nxt is not None and _DIGIT_GROUP.fullmatch(nxt.text) and site.gap(tok, nxt) in {"-", "."}:
            return True
        if (prev is not None and nxt is not None and prev.is_digits and nxt.is_digits
                and len(prev.text) == 3 and len(nxt.text) == 4
                and site.gap(prev, tok) == " " and site.gap(tok, nxt) == " "):
            return True  # 555 420 1234
    return False


def _rule_street(site: MatchSite) -> bool:
    tail = _last_numeral_is_trailing(site)
    if tail is None:
        return False
    nxt = site.after[:3]
    if nxt and nxt[0].norm in DIRECTIONS and len(nxt) > 1:
        return True
    for tok in nxt:
        if tok.norm in STREET_SUFFIXES:
            return True
        if tok.norm in _ALL_QUALIFIERS or tok.is_digits:
            return False
    return False


def _rule_clock(site: MatchSite) -> bool:
    for tok in site.numerals():
        prev, nxt = site.neighbours(tok)
        if tok.pre == ":" and prev is not None and prev.is_digits and site.gap(prev, tok) == ":":
            return True
        if tok.post == ":" and nxt is not None and nxt.is_digits and site.gap(tok, nxt) == ":":
            return True
    tail = _last_numeral_is_trailing(site)
    if tail is not None and site.after:
        first = site.after[0]
        if first.norm in CLOCK_WORDS:
            return True
        if first.norm in {"a", "p"} and first.post == "." and len(site.after) > 1 and site.after[1].norm == "m":
            return True
    return False


def _rule_pot(site: MatchSite) -> bool:
    if site.group is not TermGroup.T5_POT:
        return False
    if site.before and site.before[-1].norm in POT_BEFORE:
        return True
    if site.after:
        if site.after[0].norm in POT_AFTER:
            return True
        if len(site.after) > 1 and site.after[0].norm in {"and", "or"} and site.after[1].norm in {"pan", "pans"}:
            return True
    return False


# Qualifier words block the street rule ("420 friendly on Main St" is not an address).
_ALL_QUALIFIERS = frozenset({"friendly", "frndly", "ok", "okay", "allowed", "fine", "welcome"})

RULES: dict[str, FalsePositiveRule] = {r.name: r for r in [
    FalsePositiveRule("hash_marker", "numeral written as #420", _rule_hash),
    FalsePositiveRule("unit_number", "numeral after apt/unit/suite/ste/rm", _rule_unit),
    FalsePositiveRule("money_amount", "numeral after $ or before bucks/dollars/per month", _rule_money),
    FalsePositiveRule("phone_number", "numeral hyphen-joined to other digit groups", _rule_phone),
    FalsePositiveRule("street_address", "numeral followed by a street name/suffix", _rule_street, extension=True),
    FalsePositiveRule("clock_time", "4:20 clock-time forms and am/pm", _rule_clock, extension=True),
    FalsePositiveRule("pot_cookware", "coffee pot, crock pot, pot roast and similar", _rule_pot),
]}


# ---------------------------------------------------------------- lexicon

class LexiconError(ValueError):
    pass


def _split_pattern(pattern: str) -> tuple[str, ...]:
    return tuple(t.casefold() for t in _TOKEN_RE.findall(pattern))


@dataclass(frozen=True)
class Lexicon:
    groups: dict[TermGroup, tuple[tuple[str, ...], ...]]
    qualifier_words: frozenset[str]
    negation_words: frozenset[str]
    fp_rules: tuple[FalsePositiveRule, ...]
    prohibition_words: frozenset[str] = frozenset()
    context_required: frozenset[tuple[str, ...]] = frozenset()
    _index: dict = field(default=None, repr=False, compare=False)
    _prefilter: re.Pattern = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        missing = [g.value for g in TermGroup if not self.groups.get(g)]
        if missing:
            raise LexiconError(f"groups without patterns: {missing}")
        owner: dict[tuple[str, ...], TermGroup] = {}
        for group, patterns in self.groups.items():
            for p in patterns:
                if not p:
                    raise LexiconError(f"empty pattern in {group.value}")
                if owner.setdefault(p, group) is not group:
                    raise LexiconError(f"pattern {' '.join(p)!r} is in {owner[p].value} and {group.value}")
        index: dict[str, list] = {}
        anchors = set()
        for p, group in owner.items():
            index.setdefault(p[0], []).append((p, group))
            digits = [t for t in p if any(c.isdigit() for c in t)]
            anchors.add(max(digits or p, key=len))
        for lst in index.values():
            lst.sort(key=lambda pg: -len(pg[0]))
        alt = "|".join(sorted((re.escape(a) for a in anchors), key=len, reverse=True))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_prefilter", re.compile(rf"(?<![^\W_])(?:{alt})(?![^\W_])", re.IGNORECASE))

    @classmethod
    def from_dict(cls, data: dict) -> Lexicon:
        try:
            raw_groups = data["groups"]
            groups = {TermGroup(k): tuple(_split_pattern(str(p)) for p in v) for k, v in raw_groups.items()}
        except (KeyError, ValueError, AttributeError) as exc:
            raise LexiconError(f"bad lexicon groups: {exc}") from exc
        flags = data.get("rules") or {}
        unknown = set(flags) - set(RULES)
        if unknown:
            raise LexiconError(f"unknown false-positive rules: {sorted(unknown)}")
        rules = tuple(r for name, r in RULES.items() if flags.get(name, True))
        def words(key):
            items = data.get(key) or ()
            bad = [w for w in items if not isinstance(w, str)]
            if bad:
                # unquoted YAML `no`/`yes` arrive as booleans
                raise LexiconError(f"{key} must be strings, got {bad!r}")
            return frozenset(w.casefold() for w in items)

        return cls(
            groups=groups,
            qualifier_words=words("qualifier_words"),
            negation_words=words("negation_words"),
            prohibition_words=words("prohibition_words"),
            fp_rules=rules,
            context_required=frozenset(_split_pattern(str(p)) for p in data.get("context_required") or ()),
        )

    @classmethod
    def load(cls, path: Optional[Path] = None) -> Lexicon:
        """Load a lexicon YAML file, or the bundled default when ``path`` is None."""
        if path is None:
            text = resources.files("adsurveil.data").joinpath("default_lexicon.yaml").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        data = yaml.safe_load(text)
        if not isinstance(data, dict):
            raise LexiconError("lexicon file must be a mapping")
        return cls.from_dict(data)

    def rule_names(self) -> list[str]:
        return [r.name for r in self.fp_rules]


# ---------------------------------------------------------------- matching

@dataclass(frozen=True)
class TermHit:
    ad_id: str
    group: TermGroup
    surface: str
    span: tuple[int, int]
    field: Field
    polarity: Polarity

    def to_dict(self) -> dict:
        return {
            "ad_id": self.ad_id,
            "group": self.group.value,
            "surface": self.surface,
            "span": list(self.span),
            "field": self.field.value,
            "polarity": self.polarity.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> TermHit:
        return cls(d["ad_id"], TermGroup(d["group"]), d["surface"], tuple(d["span"]),
                   Field(d["field"]), Polarity(d["polarity"]))


def _match_at(tokens: list[Token], text: str, i: int, lexicon: Lexicon):
    for pattern, group in lexicon._index.get(tokens[i].norm, ()):
        j = i + len(pattern)
        if j > len(tokens):
            continue
        ok = True
        for k in range(1, len(pattern)):
            a, b = tokens[i + k - 1], tokens[i + k]
            if b.norm != pattern[k] or text[a.end:b.start].strip() not in _PHRASE_GAPS:
                ok = False
                break
        if ok:
            return pattern, group, j
    return None


def find_sites(text: str, lexicon: Lexicon) -> list[MatchSite]:
    """Non-overlapping leftmost-longest lexicon matches in ``text``, before any filtering."""
    if not text or not lexicon._prefilter.search(text):
        return []
    tokens = tokenize(text)
    sites = []
    i = 0
    while i < len(tokens):
        m = _match_at(tokens, text, i, lexicon)
        if m is None:
            i += 1
            continue
        pattern, group, j = m
        sites.append(MatchSite(
            text=text,
            matched=tuple(tokens[i:j]),
            before=tuple(tokens[max(0, i - 4):i]),
            after=tuple(tokens[j:j + 4]),
            group=group,
            pattern=pattern,
        ))
        i = j
    return sites


def suppressed_by(site: MatchSite, lexicon: Lexicon) -> Optional[str]:
    """Name of the first false-positive rule that rejects ``site``, if any."""
    for rule in lexicon.fp_rules:
        if rule(site):
            return rule.name
    return None


def classify_polarity(site: MatchSite, lexicon: Lexicon) -> Polarity:
    """Friendly / prohibited / neutral from negations and qualifiers near the match.

    A negation up to two tokens before the match, inside the matched phrase, or
    between the match and a following qualifier makes it prohibited. A qualifier
    in the phrase or up to two tokens after makes it friendly. Windows stop at
    clause punctuation.
    """
    neg, qual = lexicon.negation_words, lexicon.qualifier_words
    if any(t.norm in neg for t in site.clause_before(2)):
        return Polarity.PROHIBITED
    phrase = site.pattern
    if any(w in neg for w in phrase):
        return Polarity.PROHIBITED
    if any(w in qual for w in phrase):
        return Polarity.FRIENDLY
    negated = False
    for tok in site.clause_after(2):
        if tok.norm in neg:
            negated = True
        elif tok.norm in lexicon.prohibition_words:
            return Polarity.PROHIBITED
        elif tok.norm in qual:
            return Polarity.PROHIBITED if negated else Polarity.FRIENDLY
    return Polarity.NEUTRAL


def extract_terms(ad: AdRecord, lexicon: Lexicon) -> list[TermHit]:
    """Surviving term hits in the ad's title, then body."""
    hits = []
    for fld, text in ((Field.TITLE, ad.title), (Field.BODY, ad.body)):
        for site in find_sites(text, lexicon):
            if suppressed_by(site, lexicon):
                continue
            polarity = classify_polarity(site, lexicon)
            if polarity is Polarity.NEUTRAL and site.pattern in lexicon.context_required:
                continue
            hits.append(TermHit(ad.id, site.group, text[site.start:site.end], (site.start, site.end), fld, polarity))
    return hits


def count_by_group(hits: Iterable[TermHit]) -> dict[TermGroup, int]:
    counts = Counter(h.group for h in hits)
    return {g: counts.get(g, 0) for g in TermGroup}


def _extract_chunk(args):
    ads, lexicon = args
    return [extract_terms(ad, lexicon) for ad in ads]


def extract_corpus(ads: list[AdRecord], lexicon: Lexicon, workers: int = 1,
                   chunk_size: int = 10_000) -> dict[str, list[TermHit]]:
    """Hits for every ad keyed by id; ``workers > 1`` fans chunks out to processes."""
    if workers <= 1 or len(ads) <= chunk_size:
        return {ad.id: extract_terms(ad, lexicon) for ad in ads}
    chunks = [ads[i:i + chunk_size] for i in range(0, len(ads), chunk_size)]
    out: dict[str, list[TermHit]] = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk, result in zip(chunks, pool.map(_extract_chunk, [(c, lexicon) for c in chunks])):
            for ad, hits in zip(chunk, result):
                out[ad.id] = hits
    return out


def sorted_hits(hits_by_ad: dict[str, list[TermHit]]) -> list[TermHit]:
    order = {Field.TITLE: 0, Field.BODY: 1}
    flat = [h for hits in hits_by_ad.values() for h in hits]
    return sorted(flat, key=lambda h: (h.ad_id, order[h.field], h.span[0]))


def write_hits(hits: Iterable[TermHit], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for h in hits:
            fh.write(json.dumps(h.to_dict(), ensure_ascii=False) + "\n")


def read_hits(path: Path) -> list[TermHit]:
    with open(path, encoding="utf-8") as fh:
        return [TermHit.from_dict(json.loads(line)) for line in fh if line.strip()]
