"""Turn raw transcribed text into a license-plate answer.

Pipeline: tokenize, drop the lead sentence (and anything within Levenshtein
distance 2 of a lead word) plus English stop words, then map every surviving
token to its closest spelling-alphabet word and read off the symbols. Partial
answers are fine; the output is however many symbols survived.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources

from .model import DEFAULT_LEAD, NatoLexicon
from .scoring import lev_score, levenshtein

LEAD_DISTANCE_CUTOFF = 3  # tokens closer than this to a lead word are removed

METRIC_LEVSCORE = "levscore"
METRIC_BLEU = "bleu"
METRICS = (METRIC_LEVSCORE, METRIC_BLEU)

_HYPHEN_RE = re.compile(r"(?<=[a-z0-9])-(?=[a-z0-9])")
_SPLIT_RE = re.compile(r"[^a-z0-9]+")


def load_stopwords() -> frozenset[str]:
    raw = resources.files("mcvlab.data").joinpath("stopwords_en.txt").read_text()
    return frozenset(
        line.strip() for line in raw.splitlines()
        if line.strip() and not line.startswith("#")
    )


def tokenize(text: str) -> list[str]:
    """Lowercase tokens; punctuation splits, intra-word hyphens are deleted."""
    lowered = _HYPHEN_RE.sub("", text.lower())
    return [t for t in _SPLIT_RE.split(lowered) if t]


def strip_lead_and_stopwords(tokens: list[str], lead_words: list[str],
                             stopwords: frozenset[str] | None = None) -> list[str]:
    """Remove near-lead tokens (distance < 3 to any lead word) and stop words."""
    if not lead_words:
        raise ValueError("lead_words must be nonempty")
    stopwords = load_stopwords() if stopwords is None else stopwords
    kept = []
    for token in tokens:
        if token in stopwords:
            continue
        if any(levenshtein(token, lead) < LEAD_DISTANCE_CUTOFF for lead in lead_words):
            continue
        kept.append(token)
    return kept


@dataclass(frozen=True)
class TokenMatch:
    token: str
    matched_word: str
    matched_symbol: str
    score: float
    metric: str

    def to_dict(self) -> dict:
        return {
            "token": self.token,
            "matched_word": self.matched_word,
            "matched_symbol": self.matched_symbol,
            "score": self.score,
            "metric": self.metric,
        }


def char_bleu(token: str, word: str, max_n: int = 4) -> float:
    """Character-level BLEU of token against word.

    Geometric mean of modified n-gram precisions for n = 1..min(max_n,
    len(token)); the i-th zero precision is smoothed to 1/2^i (exponential
    decay); brevity penalty applies when the token is shorter than the word.
    """
    if not token or not word:
        raise ValueError("char_bleu needs nonempty strings")
    orders = min(max_n, len(token))
    log_sum = 0.0
    zeros = 0
    for n in range(1, orders + 1):
        cand = Counter(token[i:i + n] for i in range(len(token) - n + 1))
        ref = Counter(word[i:i + n] for i in range(len(word) - n + 1))
        clipped = sum(min(count, ref[gram]) for gram, count in cand.items())
        if clipped == 0:
            zeros += 1
            precision = 1.0 / (2 ** zeros)
        else:
            precision = clipped / sum(cand.values())
        log_sum += math.log(precision)
    geo_mean = math.exp(log_sum / orders)
    brevity = 1.0 if len(token) >= len(word) else math.exp(1.0 - len(word) / len(token))
    return brevity * geo_mean


def token_score(token: str, word: str, metric: str) -> float:
    if metric == METRIC_LEVSCORE:
        return lev_score(word, token)
    if metric == METRIC_BLEU:
        return char_bleu(token, word)
    raise ValueError(f"unknown metric: {metric!r}")


def match_token(token: str, lexicon: NatoLexicon | None = None,
                metric: str = METRIC_LEVSCORE) -> TokenMatch:
    """Best-scoring lexicon word for a token; ties go to lexicon order."""
    if not token:
        raise ValueError("cannot match an empty token")
    lexicon = lexicon or NatoLexicon.default()
    best_word = None
    best = -1.0
    for word, _ in lexicon.entries:
        s = token_score(token, word, metric)
        if s > best:
            best_word, best = word, s
    return TokenMatch(
        token=token,
        matched_word=best_word,
        matched_symbol=lexicon.word_to_symbol[best_word],
        score=best,
        metric=metric,
    )


def parse_transcript(text: str, lexicon: NatoLexicon | None = None,
                     lead: str = DEFAULT_LEAD, metric: str = METRIC_LEVSCORE,
                     stopwords: frozenset[str] | None = None) -> tuple[str, list[TokenMatch]]:
    """Extract (plate_text, per-token matches) from a transcription."""
    lexicon = lexicon or NatoLexicon.default()
    tokens = tokenize(text)
    lead_words = tokenize(lead)
    if lead_words:
        tokens = strip_lead_and_stopwords(tokens, lead_words, stopwords)
    else:
        sw = load_stopwords() if stopwords is None else stopwords
        tokens = [t for t in tokens if t not in sw]
    matches = [match_token(t, lexicon, metric) for t in tokens]
    plate_text = "".join(m.matched_symbol for m in matches)
    return plate_text, matches


def one_edit_variants(word: str, alphabet: str = "abcdefghijklmnopqrstuvwxyz") -> set[str]:
    """All strings one substitution, insertion, or deletion away from word."""
    variants: set[str] = set()
    for i in range(len(word)):
        variants.add(word[:i] + word[i + 1:])  # deletion
        for c in alphabet:
            if c != word[i]:
                variants.add(word[:i] + c + word[i + 1:])  # substitution
    for i in range(len(word) + 1):
        for c in alphabet:
            variants.add(word[:i] + c + word[i:])  # insertion
    variants.discard(word)
    variants.discard("")
    return variants


def one_edit_collision_report(lexicon: NatoLexicon | None = None,
                              metric: str = METRIC_LEVSCORE) -> list[dict]:
    """Enumerate single-character edits of every lexicon word and record the
    cases where the source word is not the unique best match.

    Each collision entry lists the edited token, its source word, the word the
    matcher picks, and every word tied at the top score.
    """
    lexicon = lexicon or NatoLexicon.default()
    collisions = []
    for source, _ in lexicon.entries:
        for token in sorted(one_edit_variants(source)):
            scores = {word: token_score(token, word, metric) for word, _ in lexicon.entries}
            top = max(scores.values())
            winners = [w for w, _ in lexicon.entries if scores[w] == top]
            if winners != [source]:
                collisions.append({
                    "token": token,
                    "source": source,
                    "picked": match_token(token, lexicon, metric).matched_word,
                    "tied": winners,
                    "score": top,
                })
    return collisions
