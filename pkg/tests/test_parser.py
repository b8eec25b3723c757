import math
import random

import pytest

from mcvlab.model import LicensePlate, generate_plate, plate_to_nato
from mcvlab.parser import (
    METRIC_BLEU,
    METRIC_LEVSCORE,
    char_bleu,
    load_stopwords,
    match_token,
    one_edit_collision_report,
    one_edit_variants,
    parse_transcript,
    strip_lead_and_stopwords,
    token_score,
    tokenize,
)
from mcvlab.scoring import levenshtein

LEAD_WORDS = ["reporting", "license", "plate"]


class TestTokenize:
    def test_punctuation_and_hyphens(self):
        assert tokenize("Reporting license plate: Alfa, X-ray!") == \
            ["reporting", "license", "plate", "alfa", "xray"]

    def test_empty(self):
        assert tokenize("") == []

    def test_whitespace_collapse(self):
        assert tokenize("  a  b ") == ["a", "b"]

    def test_leading_hyphen_splits(self):
        assert tokenize("-alfa bravo- x-ray") == ["alfa", "bravo", "xray"]


class TestStripLeadAndStopwords:
    def test_exact_lead_removed(self):
        assert strip_lead_and_stopwords(
            ["reporting", "license", "plate", "alfa"], LEAD_WORDS
        ) == ["alfa"]

    def test_near_lead_removed(self):
        assert levenshtein("lisense", "license") == 1
        assert levenshtein("lisens", "license") == 2
        assert strip_lead_and_stopwords(["lisense", "lisens", "bravo"], LEAD_WORDS) == ["bravo"]

    def test_stopword_removed(self):
        assert strip_lead_and_stopwords(["the", "zulu"], LEAD_WORDS) == ["zulu"]

    def test_requires_lead_words(self):
        with pytest.raises(ValueError):
            strip_lead_and_stopwords(["alfa"], [])

    def test_stopword_snapshot_has_179_entries(self):
        assert len(load_stopwords()) == 179


class TestCharBleu:
    def test_identity_is_one(self, lexicon):
        for word in lexicon.words:
            assert char_bleu(word, word) == pytest.approx(1.0)

    def test_ordering(self):
        assert char_bleu("zz", "alfa") < char_bleu("alf", "alfa")

    def test_alpha_vs_alfa_value(self):
        # Hand-computed: p1=3/5, p2=1/4, p3 and p4 are zero precisions smoothed
        # to 1/2 and 1/4; geometric mean (3/160)^(1/4); no brevity penalty.
        assert char_bleu("alpha", "alfa") == pytest.approx((3 / 160) ** 0.25)

    def test_brevity_penalty(self):
        # "alf" vs "alfa": all precisions 1, penalty exp(1 - 4/3).
        assert char_bleu("alf", "alfa") == pytest.approx(math.exp(1 - 4 / 3))

    def test_matches_independent_oracle(self, lexicon):
        rng = random.Random(23)
        for _ in range(200):
            token = "".join(rng.choice("abcdefxyz") for _ in range(rng.randrange(1, 9)))
            word = rng.choice(lexicon.words)
            assert char_bleu(token, word) == pytest.approx(oracle_char_bleu(token, word))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            char_bleu("", "alfa")


def oracle_char_bleu(token, word, max_n=4):
    """Independent reimplementation: dict-counted n-grams, product form."""
    orders = min(max_n, len(token))
    product = 1.0
    zero_count = 0
    for n in range(1, orders + 1):
        cand_grams = [token[i:i + n] for i in range(len(token) - n + 1)]
        ref_grams = [word[i:i + n] for i in range(len(word) - n + 1)]
        matched = 0
        for gram in set(cand_grams):
            matched += min(cand_grams.count(gram), ref_grams.count(gram))
        if matched == 0:
            zero_count += 1
            p = 0.5 ** zero_count
        else:
            p = matched / len(cand_grams)
        product *= p
    bleu = product ** (1.0 / orders)
    if len(token) < len(word):
        bleu *= math.exp(1.0 - len(word) / len(token))
    return bleu


def oracle_best_match(token, lexicon, metric):
    """Exhaustive scoring over all 36 words; first-in-lexicon tie break."""
    scores = [(word, token_score(token, word, metric)) for word in lexicon.words]
    best = max(s for _, s in scores)
    return next(word for word, s in scores if s == best)


class TestMatchToken:
    def test_exact_word(self, lexicon):
        m = match_token("alfa", lexicon)
        assert (m.matched_word, m.matched_symbol, m.score) == ("alfa", "A", 1.0)

    def test_alpha(self, lexicon):
        m = match_token("alpha", lexicon)
        assert m.matched_word == "alfa"
        assert m.score == pytest.approx(0.6)

    def test_braavo_both_metrics(self, lexicon):
        for metric in (METRIC_LEVSCORE, METRIC_BLEU):
            m = match_token("braavo", lexicon, metric)
            assert m.matched_word == "bravo"
            assert m.matched_word == oracle_best_match("braavo", lexicon, metric)

    def test_won_and_too_map_to_digits(self, lexicon):
        # "won" ties one/two at 1/3; lexicon order (digits ascending) picks one.
        assert match_token("won", lexicon).matched_word == "one"
        assert match_token("too", lexicon).matched_word == "two"

    def test_every_lexicon_word_matches_itself(self, lexicon):
        for metric in (METRIC_LEVSCORE, METRIC_BLEU):
            for word in lexicon.words:
                m = match_token(word, lexicon, metric)
                assert m.matched_word == word
                assert m.score == pytest.approx(1.0)

    def test_agrees_with_exhaustive_oracle(self, lexicon):
        rng = random.Random(31)
        for _ in range(300):
            token = "".join(rng.choice("abcdefghinorstuvxz") for _ in range(rng.randrange(1, 9)))
            assert match_token(token, lexicon).matched_word == \
                oracle_best_match(token, lexicon, METRIC_LEVSCORE)

    def test_empty_token_rejected(self, lexicon):
        with pytest.raises(ValueError):
            match_token("", lexicon)


class TestParseTranscript:
    def test_clean_sentence(self, lexicon):
        plate, matches = parse_transcript(
            "reporting license plate alfa one two bravo charlie delta", lexicon
        )
        assert plate == "A12BCD"
        assert [m.score for m in matches] == [1.0] * 6

    def test_lead_only(self, lexicon):
        plate, matches = parse_transcript("reporting license plate", lexicon)
        assert plate == ""
        assert matches == []

    def test_stopwords_eat_homophones(self, lexicon):
        # "won" and "too" are stop words in the embedded list, so the filter
        # drops them before the matcher can rescue them; only 4 symbols remain.
        plate, _ = parse_transcript(
            "reporting license plate alfa won too bravo charlie delta", lexicon
        )
        assert plate == "ABCD"

    def test_partial_answers_not_padded(self, lexicon):
        plate, _ = parse_transcript("reporting license plate alfa bravo", lexicon)
        assert plate == "AB"

    def test_output_symbols_from_lexicon(self, lexicon):
        rng = random.Random(5)
        for _ in range(50):
            text = " ".join(rng.choice(["alfa", "blip", "xqz", "ninee"]) for _ in range(4))
            plate, _ = parse_transcript(text, lexicon)
            assert all(c in lexicon.symbol_to_word for c in plate)

    def test_round_trip_sample(self, lexicon):
        for seed in range(60):
            plate = generate_plate(seed)
            text = plate_to_nato(plate, lexicon)
            recovered, _ = parse_transcript(text, lexicon)
            assert recovered == plate.text

    def test_bleu_metric_round_trip(self, lexicon):
        plate = LicensePlate("K05QXR")
        recovered, matches = parse_transcript(plate_to_nato(plate, lexicon), lexicon, metric=METRIC_BLEU)
        assert recovered == plate.text
        assert all(m.metric == METRIC_BLEU for m in matches)


class TestLeadWordSafety:
    def test_no_lexicon_word_near_any_lead_word(self, lexicon):
        # The near-lead filter removes tokens at distance < 3; every genuine
        # word must sit at 3 or more from every lead word or round trips break.
        for word in lexicon.words:
            for lead in LEAD_WORDS:
                assert levenshtein(word, lead) >= 3, (word, lead)


class TestOneEditEnumeration:
    def test_variant_counts(self):
        word = "kilo"
        variants = one_edit_variants(word)
        # 4 deletions, 4*25 substitutions, 5*26 insertions, minus overlaps;
        # all are within distance 1 and none equal the word itself.
        assert all(levenshtein(v, word) == 1 for v in variants)
        assert word not in variants

    def test_collision_report_shape(self, lexicon):
        report = one_edit_collision_report(lexicon)
        assert report, "some collisions are expected (e.g. edits between five and nine)"
        tokens = {entry["token"] for entry in report}
        assert "fine" in tokens  # one edit from both "five" and "nine"
        for entry in report:
            assert entry["picked"] in lexicon.words
            assert entry["source"] in lexicon.words

    def test_matcher_recovers_unique_argmax_everywhere(self, lexicon):
        # match_token must agree with the exhaustive scorer on every edit of a
        # sample of words (the acceptance suite sweeps the full lexicon).
        for source in ["alfa", "five", "nine", "two"]:
            for token in sorted(one_edit_variants(source)):
                picked = match_token(token, lexicon).matched_word
                assert picked == oracle_best_match(token, lexicon, METRIC_LEVSCORE)
