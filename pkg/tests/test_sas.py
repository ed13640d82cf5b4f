import pytest
from hypothesis import given, strategies as st

from voicekex.sas import (
    SAS_MAX,
    ParseError,
    PolicyViolation,
    SASObligation,
    VerificationOutcome,
    WordList,
    WordListError,
    default_wordlist,
    parse_rendering,
    render_digits,
    render_words,
    vocal_compare,
)

sas_values = st.integers(0, SAS_MAX)


def test_bundled_word_list_shape():
    wl = default_wordlist()
    assert len(wl.even_words) == len(wl.odd_words) == 256
    assert not set(wl.even_words) & set(wl.odd_words)
    assert (wl.even_words[0], wl.odd_words[0]) == ("aardvark", "adroitness")
    assert (wl.even_words[255], wl.odd_words[255]) == ("zulu", "yucatan")


def test_render_examples():
    wl = default_wordlist()
    assert render_digits(0) == "00000"
    assert render_digits(SAS_MAX) == "65535"
    assert render_words(0x0000) == (wl.even_words[0], wl.odd_words[0])
    assert render_words(0xFF01) == (wl.even_words[255], wl.odd_words[1])
    for bad in (-1, SAS_MAX + 1):
        with pytest.raises(ValueError):
            render_digits(bad)
        with pytest.raises(ValueError):
            render_words(bad)


@given(sas_values)
def test_digit_roundtrip(s):
    assert parse_rendering(render_digits(s)) == s


@given(sas_values, st.sampled_from([str.upper, str.title, lambda w: w]), st.sampled_from([" ", "  ", "\t"]))
def test_word_roundtrip_tolerates_case_and_spacing(s, case, gap):
    even, odd = render_words(s)
    assert parse_rendering(f" {case(even)}{gap}{case(odd)} ") == s


@pytest.mark.parametrize("text", ["9999", "123456", "65536", "", "aardvark", "adroitness aardvark", "aardvark zzz", "a b c"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_rendering(text)


def test_word_renderings_are_injective():
    seen = {render_words(s) for s in range(SAS_MAX + 1)}
    assert len(seen) == SAS_MAX + 1


def test_vocal_compare():
    m = SASObligation.MANDATORY
    assert vocal_compare(7, 7, m) is VerificationOutcome.MATCH
    assert vocal_compare(7, 8, m) is VerificationOutcome.MISMATCH
    assert vocal_compare(7, None, SASObligation.OPTIONAL) is VerificationOutcome.SKIPPED
    with pytest.raises(PolicyViolation):
        vocal_compare(7, None, m)


def _words(n, prefix):
    letters = "abcdefghijklmnop"
    return [prefix + letters[i >> 4] + letters[i & 15] for i in range(n)]


def test_word_list_validation(tmp_path):
    even, odd = _words(256, "e"), _words(256, "o")
    wl = WordList.from_text("\n".join(even + odd) + "\n")
    assert WordList.from_text(wl.to_text()) == wl
    bad_cases = [
        even[:255] + odd,  # 511 lines
        even[:255] + ["eaa"] + odd,  # duplicate
        even[:255] + [odd[0]] + odd,  # not disjoint
        ["Eaa"] + even[1:] + odd,  # uppercase
        ["e1"] + even[1:] + odd,  # not a word
    ]
    for lines in bad_cases:
        with pytest.raises(WordListError):
            WordList.from_text("\n".join(lines) + "\n")
    path = tmp_path / "words.txt"
    path.write_text("only\nthree\nwords\n")
    with pytest.raises(WordListError):
        WordList.load(path)
    with pytest.raises(WordListError):
        WordList.load(tmp_path / "missing.txt")
