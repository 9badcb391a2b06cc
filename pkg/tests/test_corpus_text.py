import string

from hypothesis import given, settings
from hypothesis import strategies as st

from absnet.corpus.text import MAX_SENTENCES, MAX_WORDS_PER_SENTENCE, clean_text, concat_texts


def test_formula_element_becomes_single_token():
    text = clean_text("Let <formula>x^2 + y</formula> hold.")
    assert text.sentences == [["let", "formula", "hold"]]


def test_long_sentence_truncated_to_fifty_tokens():
    raw = " ".join(f"w{i}" for i in range(60)) + "."
    text = clean_text(raw)
    assert len(text.sentences) == 1
    assert len(text.sentences[0]) == MAX_WORDS_PER_SENTENCE
    assert text.sentences[0][0] == "w0"
    assert text.sentences[0][-1] == "w49"


def test_many_sentences_truncated_to_thirty():
    raw = " ".join(f"word{i}." for i in range(35))
    text = clean_text(raw)
    assert len(text.sentences) == MAX_SENTENCES


def test_empty_input_gives_empty_text():
    assert clean_text("").sentences == []
    assert clean_text("   \n\t ").sentences == []


def test_markup_and_entities_removed():
    text = clean_text("The <b>bold&amp;brave</b> move.")
    assert text.sentences == [["the", "bold", "brave", "move"]]


def test_control_characters_dropped():
    text = clean_text("alpha\x00beta gamma.")
    assert text.sentences == [["alpha", "beta", "gamma"]]


def test_abbreviation_guard_prevents_split():
    text = clean_text("See Fig. 3 for details. The rest follows.")
    assert len(text.sentences) == 2
    assert text.sentences[0] == ["see", "fig", "3", "for", "details"]


def test_sentence_split_on_terminators():
    text = clean_text("First one! Second one? Third one.")
    assert [s[0] for s in text.sentences] == ["first", "second", "third"]


def test_lowercasing():
    assert clean_text("MiXeD CaSe.").sentences == [["mixed", "case"]]


def test_self_closed_formula():
    assert clean_text("Equation <formula/> applies.").sentences == [
        ["equation", "formula", "applies"]
    ]


def test_concat_texts_reapplies_sentence_cap():
    a = clean_text(" ".join(f"a{i}." for i in range(20)))
    b = clean_text(" ".join(f"b{i}." for i in range(20)))
    combined = concat_texts(a, b)
    assert len(combined.sentences) == MAX_SENTENCES
    assert combined.sentences[0] == ["a0"]
    assert combined.sentences[-1] == ["b9"]


@settings(max_examples=300, deadline=None)
@given(
    st.text(
        alphabet=string.ascii_letters + string.digits + " .!?<>/&;\n\t-_,",
        max_size=4000,
    )
)
def test_caps_never_exceeded(raw):
    """Truncation caps hold for arbitrary noisy input."""
    text = clean_text(raw)
    assert len(text.sentences) <= MAX_SENTENCES
    for sentence in text.sentences:
        assert 1 <= len(sentence) <= MAX_WORDS_PER_SENTENCE
        for token in sentence:
            assert token == token.lower()
            assert "<" not in token and ">" not in token
