import base64
import io

import numpy as np
import pytest
from PIL import Image

from absnet.corpus import extract_pairs, parse_article
from absnet.errors import MalformedXml

FIXTURES = ("article_a.xml", "article_b.xml", "article_c.xml")
# Hand-counted from the committed fixtures: one pair per (figure,
# referencing paragraph) plus one caption-only pair per orphan figure.
EXPECTED_PAIRS = {"article_a.xml": 3, "article_b.xml": 4, "article_c.xml": 4}


def _tiny_png_b64() -> str:
    buf = io.BytesIO()
    Image.new("RGB", (8, 8), (10, 20, 30)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def test_fixture_a_reference_resolution(fixture_dir):
    doc = parse_article((fixture_dir / "article_a.xml").read_bytes())
    assert doc.article_id == "fix-a"
    assert doc.journal == "AAI"
    assert len(doc.paragraphs) == 5
    refs = {f.figure_id: f.referencing_paragraphs for f in doc.figures}
    assert refs == {"f1": ["p2", "p4"], "f2": ["p5"]}


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_pair_counts(fixture_dir, name):
    doc = parse_article((fixture_dir / name).read_bytes())
    pairs = extract_pairs(doc, size=16)
    assert len(pairs) == EXPECTED_PAIRS[name]


def test_fixture_corpus_total(fixture_dir):
    total = 0
    for name in FIXTURES:
        doc = parse_article((fixture_dir / name).read_bytes())
        total += len(extract_pairs(doc, size=16))
    assert total == 11


def test_golden_pair_tokens(fixture_dir):
    """Caption sentences precede paragraph sentences, token by token."""
    doc = parse_article((fixture_dir / "article_a.xml").read_bytes())
    pairs = extract_pairs(doc, size=16)
    golden = next(p for p in pairs if p.pair_id == "fix-a:f1:p2")
    assert golden.text.sentences == [
        ["overview", "of", "the", "proposed", "system", "architecture"],
        ["as", "shown", "in", "figure", "1", "the", "model", "encodes", "images"],
        ["it", "uses", "formula", "internally"],
    ]
    assert golden.image.pixels.shape == (16, 16, 3)
    assert golden.source == "AAI"


def test_pair_count_formula(fixture_dir):
    """Pair count equals sum over figures of max(1, referencing paragraphs)."""
    for name in FIXTURES:
        doc = parse_article((fixture_dir / name).read_bytes())
        expected = sum(max(1, len(f.referencing_paragraphs)) for f in doc.figures)
        assert len(extract_pairs(doc, size=16)) == expected


def test_zero_figures_gives_empty_figure_list():
    xml = b"<article id='x'><journal>AM</journal><body><p id='p1'>Text.</p></body></article>"
    doc = parse_article(xml)
    assert doc.figures == []
    assert extract_pairs(doc, size=16) == []


def test_truncated_stream_raises_malformed():
    with pytest.raises(MalformedXml):
        parse_article(b"<article id='x'><body><p id='p1'>unterminated")


def test_not_xml_raises_malformed():
    with pytest.raises(MalformedXml):
        parse_article(b"\x00\x01binary garbage")


def test_wrong_root_raises_malformed():
    with pytest.raises(MalformedXml):
        parse_article(b"<paper><p>hi</p></paper>")


def test_duplicate_figure_ids_rejected():
    xml = (
        "<article id='x'><figures>"
        f"<figure id='f1'><caption>a.</caption><image>{_tiny_png_b64()}</image></figure>"
        f"<figure id='f1'><caption>b.</caption><image>{_tiny_png_b64()}</image></figure>"
        "</figures></article>"
    ).encode()
    with pytest.raises(MalformedXml):
        parse_article(xml)


def test_missing_image_payload_skips_figure_with_warning():
    xml = (
        "<article id='x'><body><p id='p1'>Figure 1 and Figure 2 here.</p></body><figures>"
        "<figure id='f1'><caption>no payload.</caption></figure>"
        f"<figure id='f2'><caption>ok.</caption><image>{_tiny_png_b64()}</image></figure>"
        "</figures></article>"
    ).encode()
    doc = parse_article(xml)
    assert [f.figure_id for f in doc.figures] == ["f2"]
    assert any("f1" in w for w in doc.warnings)
    # The surviving figure keeps its ordinal (2), so "Figure 2" resolves.
    assert doc.figures[0].referencing_paragraphs == ["p1"]


def test_undecodable_image_bytes_skip_pairs_with_warning():
    bad = base64.b64encode(b"not an image").decode("ascii")
    xml = (
        "<article id='x'><body><p id='p1'>See Figure 1.</p></body><figures>"
        f"<figure id='f1'><caption>bad.</caption><image>{bad}</image></figure>"
        "</figures></article>"
    ).encode()
    doc = parse_article(xml)
    pairs = extract_pairs(doc, size=16)
    assert pairs == []
    assert any("f1" in w for w in doc.warnings)


def test_caption_only_pair_for_unreferenced_figure(fixture_dir):
    doc = parse_article((fixture_dir / "article_b.xml").read_bytes())
    pairs = extract_pairs(doc, size=16)
    caption_only = [p for p in pairs if p.pair_id.endswith(":caption")]
    assert len(caption_only) == 1
    assert caption_only[0].pair_id == "fix-b:f2:caption"
    assert caption_only[0].text.sentences == [
        ["an", "unreferenced", "auxiliary", "illustration"]
    ]


def test_image_values_in_range(fixture_dir):
    doc = parse_article((fixture_dir / "article_c.xml").read_bytes())
    for pair in extract_pairs(doc, size=16):
        assert np.all(pair.image.pixels >= -1.0)
        assert np.all(pair.image.pixels <= 1.0)
