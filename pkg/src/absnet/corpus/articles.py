"""XML article ingestion: parsing into documents and pair extraction.

The default schema (used by the bundled fixtures) is:

    <article id="...">
      <journal>...</journal>
      <body>
        <p id="...">paragraph text, possibly with <formula>...</formula></p>
      </body>
      <figures>
        <figure id="...">
          <caption>...</caption>
          <image encoding="base64">...PNG/JPEG bytes...</image>
        </figure>
      </figures>
    </article>

Element names are configurable through `XmlSchema`. A paragraph
references a figure when it mentions the figure's ordinal ("Figure 3",
"Fig. 3", "figure 3"); ordinals follow document order starting at 1.
"""

from __future__ import annotations

import base64
import binascii
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from ..errors import MalformedXml, UndecodableImage
from .images import DEFAULT_IMAGE_SIZE, preprocess_image
from .text import clean_text, concat_texts
from .types import ArticleDocument, Figure, ImageTextPair, Paragraph, Split

_FIGURE_MENTION = re.compile(r"\bfig(?:ure|s)?\.?\s*(\d+)", re.IGNORECASE)


@dataclass(frozen=True)
class XmlSchema:
    article_tag: str = "article"
    journal_tag: str = "journal"
    paragraph_tag: str = "p"
    figure_tag: str = "figure"
    caption_tag: str = "caption"
    image_tag: str = "image"
    id_attribute: str = "id"


def _inner_markup(elem: ET.Element) -> str:
    """Text content of `elem` with child elements kept as markup."""
    parts = [elem.text or ""]
    for child in elem:
        parts.append(ET.tostring(child, encoding="unicode"))
    return "".join(parts)


def parse_article(xml_bytes: bytes, schema: XmlSchema | None = None) -> ArticleDocument:
    """Parse one XML article into an `ArticleDocument`.

    Figures without a decodable image payload are dropped with a warning
    record on the returned document rather than failing the article.
    """
    schema = schema or XmlSchema()
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise MalformedXml(f"unparseable article XML: {exc}") from exc
    if root.tag != schema.article_tag:
        raise MalformedXml(
            f"expected root element <{schema.article_tag}>, found <{root.tag}>"
        )

    article_id = root.get(schema.id_attribute, "") or "article"
    journal_elem = root.find(f".//{schema.journal_tag}")
    journal = (journal_elem.text or "").strip() if journal_elem is not None else ""

    warnings: list[str] = []
    paragraphs: list[Paragraph] = []
    for i, p in enumerate(root.iter(schema.paragraph_tag), start=1):
        pid = p.get(schema.id_attribute) or f"p{i}"
        paragraphs.append(Paragraph(paragraph_id=pid, text=_inner_markup(p)))

    figures: list[Figure] = []
    seen_ids: set[str] = set()
    ordinal = 0
    for fig in root.iter(schema.figure_tag):
        ordinal += 1
        fid = fig.get(schema.id_attribute) or f"fig{ordinal}"
        if fid in seen_ids:
            raise MalformedXml(f"duplicate figure id {fid!r} in article {article_id!r}")
        seen_ids.add(fid)
        image_elem = fig.find(schema.image_tag)
        payload = (image_elem.text or "") if image_elem is not None else ""
        if not payload.strip():
            warnings.append(f"figure {fid}: missing image payload, figure skipped")
            continue
        try:
            image_bytes = base64.b64decode(payload, validate=True)
        except (binascii.Error, ValueError):
            warnings.append(f"figure {fid}: undecodable base64 payload, figure skipped")
            continue
        caption_elem = fig.find(schema.caption_tag)
        caption = _inner_markup(caption_elem) if caption_elem is not None else ""
        figures.append(
            Figure(figure_id=fid, ordinal=ordinal, image_bytes=image_bytes, caption=caption)
        )

    ordinal_to_figure = {f.ordinal: f for f in figures}
    for para in paragraphs:
        for match in _FIGURE_MENTION.finditer(para.text):
            fig = ordinal_to_figure.get(int(match.group(1)))
            if fig is not None and para.paragraph_id not in fig.referencing_paragraphs:
                fig.referencing_paragraphs.append(para.paragraph_id)

    return ArticleDocument(
        article_id=article_id,
        journal=journal,
        paragraphs=paragraphs,
        figures=figures,
        warnings=warnings,
    )


def extract_pairs(
    doc: ArticleDocument, size: int = DEFAULT_IMAGE_SIZE
) -> list[ImageTextPair]:
    """Build unlabeled image-text pairs from a parsed article.

    One pair per (figure, referencing paragraph); a figure nobody
    references yields a single caption-only pair. Figures whose image
    bytes cannot be decoded are skipped with a warning on `doc`.
    """
    paragraphs_by_id = {p.paragraph_id: p for p in doc.paragraphs}
    pairs: list[ImageTextPair] = []
    for fig in doc.figures:
        try:
            image = preprocess_image(fig.image_bytes, size=size)
        except UndecodableImage:
            doc.warnings.append(
                f"figure {fig.figure_id}: undecodable image bytes, pairs skipped"
            )
            continue
        caption_text = clean_text(fig.caption)
        if fig.referencing_paragraphs:
            for pid in fig.referencing_paragraphs:
                text = concat_texts(caption_text, clean_text(paragraphs_by_id[pid].text))
                pairs.append(
                    ImageTextPair(
                        pair_id=f"{doc.article_id}:{fig.figure_id}:{pid}",
                        image=image,
                        text=text,
                        source=doc.journal or "xml",
                        split=Split.UNSPLIT,
                    )
                )
        else:
            pairs.append(
                ImageTextPair(
                    pair_id=f"{doc.article_id}:{fig.figure_id}:caption",
                    image=image,
                    text=caption_text,
                    source=doc.journal or "xml",
                    split=Split.UNSPLIT,
                )
            )
    return pairs
