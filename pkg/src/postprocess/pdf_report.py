from pathlib import Path

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle
from reportlab.lib.units import inch
from reportlab.platypus import Paragraph, Preformatted, SimpleDocTemplate, Spacer, Table, TableStyle

from .report_writer import PosteriorReport

TABLE_STYLE = TableStyle([
    ("FONTNAME", (0, 0), (-1, -1), "Courier"),
    ("FONTSIZE", (0, 0), (-1, -1), 8),
    ("FONTNAME", (0, 0), (-1, 0), "Courier-Bold"),
    ("LINEBELOW", (0, 0), (-1, 0), 0.5, colors.black),
    ("ALIGN", (1, 1), (-1, -1), "RIGHT"),
])


def _fmt(value) -> str:
    return "" if value is None else f"{value:.4f}"


def pdf_report(report: PosteriorReport, output_path: Path, title: str = "Profile regression summary") -> Path:
    """
    Render fixed effects, cluster sizes, cluster effects and contrasts as a PDF.

    :param report: Post-processing results.
    :param output_path: Where to write the PDF.
    :param title: Document title.
    :return: Path to the generated PDF file.
    """
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    doc = SimpleDocTemplate(str(output_path), pagesize=A4,
                            leftMargin=0.5 * inch, rightMargin=0.5 * inch, topMargin=1 * inch, bottomMargin=1 * inch)
    elements = []

    title_style = ParagraphStyle(name="Title", fontName="Helvetica-Bold", fontSize=18, alignment=1,
                                 textColor=colors.darkblue)
    heading_style = ParagraphStyle(name="Heading", fontName="Helvetica-Bold", fontSize=12, spaceAfter=6)
    content_style = ParagraphStyle(name="Content", fontName="Courier", fontSize=9, leading=11)

    elements.append(Paragraph(title, title_style))
    elements.append(Spacer(1, 24))

    clustering = report.clustering
    elements.append(Paragraph(f"Representative clustering (k = {clustering.k}, {clustering.k_rule})", heading_style))
    rows = [["cluster", "size", "medoid"]]
    rows += [[str(c + 1), str(int(clustering.sizes[c])), str(int(clustering.medoids[c]) + 1)]
             for c in range(clustering.k)]
    elements.append(Table(rows, style=TABLE_STYLE, hAlign="LEFT"))
    elements.append(Spacer(1, 12))

    elements.append(Paragraph("Fixed effects", heading_style))
    rows = [["parameter", "mean", "lower", "upper"]]
    rows += [[row.name, _fmt(row.mean), _fmt(row.lower), _fmt(row.upper)] for row in report.fixed_effects]
    elements.append(Table(rows, style=TABLE_STYLE, hAlign="LEFT"))
    elements.append(Spacer(1, 12))

    for name, summary in report.summaries.items():
        if name not in ("effect", "gamma"):
            continue
        elements.append(Paragraph(f"Cluster {name} (level {summary.level:g})", heading_style))
        rows = [["cluster", "column", "mean", "lower", "upper"]]
        for cluster in summary.reported():
            for j, column in enumerate(summary.columns):
                rows.append([str(cluster.label + 1), column, _fmt(cluster.mean[j]),
                             "" if cluster.lower is None else _fmt(cluster.lower[j]),
                             "" if cluster.upper is None else _fmt(cluster.upper[j])])
        elements.append(Table(rows, style=TABLE_STYLE, hAlign="LEFT"))
        if summary.excluded:
            excluded = ", ".join(str(c + 1) for c in summary.excluded)
            elements.append(Preformatted(f"Excluded (below minimum size): {excluded}", content_style))
        elements.append(Spacer(1, 12))

    elements.append(Paragraph(f"Contrasts against cluster {report.reference + 1}", heading_style))
    rows = [["cluster", "column", "mean", "lower", "upper"]]
    rows += [[str(row.cluster + 1), row.column, _fmt(row.mean), _fmt(row.lower), _fmt(row.upper)]
             for row in report.contrasts]
    elements.append(Table(rows, style=TABLE_STYLE, hAlign="LEFT"))

    doc.build(elements)
    return output_path
