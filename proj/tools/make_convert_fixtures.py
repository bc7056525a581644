#!/usr/bin/env python3
"""Regenerates the document fixtures used by the converter tests.

Fixtures come from third-party writers (reportlab, openpyxl, python-docx,
python-pptx) so the C++ readers are checked against producers they do not
share code with. Cell matrices are written next to the workbook as JSON.
"""
import datetime
import json
import sys
from pathlib import Path

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests/fixtures/convert"

SHEETS = {
    "Inventory": [["item", "count"], ["apples", 12], ["pears", 7]],
    "Prices": [["item", "price"], ["apples", 0.5], ["pears", 1.25]],
}


def make_pdf():
    from reportlab.lib.pagesizes import letter
    from reportlab.pdfgen import canvas

    path = OUT / "marker.pdf"
    c = canvas.Canvas(str(path), pagesize=letter, invariant=1)
    c.setFont("Helvetica", 14)
    c.drawString(72, 720, "Quarterly summary")
    c.setFont("Helvetica", 11)
    c.drawString(72, 690, "Versa test marker 7319")
    c.drawString(72, 670, "Revenue grew in every region.")
    c.showPage()
    c.setFont("Times-Roman", 12)
    c.drawString(72, 720, "Second page text")
    c.showPage()
    c.save()

    # Compressed streams and an embedded TrueType subset (ToUnicode map).
    import os
    import reportlab
    from reportlab.pdfbase import pdfmetrics
    from reportlab.pdfbase.ttfonts import TTFont

    pdfmetrics.registerFont(TTFont("Vera", os.path.join(os.path.dirname(reportlab.__file__), "fonts", "Vera.ttf")))
    c = canvas.Canvas(str(OUT / "marker_compressed.pdf"), pagesize=letter, invariant=1, pageCompression=1)
    c.setFont("Vera", 12)
    c.drawString(72, 720, "Versa test marker 7319")
    c.drawString(72, 700, "Caf\u00e9 na\u00efve \u2013 done")
    c.showPage()
    c.save()


def make_xlsx():
    from openpyxl import Workbook

    wb = Workbook()
    first = True
    for name, rows in SHEETS.items():
        ws = wb.active if first else wb.create_sheet()
        ws.title = name
        first = False
        for row in rows:
            ws.append(row)
    wb.save(OUT / "two_sheets.xlsx")
    expected = {name: [[str(v) for v in row] for row in rows] for name, rows in SHEETS.items()}
    (OUT / "two_sheets.cells.json").write_text(json.dumps(expected, indent=2) + "\n")


def make_docx():
    import docx

    d = docx.Document()
    d.add_heading("Field report", level=1)
    d.add_paragraph("The survey covered three sites.")
    d.add_heading("Findings", level=2)
    d.add_paragraph("Soil samples", style="List Bullet")
    d.add_paragraph("Water samples", style="List Bullet")
    t = d.add_table(rows=2, cols=2)
    t.cell(0, 0).text = "site"
    t.cell(0, 1).text = "ph"
    t.cell(1, 0).text = "north"
    t.cell(1, 1).text = "6.8"
    d.core_properties.created = datetime.datetime(2024, 1, 1)
    d.save(OUT / "report.docx")


def make_pptx():
    from pptx import Presentation
    from pptx.util import Inches

    p = Presentation()
    s = p.slides.add_slide(p.slide_layouts[1])
    s.shapes.title.text = "Launch plan"
    s.placeholders[1].text = "Ship the beta in May"
    s2 = p.slides.add_slide(p.slide_layouts[5])
    s2.shapes.title.text = "Budget"
    rows = [["team", "amount"], ["design", "40"], ["build", "110"]]
    shape = s2.shapes.add_table(3, 2, Inches(1), Inches(2), Inches(4), Inches(2))
    for r, row in enumerate(rows):
        for c, v in enumerate(row):
            shape.table.cell(r, c).text = v
    p.save(OUT / "deck.pptx")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    make_pdf()
    make_xlsx()
    make_docx()
    make_pptx()
    (OUT / "notes.md").write_bytes("# Notes\n\nTabs\there, unicode: café, trailing spaces   \n\nno final newline".encode())
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
