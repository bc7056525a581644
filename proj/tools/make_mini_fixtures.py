#!/usr/bin/env python3
"""Regenerates the binary document fixtures of the versa-mini benchmark."""
import sys
from pathlib import Path

ROOT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "benchmarks/versa-mini/tasks"


def make_pdf(path):
    from reportlab.lib.pagesizes import letter
    from reportlab.pdfgen import canvas

    path.parent.mkdir(parents=True, exist_ok=True)
    c = canvas.Canvas(str(path), pagesize=letter, invariant=1)
    c.setFont("Helvetica", 16)
    c.drawString(72, 720, "Internal audit summary")
    c.setFont("Helvetica", 11)
    c.drawString(72, 690, "Scope: supplier invoices, fiscal year 2024.")
    c.drawString(72, 670, "Invoices audited: 500")
    c.drawString(72, 650, "Exceptions found: 12")
    c.showPage()
    c.save()


def make_xlsx(path):
    import datetime
    from openpyxl import Workbook

    path.parent.mkdir(parents=True, exist_ok=True)
    wb = Workbook()
    ws = wb.active
    ws.title = "Inventory"
    for row in [["item", "count"], ["teapots", 7], ["mugs", 25], ["strainers", 11]]:
        ws.append(row)
    prices = wb.create_sheet("Prices")
    for row in [["item", "price"], ["teapots", 24.9], ["mugs", 9], ["strainers", 4.5]]:
        prices.append(row)
    fixed = datetime.datetime(2025, 1, 1)
    wb.properties.created = fixed
    wb.properties.modified = fixed
    wb.save(str(path))


def main():
    make_pdf(ROOT / "file-pdf-audit/files/audit.pdf")
    make_xlsx(ROOT / "file-xlsx-total/files/inventory.xlsx")


if __name__ == "__main__":
    main()
