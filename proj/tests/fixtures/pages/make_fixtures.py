# Regenerates report.pdf (deterministic: invariant mode pins dates and ids).
from reportlab.lib.pagesizes import letter
from reportlab.pdfgen import canvas

c = canvas.Canvas("report.pdf", pagesize=letter, invariant=1)
c.setTitle("Release notes")
c.drawString(72, 720, "Release notes for the archive fixture")
c.drawString(72, 700, "Sentinel phrase: PDF-SENTINEL-7731 (body text)")
c.showPage()
c.drawString(72, 720, "Second page mentions commit (44b5506) on Dec 7, 2023")
c.showPage()
c.save()
