"""
App/metrics/excel_export.py

metrics.xlsx: one workbook summarizing an evaluation run.

Sheets:
    1. Overview           macro block per column + run settings
    2. Per-Class          precision / recall / F1 / AUC per class and column
    3. Confusion (...)    one sheet per column (flat baseline columns included)
    4. Stages             binary stage metrics
    5. Uncertainty        lowest/highest-entropy samples per class
"""
from openpyxl import Workbook
from openpyxl.styles import Alignment, Font, PatternFill
from openpyxl.utils import get_column_letter

from App.exceptions import DataIOError

COLUMN_TITLES = {
    'without_uq': 'Without UQ',
    'with_uq': 'With UQ',
    'flat_without_uq': 'Flat',
    'flat_with_uq': 'Flat + UQ',
}


def _pct(value):
    return None if value is None else round(100.0 * value, 2)


def _header(ws, headers, header_fill, header_font, header_align, row=1):
    for col_num, header in enumerate(headers, 1):
        cell = ws.cell(row=row, column=col_num, value=header)
        cell.fill = header_fill
        cell.font = header_font
        cell.alignment = header_align


def export_metrics_workbook(reports, path, settings=None):
    """
    Args:
        reports: {'without_uq': MetricsReport, 'with_uq': MetricsReport}, optionally
            followed by 'flat_without_uq' and 'flat_with_uq'
        path: destination .xlsx
        settings: run settings shown on the Overview sheet
    """
    wb = Workbook()

    header_fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
    header_font = Font(bold=True, color="FFFFFF")
    header_align = Alignment(horizontal="center", vertical="center")

    _create_overview_sheet(wb, reports, settings or {}, header_fill, header_font, header_align)
    _create_per_class_sheet(wb, reports, header_fill, header_font, header_align)
    for key, report in reports.items():
        _create_confusion_sheet(wb, key, report, header_fill, header_font, header_align)
    _create_stages_sheet(wb, reports, header_fill, header_font, header_align)
    _create_uncertainty_sheet(wb, reports.get('with_uq'), header_fill, header_font, header_align)

    try:
        wb.save(path)
    except OSError as e:
        raise DataIOError(f"cannot write workbook {path}: {e}") from e
    return wb


def _create_overview_sheet(wb, reports, settings, header_fill, header_font, header_align):
    ws = wb.active
    ws.title = "Overview"

    ws['A1'] = "Subtype Classification Report"
    ws['A1'].font = Font(bold=True, size=14)

    headers = ["Metric (%)"] + [COLUMN_TITLES.get(k, k) for k in reports]
    _header(ws, headers, header_fill, header_font, header_align, row=3)

    row = 4
    for label, getter in [
        ("Accuracy (overall)", lambda r: r.accuracy),
        ("Precision (macro)", lambda r: r.macro['precision']),
        ("Recall (macro)", lambda r: r.macro['recall']),
        ("F1 (macro)", lambda r: r.macro['f1']),
        ("AUC (macro)", lambda r: r.macro['auc']),
    ]:
        ws.cell(row=row, column=1, value=label)
        for col, report in enumerate(reports.values(), 2):
            ws.cell(row=row, column=col, value=_pct(getter(report)))
        row += 1

    row += 1
    ws[f'A{row}'] = "Run Settings:"
    ws[f'A{row}'].font = Font(bold=True, color="0066CC")
    row += 1
    for key, value in settings.items():
        ws[f'A{row}'] = key
        ws[f'A{row}'].font = Font(bold=True)
        ws[f'B{row}'] = str(value)
        row += 1

    ws.column_dimensions['A'].width = 28
    for col in range(2, len(headers) + 1):
        ws.column_dimensions[get_column_letter(col)].width = 16


def _create_per_class_sheet(wb, reports, header_fill, header_font, header_align):
    ws = wb.create_sheet("Per-Class")

    headers = ["Column", "Class", "Precision (%)", "Recall (%)", "F1 (%)", "AUC", "Support"]
    _header(ws, headers, header_fill, header_font, header_align)

    row_num = 2
    for key, report in reports.items():
        for name in list(report.classes) + ['Averaged']:
            values = report.macro if name == 'Averaged' else report.per_class[name]
            ws.cell(row=row_num, column=1, value=COLUMN_TITLES.get(key, key))
            ws.cell(row=row_num, column=2, value=name)
            ws.cell(row=row_num, column=3, value=_pct(values['precision']))
            ws.cell(row=row_num, column=4, value=_pct(values['recall']))
            ws.cell(row=row_num, column=5, value=_pct(values['f1']))
            auc_cell = ws.cell(row=row_num, column=6, value=values['auc'])
            auc_cell.number_format = '0.00'
            ws.cell(row=row_num, column=7, value=values.get('support', report.n_samples))
            if name == 'Averaged':
                for col in range(1, 8):
                    ws.cell(row=row_num, column=col).font = Font(bold=True)
            row_num += 1

    ws.column_dimensions['A'].width = 14
    ws.column_dimensions['B'].width = 12
    for col in range(3, 8):
        ws.column_dimensions[get_column_letter(col)].width = 14


def _create_confusion_sheet(wb, key, report, header_fill, header_font, header_align):
    ws = wb.create_sheet(f"Confusion ({COLUMN_TITLES.get(key, key)})")

    classes = list(report.classes)
    _header(ws, ["True \\ Predicted"] + classes, header_fill, header_font, header_align)
    for i, name in enumerate(classes):
        ws.cell(row=i + 2, column=1, value=name).font = Font(bold=True)
        for j in range(len(classes)):
            ws.cell(row=i + 2, column=j + 2, value=int(report.confusion.counts[i, j]))

    ws.column_dimensions['A'].width = 18
    for col in range(2, len(classes) + 2):
        ws.column_dimensions[get_column_letter(col)].width = 12


def _create_stages_sheet(wb, reports, header_fill, header_font, header_align):
    ws = wb.create_sheet("Stages")

    headers = ["Column", "Stage", "Accuracy (%)", "Precision (%)", "Recall (%)", "F1 (%)", "AUC", "Samples"]
    _header(ws, headers, header_fill, header_font, header_align)

    row_num = 2
    for key, report in reports.items():
        for stage, sub in report.stages.items():
            ws.cell(row=row_num, column=1, value=COLUMN_TITLES.get(key, key))
            ws.cell(row=row_num, column=2, value=f"{stage} ({' vs '.join(sub.classes)})")
            ws.cell(row=row_num, column=3, value=_pct(sub.accuracy))
            ws.cell(row=row_num, column=4, value=_pct(sub.macro['precision']))
            ws.cell(row=row_num, column=5, value=_pct(sub.macro['recall']))
            ws.cell(row=row_num, column=6, value=_pct(sub.macro['f1']))
            ws.cell(row=row_num, column=7, value=sub.macro['auc']).number_format = '0.00'
            ws.cell(row=row_num, column=8, value=sub.n_samples)
            row_num += 1

    ws.column_dimensions['A'].width = 14
    ws.column_dimensions['B'].width = 34
    for col in range(3, 9):
        ws.column_dimensions[get_column_letter(col)].width = 14


def _create_uncertainty_sheet(wb, report, header_fill, header_font, header_align):
    ws = wb.create_sheet("Uncertainty")

    headers = ["Class", "Kind", "Image", "Patient", "Stage", "Stage Entropy", "Composed Entropy", "Predicted"]
    _header(ws, headers, header_fill, header_font, header_align)

    exemplars = (report.uncertainty if report is not None else None) or {}
    row_num = 2
    for name, entry in exemplars.items():
        if entry is None:
            continue
        for kind in ('lowest', 'highest'):
            e = entry[kind]
            ws.cell(row=row_num, column=1, value=name)
            ws.cell(row=row_num, column=2, value=kind)
            ws.cell(row=row_num, column=3, value=e['image'])
            ws.cell(row=row_num, column=4, value=e['patient_id'])
            ws.cell(row=row_num, column=5, value=e['stage'])
            ws.cell(row=row_num, column=6, value=e['stage_entropy']).number_format = '0.0000'
            ws.cell(row=row_num, column=7, value=e['composed_entropy']).number_format = '0.0000'
            ws.cell(row=row_num, column=8, value=e['predicted'])
            row_num += 1

    ws.column_dimensions['A'].width = 12
    ws.column_dimensions['B'].width = 10
    ws.column_dimensions['C'].width = 40
    for col in range(4, 9):
        ws.column_dimensions[get_column_letter(col)].width = 16
