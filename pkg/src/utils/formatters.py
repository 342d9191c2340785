"""
Formatters module for the DHT cache library.
Renders benchmark and demo results as CSV, plain text or JSON.
"""
import csv
import io
import json
from pathlib import Path

from src.config import settings

CSV_COLUMNS = [
    'protocol', 'backend', 'participants', 'phase', 'distribution', 'ops', 'seconds',
    'ops_per_sec', 'misses', 'mismatches', 'invalidations', 'evictions',
]
STEP_COLUMNS = ['step', 'hits', 'misses', 'hit_rate']


def result_row(result, columns=None):
    """
    Flatten a result model (or dict) into a row restricted to columns.

    Args:
        result (BaseModel or dict): Result to flatten
        columns (list, optional): Columns to keep. Defaults to CSV_COLUMNS.

    Returns:
        dict: Column name to plain value
    """
    columns = columns or CSV_COLUMNS
    data = result.model_dump(mode='json') if hasattr(result, 'model_dump') else dict(result)
    return {column: data.get(column, '') for column in columns}


def format_output(results, output_format=None, columns=None):
    """
    Format results in the specified format.

    Args:
        results (list): Result models or dicts
        output_format (str, optional): Output format (text, json, csv). Defaults to settings.OUTPUT_FORMAT.
        columns (list, optional): Columns to include. Defaults to CSV_COLUMNS.

    Returns:
        str: Formatted output
    """
    output_format = (output_format or settings.OUTPUT_FORMAT).lower()
    rows = [result_row(r, columns) for r in results]

    if output_format == 'json':
        return format_json(rows)
    elif output_format == 'csv':
        return format_csv(rows, columns)
    else:
        return format_text(rows, columns)


def format_json(rows):
    return json.dumps(rows, indent=2, ensure_ascii=False)


def format_text(rows, columns=None):
    """
    Format rows as an aligned plain-text table.

    Args:
        rows (list): Row dicts
        columns (list, optional): Columns to include. Defaults to CSV_COLUMNS.

    Returns:
        str: Text table with a header line
    """
    columns = columns or CSV_COLUMNS
    cells = [[_text_cell(row.get(column, '')) for column in columns] for row in rows]
    widths = [max([len(column)] + [len(line[i]) for line in cells]) for i, column in enumerate(columns)]

    lines = ['  '.join(column.rjust(width) for column, width in zip(columns, widths))]
    for line in cells:
        lines.append('  '.join(cell.rjust(width) for cell, width in zip(line, widths)))
    return '\n'.join(lines)


def _text_cell(value):
    if isinstance(value, float):
        return f"{value:,.3f}" if value < 1000 else f"{value:,.0f}"
    return str(value)


def format_csv(rows, columns=None):
    """
    Format rows as CSV with RFC 4180 quoting and CRLF line endings.

    Args:
        rows (list): Row dicts
        columns (list, optional): Columns to include. Defaults to CSV_COLUMNS.

    Returns:
        str: Header followed by one line per row
    """
    columns = columns or CSV_COLUMNS
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, extrasaction='ignore', lineterminator='\r\n')
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def emit_csv(results, path, columns=None):
    """
    Write results to a CSV file: header plus one row per result.

    Args:
        results (list): BenchResult models (or rows)
        path (str or Path): Destination file
        columns (list, optional): Columns to include. Defaults to CSV_COLUMNS.
    """
    path = Path(path)
    if path.parent != Path('.'):
        path.parent.mkdir(parents=True, exist_ok=True)
    rows = [result_row(r, columns) for r in results]
    with path.open('w', newline='', encoding='utf-8') as f:
        f.write(format_csv(rows, columns))
