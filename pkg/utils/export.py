import io
import json
from typing import Any, Dict, List, Union

import pandas as pd
from openpyxl.styles import Font, PatternFill

BENCH_COLUMNS = ["k", "n", "cells", "bits", "bound", "verdict", "ratio"]


def _frame(data: Union[pd.DataFrame, List[Dict]]) -> pd.DataFrame:
    return pd.DataFrame(data) if isinstance(data, list) else data.copy()


def export_to_csv(data: Union[pd.DataFrame, List[Dict]]) -> str:
    """
    Bench rows as CSV, columns in the fixed bench order

    Args:
        data: DataFrame or list of row dictionaries

    Returns:
        CSV text
    """
    df = _frame(data)
    ordered = [c for c in BENCH_COLUMNS if c in df.columns]
    df = df[ordered + [c for c in df.columns if c not in ordered]]
    if "ratio" in df.columns:
        df["ratio"] = df["ratio"].round(4)
    return df.to_csv(index=False)


def export_to_excel(data: Union[pd.DataFrame, List[Dict]], sheet_name: str = "Bench") -> bytes:
    """
    Bench rows as an Excel workbook with styled headers

    Args:
        data: DataFrame or list of row dictionaries
        sheet_name: worksheet title

    Returns:
        Excel file as bytes
    """
    df = _frame(data)
    df.columns = [str(col).replace("_", " ").title() for col in df.columns]

    buffer = io.BytesIO()
    with pd.ExcelWriter(buffer, engine="openpyxl") as writer:
        df.to_excel(writer, sheet_name=sheet_name, index=False)
        worksheet = writer.sheets[sheet_name]

        header_font = Font(bold=True, color="FFFFFF")
        header_fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
        for cell in worksheet[1]:
            cell.font = header_font
            cell.fill = header_fill

        for column in worksheet.columns:
            longest = max(len(str(cell.value)) for cell in column if cell.value is not None)
            worksheet.column_dimensions[column[0].column_letter].width = min(longest + 2, 50)

        if "Ratio" in df.columns:
            ratio_col = df.columns.get_loc("Ratio") + 1
            for row in range(2, len(df) + 2):
                worksheet.cell(row=row, column=ratio_col).number_format = "0.0000"

        if "Verdict" in df.columns:
            verdict_col = df.columns.get_loc("Verdict") + 1
            for row in range(2, len(df) + 2):
                cell = worksheet.cell(row=row, column=verdict_col)
                if cell.value != "ok":
                    cell.font = Font(bold=True, color="C00000")

    buffer.seek(0)
    return buffer.getvalue()


def export_to_json(data: Union[pd.DataFrame, List[Dict]]) -> str:
    if isinstance(data, pd.DataFrame):
        return data.to_json(orient="records", indent=2)
    return json.dumps(data, indent=2)


def create_bench_report(rows: Union[pd.DataFrame, List[Dict]], sweep: str, params: Dict[str, Any] = None) -> Dict[str, Any]:
    """
    Summary of a bench sweep: how many settings passed and how far bits are
    from their bound

    Args:
        rows: bench rows
        sweep: "sperner" or "brouwer"
        params: sweep parameters echoed into the report
    """
    df = _frame(rows)
    if df.empty:
        return {"summary": {"sweep": sweep, "settings": 0}, "data": [], "params": params or {}}

    summary = {
        "sweep": sweep,
        "settings": len(df),
        "passed": int((df["verdict"] == "ok").sum()),
        "max_bits": int(df["bits"].max()),
        "max_ratio": round(float(df["ratio"].max()), 4),
        "bits_within_bound": bool((df["bits"] <= df["bound"]).all()),
    }
    return {"summary": summary, "data": json.loads(df.to_json(orient="records")), "params": params or {}}
