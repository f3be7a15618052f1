"""
Output rendering: aligned text, csv and json with fixed float formatting.
"""

import io
import json

import pandas as pd
from tabulate import tabulate

FORMATS = ("text", "csv", "json")


def fmt_sig(value, digits=6):
    """Fixed significant-figure formatting used for published-table parity."""
    if value is None:
        return ""
    return f"{value:.{digits}g}"


def fmt_full(value):
    """Shortest round-trip representation of a float."""
    if value is None:
        return ""
    return repr(float(value))


def metadata_header(metadata):
    """'# key: value' lines, one per metadata entry, in insertion order."""
    lines = []
    for key, value in metadata.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        lines.append(f"# {key}: {value}\n")
    return "".join(lines)


def to_json(data):
    return json.dumps(data, indent=2) + "\n"


def frame_to_csv(frame):
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def render_breakdown(breakdown, report, params, state, fmt="text", full_precision=False):
    """
    Render one EnergyBreakdown with its trust flags.

    Args:
        breakdown (EnergyBreakdown): Energy terms
        report (ConvergenceReport): Ratios and flags
        params (PotentialParams): Parameters the energy refers to
        state (QuantumState): The state
        fmt (str): "text", "csv" or "json"
        full_precision (bool): Round-trip floats instead of 6 significant figures

    Returns:
        str: Rendered output
    """
    number = fmt_full if full_precision else fmt_sig
    if fmt == "json":
        return to_json({
            "state": state.label,
            "n": state.n,
            "l": state.l,
            "params": params.to_dict(),
            "breakdown": breakdown.to_dict(),
            "binding": breakdown.binding,
            "ratios": report.ratios,
            "trusted": report.trusted,
            "high_confidence": report.high_confidence,
        })
    rows = [
        ("e0", breakdown.e0),
        ("-b*delta", breakdown.const_shift),
        ("e1", breakdown.e1),
        ("e2", breakdown.e2),
        ("e3", breakdown.e3),
        ("total", breakdown.total),
        ("binding", breakdown.binding),
    ]
    if fmt == "csv":
        frame = pd.DataFrame([{
            "state": state.label, "a": fmt_full(params.a), "b": fmt_full(params.b), "delta": fmt_full(params.delta),
            **{name: number(value) for name, value in rows},
            "trusted": report.trusted, "high_confidence": report.high_confidence,
        }])
        return frame_to_csv(frame)
    table = [[name, number(value)] for name, value in rows]
    table.append(["trusted", str(report.trusted)])
    table.append(["high_confidence", str(report.high_confidence)])
    title = f"{state.label} (n={state.n}, l={state.l})  a={params.a:g} b={params.b:g} delta={params.delta:g}\n"
    return title + tabulate(table, headers=["term", "value"], tablefmt="grid") + "\n"


def render_table(result, fmt="text", full_precision=None):
    """
    Render a TableResult.

    Text shows the pivoted grid with 6 significant figures; csv lists one row per cell
    behind a '#' metadata header; json is the full-precision record.
    """
    if fmt == "json":
        return to_json(result.to_dict())
    number = fmt_full if full_precision else fmt_sig
    if fmt == "csv":
        frame = result.to_frame()
        for column in ("value", "oracle", "relative_gap"):
            if column in frame:
                frame[column] = frame[column].map(lambda v: "" if v is None or pd.isna(v) else number(v))
        frame["b"] = frame["b"].map(fmt_full)
        frame["delta"] = frame["delta"].map(fmt_full)
        frame["error"] = frame["error"].fillna("")
        return metadata_header(result.metadata) + frame_to_csv(frame)
    pivot = result.pivot()
    rows = [[state] + ["n/a" if pd.isna(v) else number(v) for v in pivot.loc[state]] for state in pivot.index]
    body = tabulate(rows, headers=["state"] + list(pivot.columns), tablefmt="grid", disable_numparse=True)
    notes = []
    for cell in result.cells:
        if cell.error:
            notes.append(f"  {cell.state} b={cell.b:g} delta={cell.delta:g}: {cell.error}")
        elif cell.trusted is False:
            ratios = ", ".join(f"{k}={v:.3g}" for k, v in cell.ratios.items())
            notes.append(f"  {cell.state} b={cell.b:g} delta={cell.delta:g}: untrusted ({ratios})")
    header = f"{result.spec.name} ({result.spec.sign_convention}, engine={result.spec.engine})\n"
    footer = ("Notes:\n" + "\n".join(notes) + "\n") if notes else ""
    return header + body + "\n" + footer


def render_records(records, columns, fmt="text", title=None):
    """Render a list of flat dict records (verification and oracle reports)."""
    if fmt == "json":
        return to_json(records)
    frame = pd.DataFrame(records, columns=columns)
    if fmt == "csv":
        return frame_to_csv(frame)
    rows = [[fmt_sig(v) if isinstance(v, float) else v for v in row] for row in frame.itertuples(index=False)]
    text = tabulate(rows, headers=columns, tablefmt="grid", disable_numparse=True) + "\n"
    return (title + "\n" + text) if title else text


def write_output(text, path=None):
    """Write to a file, or return the text for stdout when no path is given."""
    if path is None:
        return text
    with open(path, "w", newline="\n") as f:
        f.write(text)
    return None
