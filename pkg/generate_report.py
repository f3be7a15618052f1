#!/usr/bin/env python3
"""
Script to generate a markdown report from saved energy tables.
"""

import argparse
import os

from dotenv import load_dotenv
from tabulate import tabulate

from src.utils.formatting import fmt_sig
from src.utils.tables import TableResult

load_dotenv()


def load_all_results(results_dir=None):
    """
    Load all saved table files from the results directory.

    Args:
        results_dir (str, optional): Directory to scan (default: HELLMANN_RESULTS_DIR or results)

    Returns:
        dict: Table name to TableResult
    """
    results_dir = results_dir or os.getenv("HELLMANN_RESULTS_DIR", "results")
    if not os.path.exists(results_dir):
        print(f"Results directory '{results_dir}' not found.")
        return {}

    all_results = {}
    for filename in sorted(os.listdir(results_dir)):
        if not filename.endswith(".json"):
            continue
        path = os.path.join(results_dir, filename)
        try:
            result = TableResult.load(path)
            all_results[result.spec.name] = result
            print(f"Loaded table {result.spec.name} from {path}")
        except (OSError, ValueError, KeyError, TypeError) as e:
            print(f"Error loading {filename}: {e}")
    return all_results


def table_section(result):
    """Markdown lines for one table: grid, metadata and diagnostics."""
    spec = result.spec
    lines = [f"## {spec.name}", ""]
    caption = "Binding energies -E" if spec.sign_convention == "binding" else "Energies E"
    lines.append(f"{caption} for a = {spec.a:g}, engine = {spec.engine}.")
    lines.append("")

    pivot = result.pivot()
    rows = [[state] + ["n/a" if value != value else fmt_sig(value) for value in pivot.loc[state]] for state in pivot.index]
    lines.append(tabulate(rows, headers=["state"] + list(pivot.columns), tablefmt="pipe", disable_numparse=True))
    lines.append("")

    metadata = result.metadata
    lines.append(f"Config hash: `{metadata.get('config_hash', 'unknown')}`, version {metadata.get('version', 'unknown')}.")
    lines.append("")

    if result.untrusted:
        lines.append("### Untrusted cells")
        lines.append("")
        rows = []
        for cell in result.untrusted:
            worst = max(cell.ratios, key=cell.ratios.get)
            rows.append([cell.state, f"{cell.b:g}", f"{cell.delta:g}", worst, f"{cell.ratios[worst]:.3g}"])
        lines.append(tabulate(rows, headers=["state", "b", "delta", "largest ratio", "value"], tablefmt="pipe"))
        lines.append("")

    if result.failed:
        lines.append("### Failed cells")
        lines.append("")
        for cell in result.failed:
            lines.append(f"- {cell.state}, b = {cell.b:g}, delta = {cell.delta:g}: {cell.error}")
        lines.append("")

    gaps = [cell for cell in result.cells if cell.relative_gap is not None]
    if gaps:
        worst = max(gaps, key=lambda cell: cell.relative_gap)
        lines.append(
            f"Largest perturbation-oracle gap: {worst.relative_gap:.3g} relative "
            f"({worst.state}, b = {worst.b:g}, delta = {worst.delta:g})."
        )
        lines.append("")
    return lines


def generate_report(all_results, output_file=None):
    """
    Generate a markdown report of the saved tables.

    Args:
        all_results (dict): Table name to TableResult
        output_file (str, optional): Path to save the report
    """
    if not all_results:
        print("No results to report.")
        return

    report = ["# Hellmann Potential Energy Tables", ""]

    summary = []
    for name, result in all_results.items():
        summary.append([name, result.spec.engine, len(result.cells), len(result.untrusted), len(result.failed)])
    report.append("## Summary")
    report.append("")
    report.append(tabulate(summary, headers=["Table", "Engine", "Cells", "Untrusted", "Failed"], tablefmt="pipe"))
    report.append("")

    for result in all_results.values():
        report.extend(table_section(result))

    report_text = "\n".join(report)
    if output_file:
        with open(output_file, "w") as f:
            f.write(report_text)
        print(f"Report saved to {output_file}")
    else:
        print(report_text)


def main():
    """Main function."""
    parser = argparse.ArgumentParser(description="Generate a markdown report of saved Hellmann energy tables.")
    parser.add_argument("--results-dir", "-d", help="Directory with saved table json files")
    parser.add_argument("--output", "-o", help="Output file path (default: print to stdout)")

    args = parser.parse_args()

    all_results = load_all_results(args.results_dir)
    if not all_results:
        print("No results found. Run `python main.py table --preset NAME` first.")
        return

    generate_report(all_results, args.output)


if __name__ == "__main__":
    main()
