#!/usr/bin/env python3
"""
Side-by-side view of a saved energy table against the published values.
"""

import argparse
import os

import pandas as pd
from dotenv import load_dotenv
from tabulate import tabulate

from src.utils.formatting import fmt_sig
from src.utils.preset_loader import PresetLoader, printed_tolerance
from src.utils.tables import TableResult

load_dotenv()


def load_results(filename):
    """
    Load a saved table.

    Args:
        filename (str): Path to the results file

    Returns:
        TableResult: Loaded table, None on error
    """
    try:
        return TableResult.load(filename)
    except (OSError, ValueError, KeyError, TypeError) as e:
        print(f"Error loading results: {e}")
        return None


def comparison_frame(result, published):
    """
    Join computed cells with the published cells of the same table.

    Returns:
        pandas.DataFrame: state, b, delta, printed, computed, deviation, within
    """
    printed = pd.DataFrame(published["cells"])
    printed["b"] = printed["b"].astype(float)
    printed["delta"] = printed["delta"].astype(float)
    computed = result.to_frame()[["state", "b", "delta", "value"]]
    frame = printed.merge(computed, on=["state", "b", "delta"], how="left")
    frame["deviation"] = (frame["value"] - frame["printed"].astype(float)).abs()
    frame["within"] = frame["deviation"] <= frame["printed"].map(printed_tolerance) * (1.0 + 1e-9)
    return frame


def print_comparison(result, published, mismatches_only=False):
    frame = comparison_frame(result, published)
    if mismatches_only:
        frame = frame[~frame["within"]]
    rows = [
        [row.state, f"{row.b:g}", f"{row.delta:g}", row.printed, fmt_sig(row.value, 8), f"{row.deviation:.2e}", "yes" if row.within else "NO"]
        for row in frame.itertuples(index=False)
    ]
    print("\n" + "=" * 80)
    print(f"{published['title']}")
    print("=" * 80)
    print(tabulate(rows, headers=["state", "b", "delta", "printed", "computed", "|diff|", "within"], tablefmt="grid", disable_numparse=True))
    known = published.get("known_discrepancies", [])
    if known:
        print("\nKnown misprints:")
        for cell in known:
            print(f"  {cell['state']} b={cell['b']} delta={cell['delta']}: printed {cell['printed']}, computed {cell['computed']} ({cell['note']})")


def list_result_files(results_dir=None):
    results_dir = results_dir or os.getenv("HELLMANN_RESULTS_DIR", "results")
    if not os.path.exists(results_dir):
        print(f"Results directory '{results_dir}' not found.")
        return []
    return sorted(os.path.join(results_dir, f) for f in os.listdir(results_dir) if f.endswith(".json"))


def main():
    """Main function."""
    parser = argparse.ArgumentParser(description="Compare saved Hellmann tables with the published values.")
    parser.add_argument("--file", "-f", help="Path to a saved table json")
    parser.add_argument("--list", "-l", action="store_true", help="List available result files")
    parser.add_argument("--all", "-a", action="store_true", help="Compare every saved table with published values")
    parser.add_argument("--mismatches", "-m", action="store_true", help="Only show cells outside the printed precision")

    args = parser.parse_args()

    if args.list:
        print("Available result files:")
        for filename in list_result_files():
            print(f"  {filename}")
        return

    loader = PresetLoader()
    filenames = list_result_files() if args.all else ([args.file] if args.file else list_result_files()[-1:])
    if not filenames:
        print("No result files found. Run `python main.py table --preset NAME` first.")
        return

    for filename in filenames:
        result = load_results(filename)
        if result is None:
            continue
        if result.spec.name not in loader.published:
            print(f"{filename}: no published values for table '{result.spec.name}'")
            continue
        print_comparison(result, loader.get_published(result.spec.name), args.mismatches)


if __name__ == "__main__":
    main()
