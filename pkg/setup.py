#!/usr/bin/env python3
"""
Setup script for the Hellmann potential toolkit.
This script creates the output directory and initializes the .env file.
"""

import os
import shutil


def setup():
    """Set up the project by creating directories and initializing files."""
    print("Setting up the Hellmann potential toolkit...")

    directories = [
        "src/data/presets",
        "src/data/paper_tables",
        "results",
    ]

    for directory in directories:
        os.makedirs(directory, exist_ok=True)
        print(f"Created directory: {directory}")

    # Create .env file from template if it doesn't exist
    if not os.path.exists(".env") and os.path.exists(".env.template"):
        shutil.copy(".env.template", ".env")
        print("Created .env file from template. Adjust worker count and log level if needed.")

    print("\nSetup complete!")
    print("\nNext steps:")
    print("1. Install dependencies: pip install -r requirements.txt")
    print("2. Reproduce a published table: python main.py table --preset b-10-scan")
    print("3. Cross-validate the closed forms: python main.py verify all")


if __name__ == "__main__":
    setup()
