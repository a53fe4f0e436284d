#!/usr/bin/env python3
"""Bivariate sensitivity surface for the informed test: exact panel,
KDE and IWMDE panels, and approximation-ratio panels with blank sparse
cells, written under out/bivariate_surface/."""

import sys

from bfsens.cli import main

sys.exit(main([
    "surface",
    "--seed", "20240101",
    "--out", "out/bivariate_surface",
]))
