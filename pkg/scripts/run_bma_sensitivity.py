#!/usr/bin/env python3
"""Inclusion-BF sensitivity for the four-model meta ensemble with both
encompassing strategies plus the 10-point quadrature validation grid,
written under out/bma_sensitivity/."""

import sys

from bfsens.cli import main

sys.exit(main([
    "bma",
    "--strategy", "both",
    "--seed", "20240101",
    "--out", "out/bma_sensitivity",
]))
