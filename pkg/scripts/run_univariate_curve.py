#!/usr/bin/env python3
"""Full univariate sensitivity analysis for the default two-sample test.

Produces the oracle curve, the KDE/IWMDE/CMDE approximations, the joint
draws, and an SVG overlay under out/univariate_curve/.
"""

import sys

from bfsens.cli import main

sys.exit(main([
    "curve",
    "--estimators", "kde,iwmde,cmde",
    "--seed", "20240101",
    "--out", "out/univariate_curve",
]))
