#!/usr/bin/env python3
"""MAE/RMSE of KDE and IWMDE curves as a function of the number of
posterior draws (3k to 300k), written to out/draw_count_study/mcmc_study.csv."""

import sys

from bfsens.cli import main

sys.exit(main([
    "mcmc-study",
    "--seed", "20240101",
    "--out", "out/draw_count_study",
]))
