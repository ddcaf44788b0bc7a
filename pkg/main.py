"""
Main entry point for the usr-rl CLI.

Usage:
    python main.py train --config ./configs/mtt_adv_usr.ini --seed 0 --out runs/adv
    python main.py sweep --checkpoint runs/adv/checkpoint.json --param w1 --out runs/adv
    python main.py tabular-verify --trials 1000 --tol 1e-6
    python main.py -v gradcheck

    Or run the desk verification suites with:
    ./run.sh

Configuration:
    - Run configs are INI files (see configs/) laid over a hydra preset
      (hydra_configs/default.yaml, or --preset full for the full-scale table)
    - USR_RL_THREADS caps sweep worker threads
    - USR_RL_LOG_LEVEL sets the log level (default INFO); -v / -q shift it
"""

import sys

from usr_rl.cli.commands import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
