"""Run shipped configs through the scenario runner and print flags and wall times.

    python3 scripts/run_configs.py configs/crit01_green_closed_form.ini configs/crit10_bound_state.ini
"""
import argparse
import json

from lapbox.cli import run
from lapbox.config import load_config


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("configs", nargs="+")
    ap.add_argument("--summary", action="store_true", help="print the summary block too")
    args = ap.parse_args()
    for path in args.configs:
        env = run(load_config(path))
        md = env["metadata"]
        status = "PASS" if md["passed"] else "FAIL"
        print(f"{status} {path} ({md['wall_time']:.2f} s) {md['flags']}")
        if args.summary:
            print("    " + json.dumps(env["results"]["summary"])[:600])


if __name__ == "__main__":
    main()
