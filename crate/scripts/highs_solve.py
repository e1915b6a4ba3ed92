#!/usr/bin/env python3
"""Solve an LP file with HiGHS and write `name value` lines.

Usage: highs_solve.py model.lp solution.txt

Exit status 0 on an optimal solution, 2 if the model is infeasible, 1 otherwise.
"""
import sys

import highspy


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__.strip(), file=sys.stderr)
        return 1
    model_path, out_path = sys.argv[1], sys.argv[2]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(model_path) != highspy.HighsStatus.kOk:
        print(f"could not read {model_path}", file=sys.stderr)
        return 1
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kInfeasible:
        return 2
    if status != highspy.HighsModelStatus.kOptimal:
        print(f"solver stopped with {h.modelStatusToString(status)}", file=sys.stderr)
        return 1
    values = h.getSolution().col_value
    lp = h.getLp()
    with open(out_path, "w") as f:
        f.write(f"# objective {h.getInfo().objective_function_value}\n")
        for name, v in zip(lp.col_names_, values):
            f.write(f"{name} {v:.9g}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
