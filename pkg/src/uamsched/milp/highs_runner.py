"""Solve an LP file with HiGHS and write a generic-dialect solution file.

Usage: python -m uamsched.milp.highs_runner MODEL.lp SOLUTION.sol [--time-limit S]

Solution file layout: first line is the status keyword (optimal, infeasible,
timeout or error), then ``=obj= <value>``, then one ``name value`` per column.
"""
import argparse
import sys

import highspy


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="highs_runner")
    ap.add_argument("lp")
    ap.add_argument("sol")
    ap.add_argument("--time-limit", type=float, default=600.0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 0.0)
    h.setOptionValue("threads", args.threads)
    if h.readModel(args.lp) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.lp}", file=sys.stderr)
        return 3
    h.run()
    status = h.getModelStatus()
    keyword = {
        highspy.HighsModelStatus.kOptimal: "optimal",
        highspy.HighsModelStatus.kInfeasible: "infeasible",
        highspy.HighsModelStatus.kTimeLimit: "timeout",
    }.get(status, "error")

    with open(args.sol, "w") as fh:
        fh.write(keyword + "\n")
        if keyword == "optimal":
            info = h.getInfo()
            fh.write(f"=obj= {info.objective_function_value!r}\n")
            names = h.getLp().col_names_
            for name, value in zip(names, h.getSolution().col_value):
                fh.write(f"{name} {value!r}\n")
        elif keyword == "error":
            fh.write(f"# {h.modelStatusToString(status)}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
