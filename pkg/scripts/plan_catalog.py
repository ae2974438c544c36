"""Pair the catalogue emitters under a few bias and quench constraints."""
import argparse
import math

from starkplan.emitters import CATALOG
from starkplan.planner import PlanConstraints, plan_pairs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--objective", choices=("log", "linear"), default="log")
    args = ap.parse_args()
    ems = list(CATALOG.values())
    for label, c in (("fit ranges, quench limit 1/e", PlanConstraints(objective=args.objective)),
                     ("fit ranges, no quench limit",
                      PlanConstraints(min_neutral_fraction=0.0, objective=args.objective)),
                     ("at most 60 V reverse bias",
                      PlanConstraints(max_reverse_bias=60.0, objective=args.objective))):
        plan = plan_pairs(ems, c)
        print(f"== {label}: {plan.method}, objective {plan.objective_value:.4g}")
        for p in plan.pairs:
            print(f"  {p.a}-{p.b}: {p.target_ghz:.3f} GHz at ({p.v_a:.2f}, {p.v_b:.2f}) V, "
                  f"p_exc {p.p_exc:.3g}, log10 {math.log10(p.p_exc):.2f}")
        print(f"  unpaired: {', '.join(plan.unpaired) or '-'}")


if __name__ == "__main__":
    main()
