"""Background correction of g2(0) on simulated streams of varying duration."""
import argparse

from starkplan.fitting import coincidence_areas, g2_correct, raw_g2
from starkplan.synth import background_for_raw_g2, gen_g2_stream


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--raw", type=float, default=0.34)
    ap.add_argument("--intrinsic", type=float, default=0.09)
    ap.add_argument("--rate", type=float, default=2e4)
    ap.add_argument("--period", type=float, default=4.5e-6)
    ap.add_argument("--window", type=float, default=45e-9)
    args = ap.parse_args()
    b = background_for_raw_g2(args.raw, args.intrinsic, args.window, args.period) * args.rate / 2
    print(f"background per detector {b:.0f} cps")
    for duration in (3.0, 10.0, 30.0):
        for seed in range(3):
            st = gen_g2_stream(args.rate, b, b, args.period, duration, seed=seed,
                               g2_intrinsic=args.intrinsic)
            o, c = coincidence_areas(st.t1, st.t2, args.period, args.window)
            g = g2_correct(c, st.t1.size / st.duration, st.t2.size / st.duration, b, b,
                           args.window, args.period, st.duration)
            print(f"T {duration:5.1f} s seed {seed}: raw {raw_g2(o, c):.3f} "
                  f"corrected {g[o == 0][0]:.3f}")


if __name__ == "__main__":
    main()
