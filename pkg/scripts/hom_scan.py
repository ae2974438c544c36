"""HOM visibility against detuning and against added spectral diffusion."""
import argparse

import numpy as np

from starkplan.interference import EmitterPairConfig, hom_visibility


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau-prime-ns", type=float, default=458.0)
    ap.add_argument("--gate-ns", type=float, default=0.5)
    ap.add_argument("--gamma1-ghz", type=float, default=1.52)
    ap.add_argument("--gamma2-ghz", type=float, default=1.75)
    ap.add_argument("--max-ghz", type=float, default=3.0)
    ap.add_argument("--steps", type=int, default=13)
    args = ap.parse_args()
    print(f"{'x GHz':>8}{'detuned by x':>15}{'broadened by x':>17}")
    for x in np.linspace(0.0, args.max_ghz, args.steps):
        det = EmitterPairConfig.from_fwhm(args.tau_prime_ns, args.gamma1_ghz, args.gamma2_ghz,
                                          x, args.gate_ns)
        brd = EmitterPairConfig.from_fwhm(args.tau_prime_ns, args.gamma1_ghz,
                                          args.gamma2_ghz + x, 0.0, args.gate_ns)
        print(f"{x:8.2f}{hom_visibility(det):15.4f}{hom_visibility(brd):17.4f}")


if __name__ == "__main__":
    main()
