"""Pick PD gains for the reaction-wheel attitude loop.

Gains come from a per-axis second-order design (K_p = J w_n^2, K_d = 2 zeta J w_n).
For each candidate natural frequency the reference slew is simulated with the
wheel limits in place, and the settle time and peak wheel speed are reported.

    python scripts/tune_gains.py --wn 5 10 20 40
"""

import argparse

import numpy as np

from sphereclimb.adcs import BODY_INERTIA, WheelArray, slew_to, tune_gains
from sphereclimb.propulsion import REFERENCE_HOP_EULER
from sphereclimb.simcore import quat_identity


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wn", type=float, nargs="+", default=[5.0, 10.0, 20.0, 40.0], help="natural frequencies, rad/s")
    ap.add_argument("--zeta", type=float, default=1.0)
    ap.add_argument("--inertia", type=float, default=BODY_INERTIA, help="body inertia per axis, kg m^2")
    ap.add_argument("--tol", type=float, default=1e-3, help="angle and rate settle tolerance")
    args = ap.parse_args(argv)

    print(f"{'w_n':>6} {'kp':>8} {'kd':>8} {'settle_s':>9} {'peak_wheel_rad_s':>17} saturated")
    for wn in args.wn:
        gains = tune_gains(args.inertia, wn, args.zeta)
        res = slew_to(REFERENCE_HOP_EULER, quat_identity(), np.zeros(3), WheelArray(), gains,
                      args.inertia, angle_tol=args.tol, rate_tol=args.tol)
        settle = f"{res.settle_time:9.3f}" if res.settled else f"{'-':>9}"
        peak = float(np.abs(res.wheel_speeds).max())
        print(f"{wn:6.1f} {gains.kp[0]:8.3f} {gains.kd[0]:8.3f} {settle} {peak:17.1f} {res.saturated}")


if __name__ == "__main__":
    main()
