"""Compare forces of the nominal and calibrated transmissions.

The nominal hand uses a 10 mm pulley and lossless bearings; the calibrated
hand uses the frozen pulley radius and efficiency fitted to the measured
holding and press forces.
"""

from __future__ import annotations

from softhand_sim.calibration import holding_force
from softhand_sim.grasp_engine import single_finger_press
from softhand_sim.hand_model import calibrated_bpi_config, default_bpi_config


def main() -> None:
    for label, cfg in (("nominal", default_bpi_config()), ("calibrated", calibrated_bpi_config())):
        eff = cfg.fingers[0].joints[0].efficiency
        print(f"{label:10s} pulley {cfg.actuator.pulley_radius:5.1f} mm, efficiency {eff:.2f}: "
              f"block holding {holding_force(cfg):7.2f} N, "
              f"little press {single_finger_press(cfg, 'little'):6.2f} N, "
              f"middle press {single_finger_press(cfg, 'middle'):6.2f} N")


if __name__ == "__main__":
    main()
