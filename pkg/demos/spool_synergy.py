"""Close the hand on the cone spool and print how each finger wrapped it.

The little finger has its own tendon, so it keeps closing after the index
side has settled on the wide end of the cone.
"""

from __future__ import annotations

import numpy as np

from softhand_sim.grasp_engine import close_hand
from softhand_sim.hand_model import default_bpi_config
from softhand_sim.objects import builtin


def main() -> None:
    config = default_bpi_config()
    report, trace = close_hand(config, builtin("large_spool"))
    print(f"{'finger':8s} {'flexion_deg':>12s} {'contacts':>9s} {'last_contact_x_mm':>18s}")
    for i, name in enumerate(config.finger_names):
        flex = np.degrees(report.final_state.angles[i].sum())
        x = report.last_contact_displacement(name)
        print(f"{name:8s} {flex:12.1f} {len(report.contacts_of(name)):9d} "
              f"{'-' if x is None else f'{x:.3f}':>18s}")
    print(f"\ntrace records: {len(trace.records)}, holding force {report.holding_force:.2f} N")


if __name__ == "__main__":
    main()
