"""Sample fingertip workspaces and compare the default finger splay with parallel fingers."""

from __future__ import annotations

from softhand_sim.hand_model import default_bpi_config
from softhand_sim.workspace import sample_workspace, stats_table, workspace_stats, zero_splay


def main() -> None:
    config = default_bpi_config()
    stats = workspace_stats(sample_workspace(config, 5000, seed=0))
    print(stats_table(stats), end="")
    flat = workspace_stats(sample_workspace(zero_splay(config), 5000, seed=0))
    print(f"\nthumb overlap volume: default {stats.overlap_volume:.0f} mm^3, "
          f"parallel fingers {flat.overlap_volume:.0f} mm^3")


if __name__ == "__main__":
    main()
