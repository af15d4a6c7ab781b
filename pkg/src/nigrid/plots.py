"""Static SVG figures of a trajectory: bus frequencies and line angle differences."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SVG_RC = {"svg.hashsalt": "nigrid", "svg.fonttype": "none"}


def _save(fig, path: Path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_frequencies(traj, path):
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(7, 4))
        for i in range(traj.grid.n):
            ax.plot(traj.t, traj.frequency_hz[:, i], lw=1.2, label=f"bus {i + 1}")
        ax.axhline(traj.grid.omega0.hz, color="k", ls=":", lw=0.8)
        ax.set_xlabel("time [s]")
        ax.set_ylabel("frequency [Hz]")
        ax.legend(loc="upper right")
        fig.tight_layout()
        _save(fig, Path(path))


def plot_angle_differences(traj, path):
    """One panel per line: steady-state, deviation and total angle difference."""
    topo = traj.grid.topology
    l = topo.n_edges
    with plt.rc_context(_SVG_RC):
        fig, axes = plt.subplots(1, max(l, 1), figsize=(4 * max(l, 1), 3.5), squeeze=False)
        dev = traj.edge_deviation
        for e, line in enumerate(topo.edges):
            ax = axes[0, e]
            i, j = line.endpoints
            ax.plot(traj.t, traj.angle_diff[:, e], lw=1.2, label="total")
            ax.plot(traj.t, dev[:, e], lw=1.0, label="deviation")
            ax.axhline(line.psi_bar, color="k", ls="--", lw=0.8, label="steady state")
            ax.set_title(f"line ({i},{j})")
            ax.set_xlabel("time [s]")
        axes[0, 0].set_ylabel("angle difference [rad]")
        axes[0, 0].legend(loc="upper right")
        fig.tight_layout()
        _save(fig, Path(path))


def write_plots(traj, plot_dir) -> list[Path]:
    out = Path(plot_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "frequencies.svg", out / "angle_differences.svg"]
    plot_frequencies(traj, paths[0])
    plot_angle_differences(traj, paths[1])
    return paths
