"""Figure rendering for run artifacts (PNG files next to the CSV output)."""

from __future__ import annotations

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FIGSIZE = (7.0, 4.3)


def _new_fig(nrows=1, sharex=False):
    fig, axes = plt.subplots(nrows, 1, figsize=(FIGSIZE[0], FIGSIZE[1] * (0.6 + 0.4 * nrows)),
                             sharex=sharex)
    return fig, axes


def plot_observables(series, summary, smoothing, out_path):
    """Mean position, standard deviation and energy drift over time."""
    from .trend import kernel_smooth

    t = series.t
    fig, (ax_m, ax_s, ax_e) = _new_fig(3, sharex=True)
    win = (summary.window_lo, summary.window_hi)

    mean = series.mean
    ax_m.plot(t, mean, lw=0.8, label="mean")
    ax_m.plot(t, kernel_smooth(t, mean, smoothing), lw=1.4, alpha=0.8, label="smoothed")
    tw = np.linspace(win[0], win[1], 50)
    ax_m.plot(tw, summary.mean_slope * tw + summary.mean_intercept, "k--", lw=1.0,
              label=f"fit A={summary.mean_slope:.3g}, r={summary.mean_r:.4g}")
    ax_m.axvspan(win[0], win[1], color="0.92")
    ax_m.set_ylabel("mean position")
    ax_m.legend(fontsize=8, loc="best")

    sig = series.sigma
    ax_s.plot(t, sig, lw=0.8, label="sigma")
    ax_s.plot(t, kernel_smooth(t, sig, smoothing), lw=1.4, alpha=0.8, label="smoothed")
    ax_s.plot(tw, summary.sigma_slope * tw + summary.sigma_intercept, "k--", lw=1.0,
              label=f"fit A1={summary.sigma_slope:.3g}")
    ax_s.axvspan(win[0], win[1], color="0.92")
    ax_s.set_ylabel("standard deviation")
    ax_s.legend(fontsize=8, loc="best")

    en = series.energy
    ax_e.plot(t, np.abs(en - en[0]) / abs(en[0]), lw=0.8)
    ax_e.set_yscale("log")
    ax_e.set_ylabel("|E(t)-E(0)|/E(0)")
    ax_e.set_xlabel("t")

    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def plot_snapshots(mesh, fields, profile, out_path):
    """Field snapshots with the potential profile shaded behind them."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    x = mesh.nodes
    pot = profile(x)
    if np.max(pot) > 0:
        ax2 = ax.twinx()
        ax2.fill_between(x, pot, color="0.85", zorder=0, step="mid")
        ax2.set_ylabel("potential", color="0.5")
        ax2.tick_params(axis="y", colors="0.5")
    for t_snap, u in fields:
        ax.plot(x, u, lw=0.9, label=f"t = {t_snap:g}", zorder=2)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def plot_sweep(rows, out_path):
    """Summary over barrier heights: final/min sigma and crossing time."""
    ok = [r for r in rows if r[-1] == "ok"]
    if not ok:
        return
    a2 = [r[0] for r in ok]
    fig, (ax1, ax2) = _new_fig(2)
    ax1.plot(a2, [r[9] for r in ok], "o-", label="sigma final")
    ax1.plot(a2, [r[8] for r in ok], "s--", label="sigma min")
    ax1.set_ylabel("sigma")
    ax1.legend(fontsize=8)
    t0 = [(x, r[7]) for x, r in zip(a2, ok) if r[7] is not None]
    if t0:
        ax2.plot([p[0] for p in t0], [p[1] for p in t0], "o-")
    ax2.set_ylabel("t0 (mean crosses 0)")
    ax2.set_xlabel("a2")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def plot_convergence(rows, order, out_path):
    values = [r[1] for r in rows]
    errs = [r[4] for r in rows]
    kind = rows[0][0]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.loglog(values, errs, "o-", label=f"observed order {order:.2f}")
    ref = errs[0] * (np.asarray(values) / values[0]) ** 2
    ax.loglog(values, ref, "k--", lw=1.0, label="slope 2")
    ax.set_xlabel(kind)
    ax.set_ylabel("relative L2 error")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def plot_oracle(rows, threshold, out_path):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.semilogy([r[0] for r in rows], [r[1] for r in rows], "o-")
    ax.axhline(threshold, color="r", ls="--", lw=1.0, label=f"threshold {threshold:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("relative L2 discrepancy")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
