"""Render run and sweep reports to figure files next to the CSV/JSON output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np               # noqa: E402

__all__ = ["render_rate_figure", "render_timeseries_figure"]

_RC = {
    "figure.figsize": (6.4, 4.2),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.4,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def render_rate_figure(report: dict, path) -> None:
    """Log-log error vs mu per norm order, with the fitted slopes and the
    mu^(1/2) and mu^1 reference rates."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ref_anchor = None
        for order, fit in sorted(report["fits"].items()):
            pts = [(p["mu"], p["error"], p["flagged"]) for p in fit["points"]
                   if p["failure"] is None and p["error"] > 0]
            if not pts:
                continue
            mu = np.array([p[0] for p in pts])
            err = np.array([p[1] for p in pts])
            flagged = np.array([p[2] for p in pts])
            label = f"order {order}"
            if fit["slope"] is not None:
                label += f" (slope {fit['slope']:.2f})"
            line, = ax.loglog(mu[~flagged], err[~flagged], "o-", label=label)
            if flagged.any():
                ax.loglog(mu[flagged], err[flagged], "x", ms=9,
                          color=line.get_color(), label=f"order {order} (floor)")
            ref_anchor = (mu.max(), err[np.argmax(mu)])
        if ref_anchor is not None:
            mu_ref = np.array(sorted({p["mu"] for f in report["fits"].values()
                                      for p in f["points"] if p["failure"] is None}))
            for expo, st in ((0.5, ":"), (1.0, "--")):
                ax.loglog(mu_ref, ref_anchor[1] * (mu_ref / ref_anchor[0]) ** expo,
                          "k" + st, lw=0.9, label=rf"$\mu^{{{expo:g}}}$")
        ax.set_xlabel(r"$\mu$")
        ax.set_ylabel("sup-in-time discrete error")
        ax.set_title(f"{report['scenario']}: six-field vs limit, "
                     f"N={report['n_cells']}, eps={report['eps']:g}")
        ax.legend(fontsize=8)
        fig.savefig(path)
        plt.close(fig)


def render_timeseries_figure(rows: list[dict], path) -> None:
    """Conserved-total drift and damping budgets against time."""
    t = np.array([r["t"] for r in rows])
    with plt.rc_context(_RC):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 6.0))
        for key, label in (("mass_plus", "mass +"), ("mass_minus", "mass -"),
                           ("momentum", "momentum"), ("total_energy", "energy"),
                           ("entropy", "entropy functional")):
            q = np.array([r[key] for r in rows])
            scale = max(abs(q[0]), 1.0)
            ax1.plot(t, (q - q[0]) / scale, label=label)
        ax1.set_ylabel("relative drift")
        ax1.legend(fontsize=8, ncol=2)

        for key, label in (("dp_budget", r"$\|\delta p\|^2$ budget"),
                           ("dtheta_budget", r"$\|\delta\theta\|^2$ budget"),
                           ("dp_l1", r"$\|\delta p\|$ budget"),
                           ("dtheta_l1", r"$\|\delta\theta\|$ budget")):
            q = np.array([r[key] for r in rows])
            ax2.plot(t, q, label=label)
        ax2.set_xlabel("t")
        ax2.set_ylabel("damping budgets")
        if np.any([r["dp_budget"] > 0 or r["dtheta_budget"] > 0 for r in rows]):
            ax2.set_yscale("symlog", linthresh=1e-16)
        ax2.legend(fontsize=8)
        fig.savefig(path)
        plt.close(fig)
