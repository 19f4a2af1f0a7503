"""Report figures written next to the CSV outputs."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    # no timestamps, so reruns give identical files
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)


def plot_trace(history, path, title=None):
    """Objective after every half-step, B steps and (W, c) steps marked apart."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        J = np.array([h[2] for h in history])
        steps = np.arange(len(J))
        ax.plot(steps, J, color="0.6", lw=1)
        for phase, marker, label in (("init", "s", "initial"), ("wc", "o", "(W, c) step"),
                                     ("b", "v", "B step")):
            idx = [i for i, h in enumerate(history) if h[1] == phase]
            if idx:
                ax.plot(steps[idx], J[idx], marker, ms=4, ls="none", label=label)
        if np.all(J > 0):
            ax.set_yscale("log")
        ax.set_xlabel("half-step")
        ax.set_ylabel("objective")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        _save(fig, path)


def plot_eval(report, radii, precision_curve, path):
    """Per-query AP histogram and mean precision against Hamming radius."""
    with plt.rc_context(_RC):
        fig, (left, right) = plt.subplots(1, 2, figsize=(8, 3.2))
        left.hist(report.ap, bins=20, range=(0, 1), color="C0")
        left.axvline(report.map, color="k", ls="--", lw=1, label=f"mAP = {report.map:.3f}")
        left.set_xlabel("average precision")
        left.set_ylabel("queries")
        left.legend(frameon=False)
        right.plot(radii, precision_curve, "o-", ms=3)
        right.axvline(report.radius, color="k", ls=":", lw=1)
        right.set_xlabel("Hamming radius")
        right.set_ylabel("mean precision")
        right.set_ylim(0, 1.02)
        fig.suptitle(f"L = {report.L}")
        _save(fig, path)
