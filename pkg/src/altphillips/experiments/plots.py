"""SVG figures for a report."""

from __future__ import annotations

from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

CONES = (0.5, 0.25, 0.1)


def _read_csv(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if len(lines) <= 1:
        return np.zeros((0, len(lines[0].split(",")) if lines else 0))
    return np.loadtxt(lines[1:], delimiter=",", ndmin=2)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return str(path)


def render_plots(report: dict, out_dir) -> list:
    """Write the figures applicable to ``report``; return their paths.

    Weiss profile, log-log growth fit, free-boundary scatter with cones
    ``{x_n = eps |x'|}`` and, in 1D, the solution against the profile.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    diags = report.get("diagnostics") or {}
    arts = report.get("artifacts") or {}
    paths = []

    w = diags.get("weiss")
    if w and "values" in w:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(w["radii"], w["values"], "o-")
        ax.set_xscale("log")
        ax.set_xlabel("r")
        ax.set_ylabel("W(u_r, 1)")
        ax.set_title("Weiss energy")
        paths.append(_save(fig, out / "weiss.svg"))

    gr = diags.get("growth")
    if gr and "slope" in gr:
        r = np.asarray(gr["radii"])
        s = np.asarray(gr["per_radius_sups"])
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.loglog(r, s, "o", label="sup over half-ball")
        ax.loglog(r, np.exp(gr["intercept"]) * r ** gr["slope"], "-", label=f"slope {gr['slope']:.3f}")
        ax.set_xlabel("r")
        ax.legend()
        ax.set_title("Growth")
        paths.append(_save(fig, out / "growth.svg"))

    fbp = arts.get("free_boundary_csv")
    if fbp and Path(fbp).exists():
        P = _read_csv(fbp)
        if P.ndim == 2 and P.shape[1] == 2:
            fig, ax = plt.subplots(figsize=(6, 3.5))
            if P.size:
                ax.plot(P[:, 0], P[:, 1], ".", ms=2, label="free boundary")
            cm = diags.get("contact_modulus") or {}
            R = max(cm.get("radii", [0.4]))
            xs = np.linspace(-R, R, 201)
            for eps in CONES:
                ax.plot(xs, eps * np.abs(xs), "--", lw=0.8, label=f"x_n = {eps}|x'|")
            ax.set_xlim(-R, R)
            ax.set_ylim(0, 0.6 * R)
            ax.set_xlabel("x1")
            ax.set_ylabel("x_n")
            ax.legend(fontsize=7)
            paths.append(_save(fig, out / "free_boundary.svg"))

    orc = diags.get("oracle")
    fpath = arts.get("field_csv")
    if orc and fpath and Path(fpath).exists():
        F = _read_csv(fpath)
        if F.shape[1] == 2:
            from ..oracle1d import profile_eval
            from ..operators import ApParams

            gamma = report.get("scenario", {}).get("params", {}).get("gamma", 1.5)
            fig, ax = plt.subplots(figsize=(5, 3.5))
            ax.plot(F[:, 0], F[:, 1], "-", label="discrete solution")
            ax.plot(F[::16, 0], profile_eval(ApParams(gamma), F[::16, 0]), "x", ms=4, label="exact profile")
            ax.set_xlabel("x")
            ax.legend()
            ax.set_title(f"L-inf error {orc.get('linf_error', float('nan')):.2e}")
            paths.append(_save(fig, out / "oracle.svg"))
    return paths
