"""Figure rendering for the CLI report path.

Every sweep that writes a delimited table also renders the corresponding
figure to a PNG next to it (opt out with --no-plot). Data files stay the
normative output; the figures are a convenience view.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_figure"]


def _finite(rows, ix, iy):
    xs, ys = [], []
    for r in rows:
        x, y = r[ix], r[iy]
        if y is not None and not (isinstance(y, float) and math.isnan(y)):
            xs.append(x)
            ys.append(y)
    return xs, ys


def render_figure(verb: str, header, rows, png_path: str, log_x=True):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    col = {name: i for i, name in enumerate(header)}
    if verb == "epsilon":
        w, re = _finite(rows, col["omega"], col["re_eps_minus_1"])
        _, im = _finite(rows, col["omega"], col["im_eps"])
        ax.plot(w, re, label="Re eps - 1")
        ax.plot(w, im, label="Im eps")
        ax.set_xlabel("omega")
        ax.set_ylabel("dielectric function")
    elif verb == "energy":
        xname = header[0]
        for name, label in [("e_vacuum", "vacuum"),
                            ("e1_d", "direct medium part"),
                            ("e1_hb", "atom-mediated medium part")]:
            if name in col:
                a, e = _finite(rows, col[xname], col[name])
                if e:
                    ax.plot(a, e, marker=".", label=label)
        ax.set_xlabel("plate separation a" if xname == "a"
                      else "coupling alpha")
        ax.set_ylabel("Casimir energy")
    elif verb == "force":
        for name, label, scale in [("f_d", "direct (x10)", 10.0),
                                   ("f_hb", "atom-mediated", 1.0)]:
            if name in col:
                a, f = _finite(rows, col["a"], col[name])
                if f:
                    ax.plot(a, [scale * v for v in f], marker=".",
                            label=label)
        ax.set_xlabel("plate separation a")
        ax.set_ylabel("additional Casimir force")
    elif verb == "compare":
        for name, label in [("e1_d", "direct"), ("e1_hb", "atom-mediated"),
                            ("difference", "difference")]:
            if name in col:
                a, e = _finite(rows, col["a"], col[name])
                if e:
                    ax.plot(a, e, marker=".", label=label)
        ax.set_xlabel("plate separation a")
        ax.set_ylabel("medium-induced energy, shared dielectric function")
    else:
        plt.close(fig)
        raise ValueError(f"no figure defined for verb {verb!r}")
    if log_x:
        ax.set_xscale("log")
    ax.legend(frameon=False, fontsize=9)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(png_path, dpi=130)
    plt.close(fig)
    return png_path
