"""Result files: CSV tables, a JSON summary and matplotlib figures."""

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .shift import dissipation_along  # noqa: E402

# fixed metadata keeps PNG output byte-identical across runs
_PNG_META = {"Software": None}


def _fmt(x):
    return float(f"{float(x):.12g}")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating)) else v for v in row])


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def _default(obj):
    if isinstance(obj, np.ndarray):
        return [_fmt(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def front_rows(u):
    return [(u.t0[k], min(u.t1[k], u.horizon), u.x0[k], u.speed[k], u.left[k], u.right[k])
            for k in range(u.n_records)]


def write_fronts(out, u):
    path = Path(out) / "fronts.csv"
    write_csv(path, ["t0", "t1", "x0", "speed", "left", "right"], front_rows(u))
    return path


def psi_summary(res):
    K = res.constants
    return {
        "boundaries": [_fmt(b) for b in res.boundaries],
        "rel_entropy_total": _fmt(res.rel_entropy_total),
        "initial_total": _fmt(res.initial_total),
        "oleinik_modulus": _fmt(res.oleinik_modulus),
        "sup_norm": _fmt(res.sup_norm),
        "cell_entropies": [_fmt(c) for c in res.cell_entropies],
        "merge_log": [{"t": _fmt(t), "blocks": [list(map(int, b)) for b in blocks]}
                      for t, blocks in res.merge_log],
        "stages": [{"t_start": _fmt(st.t_start), "t_end": _fmt(st.t_end),
                    "layers": [int(i) for i in st.layer_ids],
                    "eps_per_shift": _fmt(st.eps_shift)} for st in res.stages],
        "fit": {k: _fmt(v) if isinstance(v, float) else v for k, v in res.fit_report.items()},
        "constants": {"inf_A2": _fmt(K.inf_A2), "sup_absA1": _fmt(K.sup_absA1),
                      "c_star": _fmt(K.c_star), "c_dstar": _fmt(K.c_dstar), "s": _fmt(K.s)},
        "eps": _fmt(res.eps),
        "certificates": {k: bool(v) for k, v in res.certificates.items()},
    }


def write_psi(out, model, u, res, figures=True):
    """psi.csv, shifts.csv and, optionally, psi.png and fronts.png."""
    out = Path(out)
    psi = res.psi
    x = psi.sample_grid(2001)
    write_csv(out / "psi.csv", ["x", "psi", "u_T"],
              zip(x, psi(x), u(x, psi.T)))
    rows = []
    for si, st in enumerate(res.stages):
        for k in range(1, len(st.paths) - 1):
            path = st.paths[k].truncate(st.t_end)
            tm, D = dissipation_along(model, u, psi.layers[st.layer_ids[k - 1]],
                                      psi.layers[st.layer_ids[k]], path)
            for t, xx, d in zip(tm, 0.5 * (path.xs[:-1] + path.xs[1:]), D):
                rows.append((si, k, t, xx, d))
    write_csv(out / "shifts.csv", ["stage", "shift", "t", "x", "D"], rows)
    files = [out / "psi.csv", out / "shifts.csv"]
    if figures:
        files += [plot_psi(out / "psi.png", psi, u), plot_fronts(out / "fronts.png", u, res)]
    return files


def plot_psi(path, psi, u):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    x = psi.sample_grid(2001)
    ax.plot(x, u(x, psi.T), color="0.6", lw=2.5, label="u(x, T)")
    for a, b, i in psi.cells():
        xs = np.linspace(a, b, 200)
        ax.plot(xs, psi.layers[i](xs, psi.T), color="C0", lw=1.2)
    for b in psi.boundaries[1:-1]:
        ax.axvline(b, color="C3", lw=0.6, ls=":")
    ax.plot([], [], color="C0", label="psi")
    ax.set_xlabel("x")
    ax.set_xlim(-psi.R, psi.R)
    ax.legend(frameon=False, loc="best")
    ax.set_title(f"T = {psi.T:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_fronts(path, u, res=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    for t0, t1, x0, sp, left, right in front_rows(u):
        c = "k" if left > right else "0.7"
        ax.plot([x0, x0 + sp * (t1 - t0)], [t0, t1], color=c, lw=0.8)
    if res is not None:
        for st in res.stages:
            for k, p in enumerate(st.paths):
                p = p.truncate(st.t_end)
                style = dict(color="C3", lw=0.8, ls="--") if k in (0, len(st.paths) - 1) \
                    else dict(color="C0", lw=1.6)
                ax.plot(p.xs, p.ts, **style)
        for t, _ in res.merge_log:
            ax.axhline(t, color="C2", lw=0.6, ls=":")
        R = res.psi.R
        span = R + res.constants.s * res.psi.T
        ax.set_xlim(-span, span)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_ylim(0, u.horizon)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)
    return path
