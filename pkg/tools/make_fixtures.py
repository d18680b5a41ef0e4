"""Regenerate the golden tables in src/mellinshift/data with mpmath at 50 digits.

Nothing here imports mellinshift: the values are computed from the closed
forms directly so that they can act as an independent oracle.

    python3 tools/make_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50

DATA = Path(__file__).resolve().parents[1] / "src" / "mellinshift" / "data"

PARAMS = [
    (2, 0, 0),
    (2, "0.1", "0.3"),
    (3, "0.2", "-0.4"),
    ("1.5", "-0.2", "1.2"),
    (4, "0.5", "2"),
]
XS = ["-7.5", "-1.3", "-0.25", "0", "0.4", "2.2", "9"]
OMEGAS = ["0.3", "-0.8", "1"]
THETA = "0.37"
SHIFT_DATA = ("0.4", "1.3")  # (omega, Omega) for the weighted c symbol


def fmt(v) -> str:
    return f"{float(v):.17g}"


def s_sym(p, g, x):
    return mp.coth(mp.pi * (x + 1j / p + 1j * g))


def r_sym(p, g, x):
    return 1 / mp.sinh(mp.pi * (x + 1j / p + 1j * g))


def g_tilde(p, g, w, x, theta):
    gi = mp.im(g)
    rr = r_sym(p, g, x) * r_sym(p, mp.conj(g), x)
    ph = theta * w * x
    bracket = mp.exp(2 * mp.pi * gi) * (1 - mp.exp(-1j * ph)) + mp.exp(-2 * mp.pi * gi) * (1 - mp.exp(1j * ph))
    return 1 + bracket * rr / 4


def oscillating_omega(t, a="0.5", b="0.5"):
    a, b = mp.mpf(a), mp.mpf(b)
    return a * mp.sin(b * mp.log(1 + mp.log(t) ** 2))


def symbol_table() -> list[str]:
    rows = ["# func p re_gamma im_gamma omega Omega theta x re im"]
    for p, rg, ig in PARAMS:
        p = mp.mpf(p)
        g = mp.mpc(rg, ig)
        for xs in XS:
            x = mp.mpf(xs)
            head = [fmt(p), fmt(mp.re(g)), fmt(mp.im(g))]
            rows.append(" ".join(["s", *head, "0", "1", "1", fmt(x), fmt(mp.re(v := s_sym(p, g, x))), fmt(mp.im(v))]))
            rows.append(" ".join(["r", *head, "0", "1", "1", fmt(x), fmt(mp.re(v := r_sym(p, g, x))), fmt(mp.im(v))]))
            w0, big = (mp.mpf(z) for z in SHIFT_DATA)
            v = big ** (1 / p) * mp.exp(1j * w0 * x) * r_sym(p, g, x)
            rows.append(" ".join(["c", *head, fmt(w0), fmt(big), "1", fmt(x), fmt(mp.re(v)), fmt(mp.im(v))]))
            for ws in OMEGAS:
                w = mp.mpf(ws)
                v = g_tilde(p, g, w, x, 1)
                rows.append(" ".join(["g", *head, fmt(w), "1", "1", fmt(x), fmt(mp.re(v)), fmt(mp.im(v))]))
                th = mp.mpf(THETA)
                v = g_tilde(p, g, w, x, th)
                rows.append(" ".join(["gt", *head, fmt(w), "1", fmt(th), fmt(x), fmt(mp.re(v)), fmt(mp.im(v))]))
    return rows


def g_oracle_csv() -> list[str]:
    """|g| samples for the oscillating preset, used by the symbol command test."""
    p, g = mp.mpf(2), mp.mpc("0.1", "0.3")
    lines = ["# g symbol oracle: p=2 re_gamma=0.1 im_gamma=0.3 alpha=oscillating(0.5,0.5)",
             "t,x,re_g,im_g,abs_g"]
    for k in range(-6, 7, 2):
        t = mp.exp(k)
        w = oscillating_omega(t)
        for xs in ["-4", "-1", "-0.25", "0", "0.25", "1", "4"]:
            x = mp.mpf(xs)
            v = g_tilde(p, g, w, x, 1)
            lines.append(",".join([fmt(t), fmt(x), fmt(mp.re(v)), fmt(mp.im(v)), fmt(abs(v))]))
    return lines


def certificate_cases() -> list[dict]:
    out = []
    cases = [(2, 0, 0, 1, 1), (2, 0, 0, -1, 1), (2, "0.1", "0.3", -1, 1), (3, "0.1", "-0.2", "-0.5", "0.5")]
    for p, rg, ig, lo, hi in cases:
        p, g = mp.mpf(p), mp.mpc(rg, ig)
        lo, hi = mp.mpf(lo), mp.mpf(hi)
        strip = 1 / p + mp.re(g)
        prods = [lo * mp.im(g), hi * mp.im(g)]
        I = strip + min(0, min(prods) / (2 * mp.pi))
        S = strip + max(0, max(prods) / (2 * mp.pi))
        q = 1 / min(I, 1 - S)
        m = max(abs(lo), abs(hi))
        a = mp.pi ** 2 / (q * m)
        b = mp.pi * strip
        c1 = mp.sin(mp.pi / (2 * q)) / mp.sqrt(mp.sinh(a) ** 2 + mp.sin(b) ** 2)
        c2 = 1 / mp.sqrt(1 + mp.sin(b) ** 2 / mp.sinh(a) ** 2)
        out.append({
            "p": float(p), "re_gamma": float(mp.re(g)), "im_gamma": float(mp.im(g)),
            "omega_range": [float(lo), float(hi)],
            "lower": float(I), "upper": float(S), "q": float(q),
            "c1": float(c1), "c2": float(c2), "c": float(min(c1, c2) ** 2),
        })
    return out


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "golden_symbols.txt").write_text("\n".join(symbol_table()) + "\n")
    (DATA / "g_oracle.csv").write_text("\n".join(g_oracle_csv()) + "\n")
    (DATA / "certificates.json").write_text(json.dumps(certificate_cases(), indent=2) + "\n")
    print(f"wrote fixtures to {DATA}")


if __name__ == "__main__":
    main()
