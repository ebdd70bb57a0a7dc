"""Reference values for the sin(t^2) chirp families.

Independent of the Rust implementation: every quantity is expressed through
Fresnel integrals (scipy.special.fresnel) and, where an outer integral is
needed, brute-force composite Simpson quadrature on a grid that resolves the
local oscillation. Run with `python3 chirp_oracle.py [section ...]`; the
printed numbers are frozen into the Rust integration tests.
"""

import sys

import numpy as np
from scipy.special import fresnel

SQ = np.sqrt(np.pi / 2.0)
K = np.sqrt(2.0 / np.pi)


def prim_sin(t):
    """int_0^t sin(s^2) ds."""
    s, _ = fresnel(np.asarray(t) * K)
    return SQ * s


def prim_sin_sq(t):
    """int_0^t sin(s^2)^2 ds = t/2 - 1/2 int_0^t cos(2 s^2) ds."""
    t = np.asarray(t, dtype=float)
    _, c = fresnel(t * 2.0 / np.sqrt(np.pi))
    return 0.5 * t - 0.5 * (np.sqrt(np.pi) / 2.0) * c


def gated_intervals(q, x):
    out = []
    k = 0
    while q ** (2 * k) < x:
        out.append((q ** (2 * k), min(q ** (2 * k + 1), x)))
        k += 1
    return out


def gated_prim(fn, q, t):
    """int_0^t chi_B f for f with primitive fn."""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    k = 0
    while q ** (2 * k) < t.max() + 1:
        a, b = q ** (2 * k), q ** (2 * k + 1)
        hi = np.clip(t, a, b)
        total += fn(hi) - fn(np.minimum(hi, a))
        k += 1
    return total


def cesaro():
    x = 1.0e4
    print("cesaro chirp x=1e4:", repr(float(prim_sin_sq(x) / x)))
    for kk in range(5, 8):
        for e in (2 * kk + 1, 2 * kk + 2):
            x = 2.0 ** e
            v = gated_prim(prim_sin_sq, 2.0, np.array([x]))[0] / x
            print(f"cesaro gated q=2 x=2^{e}:", repr(float(v)))


def local_average():
    v = (prim_sin(101.0) - prim_sin(100.0)) / 1.0
    print("local average chirp t=100 eps=1:", repr(float(v)))
    v = (prim_sin(3.5) - prim_sin(3.0)) / 0.5
    print("local average chirp t=3 eps=0.5:", repr(float(v)))


def triple_norm():
    xs = np.linspace(0.0, 100.0, 2_000_001)
    w = prim_sin_sq(xs + 1.0) - prim_sin_sq(xs)
    print("triple norm chirp p=2 horizon=100:", repr(float(np.sqrt(w.max()))))


def simpson(f_vals, h):
    n = len(f_vals) - 1
    assert n % 2 == 0
    return h / 3.0 * (f_vals[0] + f_vals[-1] + 4.0 * f_vals[1:-1:2].sum() + 2.0 * f_vals[2:-1:2].sum())


def avg_l2(prim, x, eps, refine=1):
    total = 0.0
    edges = np.concatenate([np.linspace(0.0, 10.0, 11), np.arange(20.0, x + 1.0, 10.0)])
    for a, b in zip(edges[:-1], edges[1:]):
        rate = 4.0 * (b + eps) + 4.0
        n = int(np.ceil((b - a) * rate / 0.25 * refine))
        n += n % 2
        t = np.linspace(a, b, n + 1)
        av = (prim(t + eps) - prim(t)) / eps
        total += simpson(av * av, (b - a) / n)
    return total / x


def averages():
    for eps in (1.0, 0.5, 0.25):
        print(f"avg_l2 chirp x=1e4 eps={eps}:", repr(avg_l2(prim_sin, 1.0e4, eps)))
    gp = lambda t: gated_prim(prim_sin, 2.0, t)
    print("avg_l2 gated q=2 x=1e4 eps=1:", repr(avg_l2(gp, 1.0e4, 1.0)))


def averages_richardson():
    # the base grid leaves 1e-8..1e-7 relative Simpson error; one halving
    # plus Richardson removes it
    for eps in (1.0, 0.5, 0.25):
        coarse = avg_l2(prim_sin, 1.0e3, eps)
        fine = avg_l2(prim_sin, 1.0e3, eps, refine=2)
        print(f"avg_l2 chirp x=1e3 eps={eps} richardson:", repr(fine + (fine - coarse) / 15.0))


def chirp_hat(k, x):
    """(1/sqrt(2 pi)) int_0^x sin(t^2) e^{-ikt} dt via completed squares."""
    def e_plus(k):
        # int_0^x e^{i(t^2 - kt)} dt
        lo, hi = -k / 2.0, x - k / 2.0
        s1, c1 = fresnel(hi * K)
        s0, c0 = fresnel(lo * K)
        return np.exp(-1j * k * k / 4.0) * SQ * ((c1 - c0) + 1j * (s1 - s0))

    def e_minus(k):
        # int_0^x e^{-i(t^2 + kt)} dt = conj(int_0^x e^{i(t^2 + kt)} dt)
        return np.conj(e_plus(-k))

    return (e_plus(k) - e_minus(k)) / (2j) / np.sqrt(2.0 * np.pi)


def sigma_window():
    for x in (1.0e2, 1.0e3, 1.0e4):
        n = int(np.ceil(40.0 / (np.pi / (8.0 * x))))
        n += n % 2
        k = np.linspace(-20.0, 20.0, n + 1)
        dens = np.abs(chirp_hat(k, x)) ** 2 / x
        print(f"sigma chirp window [-20,20] x={x:g}:", repr(simpson(dens, 40.0 / n)))


def g_eps_freq():
    # int |ghat_eps|^2 dsigma_x over [-kmax, kmax] for the chirp
    x, eps, kmax = 1.0e4, 1.0, 50.0
    n = int(np.ceil(2 * kmax / (np.pi / (8.0 * x))))
    n += n % 2
    k = np.linspace(-kmax, kmax, n + 1)
    dens = np.abs(chirp_hat(k, x)) ** 2 / x
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(k == 0.0, 1.0, np.abs((np.exp(1j * eps * k) - 1.0) / (1j * eps * k)) ** 2)
    print("g_eps frequency chirp x=1e4 eps=1 kmax=50:", repr(simpson(g * dens, 2 * kmax / n)))


SECTIONS = {
    "cesaro": cesaro,
    "local": local_average,
    "triple": triple_norm,
    "averages": averages,
    "richardson": averages_richardson,
    "sigma": sigma_window,
    "geps": g_eps_freq,
}

if __name__ == "__main__":
    for name in sys.argv[1:] or SECTIONS:
        SECTIONS[name]()
