"""Independent high-precision evaluation of the values frozen into the C++ tests.

Run with `python3 derive_values.py`; needs mpmath. Every number printed here
appears verbatim in tests/oracle_values.hpp.
"""
from mpmath import mp, mpf, sqrt, log, exp

mp.dps = 50
VT = mpf("0.025852")
GMIN = mpf("1e-12")

NMOS = dict(vth0=mpf("0.55"), kp=mpf("170e-6"), n=mpf("1.4"), lam=mpf("0.06"),
            eta=mpf("0.03"), gamma=mpf("0.58"), phi=mpf("0.8"))
PMOS = dict(vth0=mpf("0.75"), kp=mpf("58e-6"), n=mpf("1.5"), lam=mpf("0.08"),
            eta=mpf("0.03"), gamma=mpf("0.45"), phi=mpf("0.8"))


def vte(p, vds, vsb):
    vsb = max(vsb, -p["phi"] / 2)
    return p["vth0"] + p["gamma"] * (sqrt(p["phi"] + vsb) - sqrt(p["phi"])) - p["eta"] * vds


def ids(p, vgs, vds, vsb, w, l=mpf("0.35e-6")):
    """Forward-frame drain current, vds >= 0."""
    assert vds >= 0
    ispec = 2 * p["n"] * p["kp"] * (w / l) * VT ** 2
    s = 2 * p["n"] * VT
    q = lambda x: log(1 + exp(x))
    v = vte(p, vds, vsb)
    return ispec * (q((vgs - v) / s) ** 2 - q((vgs - v - p["n"] * vds) / s) ** 2) * (1 + p["lam"] * vds)


def bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


VDD = mpf("3.3")
W1 = mpf("1e-6")

# Single off device: gate, source and body grounded, drain at VDD.
i1 = ids(NMOS, 0, VDD, 0, W1)

# Two-stack of W/2 devices; gmin from the internal node to ground is part of the circuit.
w2 = W1 / 2
def kcl2(x):
    return ids(NMOS, -x, VDD - x, x, w2) - ids(NMOS, 0, x, 0, w2) - GMIN * x
x2 = bisect(kcl2, mpf(0), mpf("0.3"))
i2_dev = ids(NMOS, -x2, VDD - x2, x2, w2)

# Three-stack of W/3 devices: nodes a (upper) and b (lower).
w3 = W1 / 3
def solve_b(a):
    # Given the upper internal node a, the lower node b balances the bottom two devices.
    g = lambda b: ids(NMOS, -b, a - b, b, w3) - ids(NMOS, 0, b, 0, w3) - GMIN * b
    return bisect(g, mpf(0), a, 160)
def kcl3(a):
    b = solve_b(a)
    return ids(NMOS, -a, VDD - a, a, w3) - ids(NMOS, -b, a - b, b, w3) - GMIN * a
a3 = bisect(kcl3, mpf(0), mpf("0.3"), 120)
b3 = solve_b(a3)
i3_dev = ids(NMOS, -a3, VDD - a3, a3, w3)

# Inverter with input at 0: PMOS (W=2.5u, body at VDD) against the off NMOS (W=1u).
def kcl_inv(out):
    return ids(PMOS, VDD, VDD - out, 0, mpf("2.5e-6")) - ids(NMOS, 0, out, 0, W1) - GMIN * out
vout = bisect(kcl_inv, VDD - mpf("0.1"), VDD)

print("vte(vds=3.3, vsb=0)          =", mp.nstr(vte(NMOS, VDD, 0), 20))
print("vte(vds=0, vsb=1)            =", mp.nstr(vte(NMOS, 0, 1), 20))
print("single off current           =", mp.nstr(i1, 20))
print("2-stack node                 =", mp.nstr(x2, 20))
print("2-stack device current       =", mp.nstr(i2_dev, 20))
print("3-stack nodes (a, b)         =", mp.nstr(a3, 20), mp.nstr(b3, 20))
print("3-stack device current       =", mp.nstr(i3_dev, 20))
print("inverter out (in=0)          =", mp.nstr(vout, 20))
print("cgs W=1u L=0.35u             =", mp.nstr(mpf("0.5") * mpf("4.6e-3") * W1 * mpf("0.35e-6") + mpf("1.2e-10") * W1, 20))
