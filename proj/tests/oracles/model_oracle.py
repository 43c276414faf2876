"""Brute-force oracles for analytic model values (frozen into unit tests)."""
import numpy as np
from scipy import integrate

def gauss(x, s):
    d = len(x)
    return np.exp(-np.dot(x, x) / (2*s*s)) / (2*np.pi*s*s)**(d/2)

def rho_tr_brute(x, y, s, zmax):
    tot = 0.0
    rng = range(-zmax, zmax + 1)
    for i in rng:
        for j in rng:
            if i*i + j*j > zmax*zmax: continue
            z = np.array([i, j], float)
            tot += gauss(x - z, s) * gauss(z - y, s)
    return -tot

if __name__ == "__main__":
    x = np.array([0.0, 0.0])
    print("rho_tr(site,site) |z|<=8 : %.17g" % rho_tr_brute(x, x, 0.5, 8))
    print("rho_tr(site,site) |z|<=16: %.17g" % rho_tr_brute(x, x, 0.5, 16))
    a = np.array([0.3, 0.7]); b = np.array([1.1, -0.4])
    print("rho_tr(a,b)       |z|<=16: %.17g" % rho_tr_brute(a, b, 0.5, 16))
    # sine: minimal C with |rho_tr| <= C (1+r)^-2 on a dense grid
    r = np.linspace(0, 64, 640001)
    v = np.sinc(r)**2 * (1 + r)**2
    print("sine min C on [0,64]: %.12g at r=%.6f" % (v.max(), r[v.argmax()]))
    # gamma constants via radial quadrature 2 pi int r^{k+1} e^{-g r} dr
    for g in [0.5, 1.0, 2.0]:
        c = [2*np.pi*integrate.quad(lambda t: t**(k+1)*np.exp(-g*t), 0, np.inf, epsrel=1e-13)[0] for k in (3, 4, 2)]
        print("gamma=%g C3=%.15g C4=%.15g C5=%.15g" % (g, *c))
