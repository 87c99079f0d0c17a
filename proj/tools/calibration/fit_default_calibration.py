"""Least-squares fit of the default response model.

Fits per-channel LED gains and dark offsets to the published reference
readings of the physical device. The green-channel line at 515 nm
(slope 62466.40 counts per unit G, intercept 3110.20) is pinned exactly.
Channels without reference readings get gains interpolated in
wavelength from the fitted channels; they are uncalibrated.

Run: python3 tools/calibration/fit_default_calibration.py
The printed table is frozen into include/helios/sim/calibration.hpp.
"""
import numpy as np
from scipy.optimize import minimize

X_INV = (0.12626935, 0.1015257, 0.27444814)
REPEATS = np.array([
    [10392, 10088, 10132], [10374, 10142, 10141], [10432, 10110, 10204],
    [10339, 10111, 10197], [10467, 10366, 10050], [10355, 10143, 10246],
    [10496, 10163, 10194], [10508, 10175, 10252], [10548, 10240, 10165],
    [10405, 10192, 10103]])

# (input, {channel: count}); channel order of CLRGB triples is 630/515/445.
READINGS = [
    ((0.0, 0.5, 0.0), {630: 5995, 515: 34212, 445: 1663}),
    ((0.1, 0.0, 0.3), {630: 9415, 515: 3511, 445: 10867}),
    ((0.12, 0.45, 1.0), {515: 29270}),
    ((0.12, 0.45, 1.0), {515: 31676}),
] + [(X_INV, {630: r[0], 515: r[1], 445: r[2]}) for r in REPEATS]
# The tool-call transcript reading at G=0.5 ([1814, 32338, 787]) is taken
# under different ambient light than the G=0.5 reading above; it is left
# out of the fit and only checked at the wider tolerance.

SLOPE_515, INTERCEPT_515 = 62466.40, 3110.20
DARK_PRIOR, DARK_PRIOR_WEIGHT = 500.0, 0.01
CROSSTALK_RIDGE = 0.01
SCALE = 1e4  # optimizer works in units of 10^4 counts

# Canonical 3x3 Latin square (B level = (R - G) mod 3) over levels {0, 0.5, 1}: every run must stay
# below saturation (with 6 sigma of 70-count noise) on the red channel so the
# factor analysis sees the linear response. Red-channel G cross-talk must
# exceed B cross-talk by 30% (ordering of the published factor table).
LEVELS = (0.0, 0.5, 1.0)
LATIN_RUNS = [(LEVELS[i], LEVELS[j], LEVELS[(i - j) % 3])
              for i in range(3) for j in range(3)]
HEADROOM = 65535 - 6 * 70
G_OVER_B_630 = 1.3


def residuals(ch, gains, dark):
    res = []
    for x, vals in READINGS:
        if ch not in vals:
            continue
        y = vals[ch]
        # the ten repeats count as one reading in total
        w = 1.0 / np.sqrt(len(REPEATS)) if x == X_INV else 1.0
        res.append(w * (dark + np.dot(gains, x) - y) / y)
    return np.array(res)


def fit_channel(ch):
    direct = {630: 0, 515: 1, 445: 2}[ch]

    def unpack(p):
        p = np.asarray(p) * SCALE
        if ch == 515:
            return np.array([p[0], SLOPE_515, p[1]]), INTERCEPT_515
        return p[:3], p[3]

    def objective(p):
        g, d = unpack(p)
        r = residuals(ch, g, d)
        crosstalk = [g[k] for k in range(3) if k != direct]
        penalty = CROSSTALK_RIDGE * np.linalg.norm(crosstalk) / SCALE
        if ch != 515:
            penalty = np.hypot(penalty, DARK_PRIOR_WEIGHT * (d - DARK_PRIOR) / DARK_PRIOR)
        return np.sum(r ** 2) + penalty ** 2

    cons = []
    if ch == 630:
        cons.append({'type': 'ineq', 'fun':
                     lambda p: (unpack(p)[0][1] - G_OVER_B_630 * unpack(p)[0][2]) / SCALE})
        for run in LATIN_RUNS:
            cons.append({'type': 'ineq', 'fun': lambda p, run=run:
                         (HEADROOM - unpack(p)[1] - np.dot(unpack(p)[0], run)) / SCALE})
    n = 2 if ch == 515 else 4
    x0 = np.full(n, 0.1)
    sol = minimize(objective, x0, method='SLSQP', bounds=[(0, None)] * n,
                   constraints=cons, options={'ftol': 1e-15, 'maxiter': 2000})
    assert sol.success, sol.message
    return unpack(sol.x)


WAVELENGTHS = [415, 445, 480, 515, 555, 590, 630, 680]
EDGE_DECAY = 0.5         # bands outside 445-630 nm see half the nearest fitted band
CLEAR_FRACTION = 0.35    # broadband channel sees this share of the summed bands
NIR_FRACTION = 0.08      # near-IR sees this share of the 680 nm band
FITTED = (445, 515, 630)


def full_table(fitted):
    fit_gain = np.array([fitted[c][0] for c in FITTED])
    fit_dark = np.array([fitted[c][1] for c in FITTED])
    gains, dark = [], []
    for wl in WAVELENGTHS:
        if wl in fitted:
            gains.append(fitted[wl][0])
            dark.append(fitted[wl][1])
        elif wl < FITTED[0]:
            gains.append(EDGE_DECAY * fit_gain[0])
            dark.append(fit_dark[0])
        elif wl > FITTED[-1]:
            gains.append(EDGE_DECAY * fit_gain[-1])
            dark.append(fit_dark[-1])
        else:
            gains.append(np.array([np.interp(wl, FITTED, fit_gain[:, k]) for k in range(3)]))
            dark.append(np.interp(wl, FITTED, fit_dark))
    band = np.array(gains)
    gains = list(band) + [CLEAR_FRACTION * band.sum(axis=0), NIR_FRACTION * band[-1]]
    dark = dark + [CLEAR_FRACTION * sum(dark), NIR_FRACTION * dark[7]]
    return np.array(gains), np.array(dark)


def main():
    fitted = {c: fit_channel(c) for c in (445, 515, 630)}
    for c, (g, d) in fitted.items():
        print(c, 'gains', np.round(g, 2), 'dark', round(d, 2))
        for x, vals in READINGS[:4]:
            if c in vals:
                p = d + np.dot(g, x)
                print('   ', x, vals[c], round(p, 1), f'{100*(p/vals[c]-1):+.1f}%')
        p = d + np.dot(g, X_INV)
        print('    repeats mean', REPEATS.mean(0)[[630, 515, 445].index(c)], round(p, 1))
    gains, dark = full_table(fitted)
    names = [f'{w}nm' for w in WAVELENGTHS] + ['clear', 'nir']
    print('\nchannel        R           G           B        dark')
    for n, g, d in zip(names, gains, dark):
        print(f'{n:>7} {g[0]:11.2f} {g[1]:11.2f} {g[2]:11.2f} {d:11.2f}')


if __name__ == '__main__':
    main()
