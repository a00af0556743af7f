"""Independent transcriptions of the planar rod equations (test oracles only)."""

import numpy as np

from rodlimit.types import perp, rotation2d


def planar_rows(phi, dt, ds, eps, mu, a, g):
    """All twelve planar equation rows written in vector form, keyed by name."""
    r_t, al_t, v_t, n_t, om_t, ka_t = dt[0:2], dt[2], dt[3:5], dt[5:7], dt[7], dt[8]
    r_s, al_s, v_s, n_s, om_s, ka_s = ds[0:2], ds[2], ds[3:5], ds[5:7], ds[7], ds[8]
    al, v, n, om, ka = phi[2], phi[3:5], phi[5:7], phi[7], phi[8]
    d = rotation2d(al)
    e1, e3 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    p_inv_a = np.diag([1.0, 1.0 / a])
    p_a = np.diag([1.0, a])
    f = np.array([0.0, -g])
    e2 = eps * eps
    kin = r_t - d @ v
    geo = r_s - d @ (e3 + e2 * mu * mu * a * p_inv_a @ n)
    comp = e2 * mu * mu * a * p_inv_a @ n_t - v_s + ka * perp(v) + om * e1 - e2 * mu * mu * om * p_a @ perp(n)
    bal = v_t - n_s + ka * perp(n) - om * perp(v) - d @ f
    return {
        "kin_r1": kin[0], "kin_r2": kin[1], "kin_alpha": al_t - om,
        "geo_r1": geo[0], "geo_r2": geo[1], "geo_alpha": al_s - ka,
        "comp_n1": comp[0], "comp_n3": comp[1], "comp_kappa": ka_t - om_s,
        "bal_v1": bal[0], "bal_v3": bal[1],
        "bal_omega": e2 * om_t - ka_s / mu ** 2 - n[0] - e2 * mu * mu * (1 - a) * n[0] * n[1],
    }
