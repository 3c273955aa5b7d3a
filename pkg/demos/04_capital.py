# %% [markdown]
# # IRB capital, granularity adjustment and the co-exposure add-on

# %%
import numpy as np

from overlaprisk import (
    CapitalParams,
    borrower_capital,
    capital_report,
    double_count_ratio,
    generate_ds1_like,
    granularity_adjustment,
    k_tilde,
    uvw_gamma_curve,
)

p = CapitalParams()
cap = borrower_capital([0.01, 0.03, 0.1], [0.45, 0.45, 0.45], p)
print("K_i", cap.k)
print("GA", granularity_adjustment([0.5, 0.3, 0.2], cap, p))

# %% [markdown]
# A superlender holds N borrowers: two with share u, N-2 common ones with
# share w. The GA follows the quadratic `1 - 2(N-2)w + N(N-2)w^2` and is
# smallest when every share equals 1/N.

# %%
w = np.sort(np.append(np.linspace(0, 0.25, 201), 1 / 6))
curve = uvw_gamma_curve(6, w=w)
print(curve.max_rel_dev, curve.w_min, 1 / 6)

# %% [markdown]
# `r` tells whether moving share into the overlap makes the GA grow
# (`r > 1`) or shrink (`r < 1`).

# %%
n = 6
om = np.array([False, True, True, True, True, False])
homog = borrower_capital(np.full(n, 0.01), np.full(n, 0.45), p)
for w in (0.12, 1 / 6, 0.22):
    u = (1 - (n - 2) * w) / 2
    s = np.array([u, w, w, w, w, u])
    print(f"w={w:.3f} r={double_count_ratio(s, om, homog.k, k_tilde(homog, p.delta)):.4f}")

# %%
net = generate_ds1_like(n_borrowers=600, n_shared=40, n_lenders=4, seed=6)
rep = capital_report(net)
for row in rep.lenders:
    print(row.lender, f"K={row.k:.4f} GA={row.gamma:.5f} X_CE={row.x_ce:.5f} r={row.r:.3f} "
                      f"K_CE={row.k_ce:.5f} total={row.k_total:.4f}")
