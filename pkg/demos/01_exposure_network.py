# %% [markdown]
# # Exposure networks and the Dependency Index
#
# Two lenders, three borrowers, one of them shared. We project the
# lender/borrower network onto the lenders and read off how much each
# portfolio is entangled with the other.

# %%
from overlaprisk import (
    ExposureNetwork,
    concentration_report,
    dependency_index_sys,
    generate_ds1_like,
    impact_matrix,
    overlap_risk_composition,
)

block = ExposureNetwork.from_dense([[1, 1, 0], [0, 1, 1]])
s = impact_matrix(block)
print(s.s)  # columns sum to one
print(concentration_report(block).to_dict())

# %% [markdown]
# Impact of lender i on lender j is `s[i, j]`. With unit weights each lender
# keeps three quarters of its own impact and DI is 0.1 for both.

# %%
net = generate_ds1_like(n_borrowers=1100, n_shared=9, seed=0)
rep = concentration_report(net)
for lid, h, di in zip(rep.lender_ids, rep.hhi_weighted, rep.di):
    print(f"{lid}: HHI {h:.4f}  DI {di:.3e}")
print("DI_sys", dependency_index_sys(net))

# %%
comp = overlap_risk_composition(net)
for scope, cat, frac in comp.as_rows():
    print(f"{scope:>8} cat {cat}: {frac:.3f}")
