# # Calibrated values
#
# The plain recursion hands every far-away point a share of credit from tiny
# coalitions. The calibrated variant gives the T farthest points zero and
# restarts the recursion at rank N - T, so the values only reflect coalitions
# large enough to contain the real neighbourhood.

# %%
import numpy as np

from shapcal import Dataset, Sample, knn
from shapcal.valuation import cknn_shapley, exact_shapley, knn_shapley

# %%
labels = [0, 1, 0, 0, 1]          # near to far, query label 0
train = Dataset(np.arange(5.0)[:, None], labels, 2)
query = Sample(0, np.array([-1.0]), 0)
r = knn.rank_neighbors(train, query.features)

print("plain      ", knn_shapley(r, train.y, 0, K=1).values)
print("calibrated ", cknn_shapley(r, train.y, 0, K=1, T=2).values)

# %% [markdown]
# With at least K points left, the calibrated numbers are the exact values of
# the game played on the N - T nearest points only.

# %%
near = train.subset([0, 1, 2])
print("exact on 3 nearest", exact_shapley(near, query, K=1).values)

# %% [markdown]
# The default T is N - 2K. The two vectors differ by a constant over the
# kept ranks.

# %%
rng = np.random.default_rng(1)
train = Dataset(rng.normal(size=(40, 2)), rng.integers(0, 2, 40), 2)
query = Sample(0, rng.normal(size=2), 0)
r = knn.rank_neighbors(train, query.features)
vk = knn_shapley(r, train.y, 0, K=5).values[r.order]
vc = cknn_shapley(r, train.y, 0, K=5)
L = 40 - vc.params.T
diff = vc.values[r.order][:L] - vk[:L]
print(f"T={vc.params.T}, offset min/max = {diff.min():.6f} / {diff.max():.6f}")
print("zeros beyond the cut:", np.count_nonzero(vc.values[r.order][L:] == 0))
