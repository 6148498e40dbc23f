# # Sample values for a KNN classifier
#
# A training point is worth the average change in the classifier's confidence
# on a validation point when it joins a coalition of other training points.
# Enumerating every coalition costs 2^N; sorting by distance gets the same
# numbers in N log N.

# %%
import numpy as np

from shapcal import Dataset, Sample, knn
from shapcal.valuation import exact_shapley, knn_shapley, utility_knn

# %% [markdown]
# Three points on a line, queried from the left. Labels near to far:
# match, mismatch, match.

# %%
train = Dataset(np.array([[0.0], [1.0], [2.0]]), [0, 1, 0], num_classes=2)
query = Sample(0, np.array([-1.0]), 0)

print("U({0})    =", utility_knn({0}, train, query, K=1))
print("U({1, 2}) =", utility_knn({1, 2}, train, query, K=1))

# %%
brute = exact_shapley(train, query, K=1).values
ranking = knn.rank_neighbors(train, query.features)
fast = knn_shapley(ranking, train.y, query.label, K=1).values
print("brute force:", brute)
print("recursion:  ", fast)
print("sum of values == U(all):", fast.sum(), utility_knn({0, 1, 2}, train, query, 1))

# %% [markdown]
# The same check on a random instance with more neighbours and three classes.

# %%
rng = np.random.default_rng(0)
train = Dataset(rng.normal(size=(11, 2)), rng.integers(0, 3, 11), 3)
query = Sample(0, rng.normal(size=2), 1)
for K in (1, 3, 5):
    brute = exact_shapley(train, query, K).values
    fast = knn_shapley(knn.rank_neighbors(train, query.features), train.y, 1, K).values
    print(f"K={K}  max |diff| = {np.abs(brute - fast).max():.2e}")
