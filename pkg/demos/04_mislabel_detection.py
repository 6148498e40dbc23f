# # Finding flipped labels
#
# Flip 30% of the training labels, value every sample against a clean
# validation set, and see how many flipped samples end up with a value <= 0.

# %%
from shapcal import knn
from shapcal.pipelines import RemovalPolicy, apply_removal, blob_task, mislabel_analysis
from shapcal.valuation import ValuationParams, aggregate_over_validation

task = blob_task(seed=0)
print("flipped:", task.mask.count, "of", len(task.train))

# %%
for method in ("knn", "cknn"):
    vec = aggregate_over_validation(task.train, task.val, method, ValuationParams(K=10))
    a = mislabel_analysis(vec, task.mask)
    kept, removed = apply_removal(task.train, vec, RemovalPolicy("negative"))
    print(f"{method:5s} I={a.counts['I']:3d} II={a.counts['II']:3d} III={a.counts['III']:3d} "
          f"recall={a.recall:.3f} precision={a.precision:.3f} "
          f"acc after removing {len(removed)}: {knn.accuracy(kept, task.val, 10):.2f}")

# %% [markdown]
# Set I: flagged but clean. Set II: flagged and flipped. Set III: flipped but
# missed. Dropping the bottom 30% instead of the negatives:

# %%
kept, removed = apply_removal(task.train, vec, RemovalPolicy("bottom", 0.3))
print("bottom 30% removed:", len(removed),
      "accuracy:", knn.accuracy(kept, task.val, 10))
