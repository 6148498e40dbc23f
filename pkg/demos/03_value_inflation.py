# # Measuring value inflation
#
# Sort the training set by value, cut it into equal bins, and remove one bin
# at a time. Bins whose removal raises accuracy are harmful. The threshold t is
# the value where the harmful stretch ends; r is the share of harmful bins that
# still carry positive values.

# %%
from shapcal import knn
from shapcal.inflation import bin_removal_curve, inflation_metrics, segment_bins
from shapcal.pipelines import blob_task
from shapcal.valuation import ValuationParams, aggregate_over_validation

task = blob_task(seed=0)          # 1000 train, 100 val, 30% flipped labels
print("vanilla 10-NN validation accuracy:", knn.accuracy(task.train, task.val, 10))

# %%
for method in ("knn", "cknn"):
    vec = aggregate_over_validation(task.train, task.val, method, ValuationParams(K=10))
    seg = segment_bins(vec.values, 20)
    curve = bin_removal_curve(task.train, task.val, seg, K=10)
    rep = inflation_metrics(curve, seg)
    print(f"{method:5s} status={rep.status} j*={rep.j_star} i*={rep.i_star} "
          f"t={rep.t:.4f} r={rep.r:.3f}")

# %% [markdown]
# The curve itself, bin by bin (p0 is accuracy on the full set).

# %%
print("p0 =", curve.p0)
for j, (p, v) in enumerate(zip(curve.p, seg.bin_value), start=1):
    mark = "harmful" if p > curve.p0 else ""
    print(f"bin {j:2d}  value<= {v:+.4f}  acc without {p:.2f}  {mark}")
