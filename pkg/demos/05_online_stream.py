# # Cleaning a stream
#
# The training set arrives in 10 batches. Each time, survivors plus the new
# batch are valued and negative samples are dropped for good.

# %%
from shapcal.dataset import chunk
from shapcal.pipelines import blob_task, online_run
from shapcal.valuation import ValuationParams

task = blob_task(seed=0)
shards = chunk(task.train, 10)
params = ValuationParams(K=10)

cleaned = online_run(shards, task.val, "cknn", params)
plain = online_run(shards, task.val, "cknn", params, policy=None)

# %%
print("batch  kept  removed  acc   no-removal acc")
for rec, base in zip(cleaned.batches, plain.batches):
    print(f"{rec.batch:5d}  {rec.survivors:4d}  {rec.removed:7d}  {rec.accuracy:.2f}  {base.accuracy:.2f}")

# %% [markdown]
# Value trajectory of the first few samples that were eventually removed.

# %%
flipped = set(task.train.origin[task.mask.flipped_ids].tolist())
for o in sorted(cleaned.removed_at)[:5]:
    traj = " ".join(f"b{b}:{v:+.3f}" for b, v in cleaned.trajectories[o])
    print(f"sample {o} (flipped={o in flipped}) removed at batch {cleaned.removed_at[o]}: {traj}")
