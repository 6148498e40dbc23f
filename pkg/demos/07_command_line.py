# # The command line
#
# Everything above is also reachable from `shapcal` (or `python -m shapcal`).
# Reports embed the resolved config, so `replay` can rebuild them.

# %%
import json
import subprocess
import sys
import tempfile
from pathlib import Path

out = Path(tempfile.mkdtemp())


def run(*args):
    cmd = [sys.executable, "-m", "shapcal", *args]
    res = subprocess.run(cmd, capture_output=True, text=True)
    print("$ shapcal", " ".join(args[:3]), "...")
    print(res.stdout.strip() or res.stderr.strip(), f"(exit {res.returncode})")
    return res.returncode


# %%
run("synth", "--n", "600", "--flip", "0.3", "--seed", "1", "--out-dir", str(out))
run("split", "--input", str(out / "data.csv"), "--label", "label", "--out-dir", str(out))
data = ["--train", str(out / "train.csv"), "--val", str(out / "val.csv"), "--label", "label"]
run("value", *data, "--method", "cknn", "--policy", "negative", "--out-dir", str(out / "v"))
run("inflation", *data, "--bins", "20", "--out-dir", str(out / "i"))

# %%
report = json.loads((out / "i" / "inflation.json").read_text())
print(json.dumps(report["results"]["report"], indent=1))
run("replay", "--report", str(out / "v" / "values.json"), "--out-dir", str(out / "r"))

# %% [markdown]
# Bad configs list every problem at once.

# %%
root = Path(__file__).resolve().parent.parent if "__file__" in globals() else Path.cwd()
run("scenario", "online", "--config", str(root / "configs" / "bad.json"), "--out-dir", str(out))
