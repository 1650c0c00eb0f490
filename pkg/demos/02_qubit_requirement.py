"""How many qubits does a dataset need?

Sweep the encoding width upward and watch the collision metrics: the train
side is covered once no two differently-labeled samples share a code, the
test side once every overlapping test sample agrees with its training
bucket's majority. The first crossings give q_train and q_test; adding the
class-register qubits gives the dataset requirement.
"""

import numpy as np

from bitbit import ReducerSpec, SplitSpec, compute_q_y, make_synthetic, split_train_test, sweep_qubits
from bitbit.coverage import estimate_from_curve

dataset = make_synthetic(s=600, n=4, c=3, separation=2.0, seed=3)
train, test = split_train_test(dataset, SplitSpec(0.8, seed=1))

estimate = sweep_qubits(train, test, ReducerSpec("pca"), threshold=1.0, n_x_max=64)

print("width  train_acc  test_acc  overlap")
for n_x, m in estimate.curve:
    print(f"{n_x:>5}  {m.theoretical_train_accuracy:>9.4f}  {m.theoretical_test_accuracy:>8.4f}"
          f"  {m.test_train_overlap_fraction:>7.4f}")

print(f"\nq_train={estimate.q_train}  q_test={estimate.q_test}  "
      f"q_y={estimate.q_y} (= ceil(log2 {dataset.c}))")
print(f"q_dataset = max(q_train, q_test) + q_y = {estimate.q_dataset}")

# A 0.99 threshold is usually satisfied several qubits earlier than 1.0:
# the last fraction of a percent of training collisions is expensive.
relaxed = estimate_from_curve(estimate.curve, threshold=0.99, c=dataset.c)
print(f"at threshold 0.99 instead: q_dataset = {relaxed.q_dataset}")

# Replicating over splits is how the headline number is produced; the CLI
# (`bitbit estimate`) runs 10 replicates and reports mean and std.
qs = []
for seed in range(5):
    tr, te = split_train_test(dataset, SplitSpec(0.8, seed=seed))
    qs.append(sweep_qubits(tr, te, ReducerSpec("pca"), 1.0, 64).q_dataset)
print(f"\nq_dataset across 5 replicate splits: {qs} (mean {np.mean(qs):.1f})")
