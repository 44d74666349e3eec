"""
Sample weights for fine-tuning
==============================

When targets under-represent a group compared with histories, samples whose
target lies in that group are up-weighted by the ratio of the two shares.
The weighted target distribution then matches the history distribution.
"""

from itemfair import Sequence, build_weight_table, custom_scheme, weighted_loss

scheme = custom_scheme("pop", ["head", "tail"], {"h1": ["head"], "h2": ["head"], "t1": ["tail"], "t2": ["tail"]})

# histories are half head, half tail; three of four targets are head items
seqs = [
    Sequence("a#1", "a", ("h1", "t1"), "h2", "train"),
    Sequence("b#1", "b", ("t2", "h2"), "h1", "train"),
    Sequence("c#1", "c", ("h1", "t2"), "h2", "train"),
    Sequence("d#1", "d", ("t1", "h1"), "t2", "train"),
]
table = build_weight_table(seqs, scheme)
print("history shares:", table.gh_tr)
print("target shares: ", table.gh_ta)
print("group weights: ", table.group_weights)
print("sample weights:", table.sample_weights)

###############################################################################
# A trainer multiplies each sample's loss by its weight. The combinator
# returns the sum; divide by the sample count for a mean.

losses = {"a#1": 2.1, "b#1": 1.7, "c#1": 2.4, "d#1": 3.0}
print("weighted loss (sum):", weighted_loss(losses, table))
