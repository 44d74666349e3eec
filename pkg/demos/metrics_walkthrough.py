"""
Group unfairness by hand
========================

Two groups, three items, two users. We compute history shares, top-k
shares and the unfairness summaries, then check accuracy on a slate.
"""

from itemfair import Slate, custom_scheme, evaluate, gh, gp, group_unfairness, mgu, dgu

# items 1 and 2 are group A, item 3 is group B
scheme = custom_scheme("toy", ["A", "B"], {"1": ["A"], "2": ["A"], "3": ["B"]})

# user histories: one A and two B interactions in total
histories = [["1", "3"], ["3"]]
print("history shares:", gh(histories, scheme))

# the recommender only ever shows A items
slates = [Slate("u1#2", ("1", "2"))]
print("top-2 shares:  ", gp(slates, scheme, 2))

# positive means over-recommended relative to the history
gu = group_unfairness(gh(histories, scheme), gp(slates, scheme, 2))
print("GU:", gu, " MGU:", mgu(gu), " DGU:", dgu(gu))

###############################################################################
# The same numbers come out of ``evaluate``, together with NDCG and HR for
# the target item. Target "2" sits at rank 2, so NDCG@2 = 1/log2(3).

report = evaluate(histories, slates, ["2"], scheme, k=2)
print(f"MGU@2={report.mgu:.4f} DGU@2={report.dgu:.4f} NDCG@2={report.ndcg:.4f} HR@2={report.hr:.1f}")
