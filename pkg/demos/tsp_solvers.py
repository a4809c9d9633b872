"""
Exact, nearest-neighbour and MST-doubling tours on a small network
==================================================================

"""
import numpy as np

from botnet_tsp.graph import mst_weight, random_metric_instance
from botnet_tsp.tsp import (
    TspDecision,
    canonical_tour_count,
    decide_tsp,
    domination_count,
    exact_tour_bruteforce,
    mst_double_tour,
    nn_tour,
    tour_cost,
)

# eight hosts scattered on a 100x100 plane, distances rounded up to integers
g = random_metric_instance(8, seed=3, integer=True)
print(g.weights.astype(int))

# brute force walks all (n-1)!/2 distinct cycles
print("distinct tours:", canonical_tour_count(g.n))
best, opt = exact_tour_bruteforce(g)
print("optimal  ", best.order, opt)

# greedy: always hop to the closest unvisited host
nn = nn_tour(g, 0)
print("nearest  ", nn.order, tour_cost(g, nn))

# preorder walk of the minimum spanning tree, at most twice the MST weight
double = mst_double_tour(g)
print("mst x2   ", double.order, tour_cost(g, double), "<=", 2 * mst_weight(g))

# how many tours is the greedy tour at least as good as?
print("NN dominates", domination_count(g, nn), "of", canonical_tour_count(g.n))

# decision form: is there a tour of cost <= k?
for k in (opt - 1, opt):
    print(f"tour <= {k}?", decide_tsp(TspDecision(g, k)))

# greedy vs optimal over many instances
ratios = []
for seed in range(200):
    h = random_metric_instance(8, seed)
    ratios.append(tour_cost(h, nn_tour(h, 0)) / exact_tour_bruteforce(h)[1])
ratios = np.array(ratios)
print(f"NN/optimal over 200 instances: mean {ratios.mean():.3f}, worst {ratios.max():.3f}")
