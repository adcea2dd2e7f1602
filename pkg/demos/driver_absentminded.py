"""The absentminded driver: one information set visited twice, turned into a model."""
import numpy as np

from maimkit import absentminded_transform, check_equivalence, expected_utilities, games
from maimkit.model import Cpd

tree = games.absentminded_driver()
model = absentminded_transform(tree)
print("edges:", model.graph.edges)
for p_exit in np.linspace(0, 1, 7):
    eu = expected_utilities(model, {"D": Cpd("D", (), [p_exit, 1 - p_exit])})[1]
    print(f"exit with p={p_exit:.3f}: {eu:.4f}")
print("equivalent to the tree:", check_equivalence(tree, model, trials=20, rng=0).ok)
