"""Two taxi drivers pick a hotel in turn: all pure NE, then the single SPE."""
from maimkit import expected_utilities, games, pure_nash, relevance_graph, spe_solve

model = games.taxi()
print("relevance edges:", relevance_graph(model).edges)

for prof in pure_nash(model):
    eu = expected_utilities(model, prof.to_rules(model))
    print("NE ", prof.as_dict(), eu)

(spe,) = spe_solve(model)
print("SPE", spe.as_dict(), expected_utilities(model, spe.to_rules(model)))
