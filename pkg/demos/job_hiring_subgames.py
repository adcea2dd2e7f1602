"""Job hiring has a relevance cycle, so the full game is its only subgame.
The extra-subgames model has four proper subgames that its tree hides."""
from maimkit import condensed_relevance_graph, games, maim_to_efg, relevance_graph, subgame_bases

jobs = games.job_hiring()
print("job hiring relevance edges:", relevance_graph(jobs).edges)
print("components:", condensed_relevance_graph(relevance_graph(jobs)).components)
print("bases:", [b.nodes for b in subgame_bases(jobs)])

extra = games.extra_subgames()
bases = subgame_bases(extra)
print("extra-subgames bases:", len(bases), "(the last is the full game)")
for b in bases:
    print("  ", b.nodes)
tree = maim_to_efg(extra)
print("tree nodes:", len(tree))
