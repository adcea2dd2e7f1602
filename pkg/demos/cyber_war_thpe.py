"""Cyber-war: two pure NE, but only mutual attack survives trembling hands."""
from maimkit import games, is_thpe, pure_nash

model = games.cyber_war()
for prof in pure_nash(model):
    v = is_thpe(model, prof)
    print(prof.as_dict(), "->", v.verdict)
    if v.witness:
        w = v.witness
        print(f"  {w['action']!r} weakly dominates {w['instead_of']!r} at {w['decision']} {w['context']}")
        for item in v.evidence[:3]:
            alt, cur = item["witness_payoffs"]
            print(f"  eps={item['eps']:.4g}: {alt:.6g} > {cur:.6g}")
