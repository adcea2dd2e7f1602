"""Write the reference models and trees as JSON files for the command line tool."""
import sys
from pathlib import Path

from maimkit import games, save_model, save_tree

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demos/models")
out.mkdir(parents=True, exist_ok=True)
for name, make in games.MODELS.items():
    save_model(make(), out / f"{name}.json")
save_tree(games.taxi_efg(), out / "taxi-tree.json")
save_tree(games.absentminded_driver(), out / "driver.json")
print("wrote", ", ".join(sorted(p.name for p in out.iterdir())))
