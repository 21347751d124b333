"""Regenerate the explorer test fixtures from the CLI (deterministic)."""
import pathlib
import subprocess
import sys

root = pathlib.Path(__file__).resolve().parents[1]
fixtures = root / "frontend" / "tests" / "fixtures"
fixtures.mkdir(parents=True, exist_ok=True)

sys.path.insert(0, str(root / "tests"))
from conftest import make_toy_rows  # noqa: E402

data = fixtures / "toy.csv"
data.write_text(make_toy_rows(seed=7, per_seq=50))
doc = fixtures / "toy_document.json"
subprocess.run(
    ["catsgrid", "fit", "--input", str(data), "--out", str(doc),
     "--rounds", "10", "--seed", "0"],
    check=True,
)
for tag, level in (("level0", "0"), ("level035", "0.35"), ("level07", "0.7"), ("level1", "1")):
    for cluster in ("0", "1"):
        out = fixtures / f"golden_freq_{tag}_c{cluster}.csv"
        result = subprocess.run(
            ["catsgrid", "report", "--input", str(doc), "--cluster", cluster,
             "--kind", "freq", "--level", level, "--out", str(out)],
        )
        if result.returncode != 0:
            if out.exists():
                out.unlink()
            print(f"skip cluster {cluster} at level {level} (not present)")
print("fixtures written to", fixtures)
