"""
A full comparison from a config file
====================================

Equivalent to ``nndoa compare configs/nn_vs_music.json out/``. Every file
in the output directory is reproducible from the config and its seed.
"""
import sys
from pathlib import Path

from nndoa.harness.experiment import ExperimentConfig, run_experiment

root = Path(__file__).resolve().parent.parent
config = Path(sys.argv[1]) if len(sys.argv) > 1 else root / "configs" / "nn_vs_music.json"
out = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("out") / config.stem

cfg = ExperimentConfig.load(config)
for report in run_experiment(cfg, out):
    s = report.summary
    extra = f", merged {s['merged_count']}" if "merged_count" in s else ""
    print(f"{report.series:>10s}: median {s['median']:.3f} deg, p90 {s['p90']:.3f} deg{extra}")
print("reports in", out)
for f in sorted(out.iterdir()):
    print("  ", f.name)
