"""End-to-end run on the committed fixtures, entirely offline.

The mock backend replays recorded answers keyed by transcript digest, so
the report below is byte-for-byte the one in ``fixtures/report/report.md``.

    python3 demos/fixture_pipeline.py [out_dir]
"""

import os
import sys
import tempfile
from pathlib import Path

from rubric_audit.experiment import ExperimentConfig, RunDir, run_all
from rubric_audit.gateway import MockBackend, ResponseCache

ROOT = Path(__file__).resolve().parents[1]
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="rubric-audit-"))

# config paths are relative to the repository root
os.chdir(ROOT)
cfg = ExperimentConfig.from_file("fixtures/config.json").with_overrides(
    out=str(out / "run"), cache=str(out / "cache.jsonl")
)
failures = run_all(cfg)
print("failures:", failures)

run = RunDir(cfg.out)
report = (run.root / "report/report.md").read_bytes()
# the per-setting summary sits at the top; per-item rows follow
print("\n".join(report.decode().splitlines()[:14]))

same = report == (ROOT / "fixtures/report/report.md").read_bytes()
print("matches committed report:", same)

# second pass: everything comes from the response cache
replay = MockBackend.from_file("fixtures/mock_responses.json")
run_all(cfg, replay, ResponseCache(cfg.cache))
print("backend calls on the warm rerun:", replay.calls)
print("manifest keys:", sorted(run.manifest()))
