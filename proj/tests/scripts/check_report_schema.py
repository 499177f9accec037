"""Runs eval for two mock models, emits a JSON report and validates it."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main():
    binary, source = sys.argv[1], Path(sys.argv[2])
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        preds = []
        for model, mode in (("m1", "hash_logits"), ("m2", "uniform")):
            for bench in ("dbrd", "arc_nl"):
                out = tmp / f"{bench}.{model}.jsonl"
                subprocess.run([binary, "--output-dir", str(tmp), "--log-level", "warn", "eval",
                                "--benchmark", str(source / "benchmarks" / f"{bench}.toml"),
                                "--model", model, "--mock-mode", mode, "--predictions", str(out)],
                               check=True, stdout=subprocess.DEVNULL)
                preds.append(str(out))
        overview = tmp / "overview.json"
        overview.write_text(json.dumps({"models": [
            {"model": "m1", "size": "2B", "fertility": 1.9,
             "tokens_per_second": {"mean": 1000.0, "ci_half_width": 5.0}},
            {"model": "m2"}]}))
        report = tmp / "report.json"
        subprocess.run([binary, "--output-dir", str(tmp), "--log-level", "warn", "report",
                        "--predictions", ",".join(preds), "--format", "json",
                        "--overview", str(overview), "--output", str(report)],
                       check=True, stdout=subprocess.DEVNULL)
        schema = json.loads((source / "data" / "report.schema.json").read_text())
        doc = json.loads(report.read_text())
        jsonschema.validate(doc, schema)
        assert len(doc["models"]) == 2 and len(doc["overview"]) == 2
    print("report schema: ok")


if __name__ == "__main__":
    main()
