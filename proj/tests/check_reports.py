"""Run every epcag-lab command once and validate the JSON reports against the schema."""
import json
import pathlib
import shutil
import subprocess
import sys

import jsonschema

lab, schema_path, out = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
shutil.rmtree(out, ignore_errors=True)

runs = [
    (["simulate", "--problem", "paper-example-1", "--x0", "0.1", "--t-end", "2"], 0),
    (["backcontinue", "--problem", "paper-example-1", "--t0", "2", "--x0", "1", "--t-target", "0"], 0),
    (["backcontinue", "--problem", "paper-example-1", "--t0", "1", "--x0", "100", "--t-target", "0"], 2),
    (["manifold", "--problem", "diag-dichotomy", "--c", "0.5", "--jacobian"], 0),
    (["manifold", "--problem", "diag-dichotomy", "--side", "unstable", "--grid-of-c", "-1,1,3"], 0),
    (["bounded", "--problem", "forced-scalar", "--coupling", "0.1"], 0),
    (["periodic", "--problem", "periodic-coupled"], 0),
    (["check", "--l", "0.2", "--mu", "1", "--theta", "1"], 4),
    (["check", "--problem", "diag-dichotomy"], 0),
    (["reduce", "--problem", "diag-dichotomy"], 0),
    (["verify", "--only", "1"], 0),
]

schema = json.loads(schema_path.read_text())
validator = jsonschema.Draft7Validator(schema)
failures = 0
for i, (args, want) in enumerate(runs):
    d = out / str(i)
    proc = subprocess.run([lab, *args, "--out", str(d), "--stamp", "s"], capture_output=True, text=True)
    if proc.returncode != want:
        print(f"FAIL {' '.join(args)}: exit {proc.returncode}, expected {want}\n{proc.stderr}")
        failures += 1
        continue
    reports = sorted(d.glob("*.json"))
    if len(reports) != 1:
        print(f"FAIL {' '.join(args)}: {len(reports)} JSON reports")
        failures += 1
        continue
    doc = json.loads(reports[0].read_text())
    errors = list(validator.iter_errors(doc))
    if doc["exit_code"] != want:
        errors.append(f"exit_code {doc['exit_code']} in report")
    for e in errors:
        print(f"FAIL {reports[0].name}: {getattr(e, 'message', e)}")
    failures += bool(errors)
    if not errors:
        print(f"ok   {reports[0].name}")

sys.exit(1 if failures else 0)
