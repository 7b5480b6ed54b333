"""Golden-file and exit-code checks for the martquant command-line tool.

usage: run_cli_tests.py BINARY [--update]
"""
import csv
import io
import json
import math
import os
import subprocess
import sys
import tempfile
from pathlib import Path

GOLDEN = Path(__file__).parent / "golden"
REL_TOL = 1e-8
ABS_TOL = 1e-10


def run(binary, *args, env=None):
    full_env = dict(os.environ, **(env or {}))
    return subprocess.run([binary, *args], capture_output=True, text=True, env=full_env, timeout=600)


def close(a, b):
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=ABS_TOL)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(close(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(close(a[k], b[k]) for k in a)
    return a == b


def csv_rows(text, drop=("seconds",)):
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        row = {}
        for k, v in r.items():
            if k in drop:
                continue
            try:
                row[k] = float(v) if v != "" else None
            except ValueError:
                row[k] = v
        out.append(row)
    return out


class Suite:
    def __init__(self, binary, update):
        self.binary = binary
        self.update = update
        self.failures = []

    def check(self, name, ok, detail=""):
        print(("PASS " if ok else "FAIL ") + name + (f": {detail}" if detail and not ok else ""))
        if not ok:
            self.failures.append(name)

    def golden(self, name, value):
        path = GOLDEN / f"{name}.json"
        if self.update:
            path.write_text(json.dumps(value, indent=2, sort_keys=True) + "\n")
        expected = json.loads(path.read_text())
        self.check(f"golden {name}", close(value, expected), f"got {value}")

    def result(self, name, *args, code=0):
        r = run(self.binary, *args)
        self.check(f"{name} exit {code}", r.returncode == code, f"exit {r.returncode}, stderr {r.stderr!r}")
        return r


def main():
    binary = sys.argv[1]
    s = Suite(binary, "--update" in sys.argv)

    r = s.result("quantize primal uniform", "quantize", "--measure", "uniform01", "--mode", "primal", "--n", "5")
    s.golden("quantize_uniform_primal_5", json.loads(r.stdout))
    s.check("quantize summary on stderr", "grid {0.1, 0.3, 0.5, 0.7, 0.9}" in r.stderr, r.stderr)

    r = s.result("quantize dual tri2x", "quantize", "--measure", "builtin:tri2x", "--mode", "dual", "--n", "3")
    out = json.loads(r.stdout)
    s.golden("quantize_tri2x_dual_3", out)
    s.check("tri2x dual grid", close(out["grid"], [0.0, 1 / math.sqrt(3), 1.0]))

    with tempfile.TemporaryDirectory() as tmp:
        m = Path(tmp) / "m.json"
        m.write_text(json.dumps({"dim": 1, "points": [0.0, 1.0, 5.0], "weights": [0.5, 0.25, 0.25]}))
        dest = Path(tmp) / "q.json"
        r = s.result("quantize file --out", "quantize", "--measure", str(m), "--n", "1", "--out", str(dest))
        out = json.loads(dest.read_text())
        s.check("single-point grid is the mean", close(out["grid"], [1.5]), out)
        s.check("--out prints the summary on stdout", "N = 1" in r.stdout, r.stdout)

        pair_mu = json.dumps({"points": [0.0], "weights": [1.0]})
        pair_nu = json.dumps({"points": [-1.0, 1.0], "weights": [0.5, 0.5]})
        r = s.result("mot point mass", "mot", "--mu", pair_mu, "--nu", pair_nu, "--cost", "abs_power:1")
        out = json.loads(r.stdout)
        s.golden("mot_point_mass", out)
        s.check("mot |y-x| value is 1", close(out["value"], 1.0))

        mu = {"points": [0.2, 0.5, 0.7], "weights": [0.3, 0.3, 0.4]}
        nu = {"points": [0.0, 0.4, 1.0], "weights": [0.15, 0.6, 0.25]}  # μ split onto its bracketing points
        r = s.result("mot squared cost", "mot", "--mu", json.dumps(mu), "--nu", json.dumps(nu), "--cost", "abs_power:2")
        moments = sum(w * x * x for x, w in zip(nu["points"], nu["weights"])) - sum(
            w * x * x for x, w in zip(mu["points"], mu["weights"]))
        s.check("squared-cost MOT is the second-moment difference", close(json.loads(r.stdout)["value"], moments))

    r = s.result("mot infeasible", "mot", "--mu", "mu6", "--nu", "mu6check", code=4)
    s.check("infeasible message names Strassen", "Strassen" in r.stderr, r.stderr)
    s.result("unknown measure", "quantize", "--measure", "nope", "--n", "3", code=2)
    s.result("bad mode", "quantize", "--measure", "uniform01", "--mode", "sideways", "--n", "3", code=2)
    s.result("missing grid size", "quantize", "--measure", "uniform01", code=2)

    r = s.result("distance", "distance", "--mu", "tri2x", "--nu",
                 json.dumps({"points": [0.0, 1 / math.sqrt(3), 1.0],
                             "weights": [1 / 9, (1 + 1 / math.sqrt(3)) / 3, (2 - 1 / math.sqrt(3) - 1 / 3) / 3]}))
    out = json.loads(r.stdout)
    s.golden("distance_tri2x_nu_third", out)

    sweep_args = ["sweep", "--mu", "uniform01", "--nu", "tri2x", "--nu-affine", "3,-1.5", "--n", "8,4",
                  "--atoms", "64", "--reference"]
    r = s.result("sweep", *sweep_args)
    rows = csv_rows(r.stdout)
    header = r.stdout.splitlines()[0]
    s.check("sweep header", header == "N,K,e2_N,dp_K,V,V_gap,W_p,AW_p,seconds,status", header)
    s.check("sweep rows sorted by (N, K)", [(x["N"], x["K"]) for x in rows] == [(4, 4), (8, 8)])
    s.check("sweep LF line endings", "\r" not in r.stdout)
    s.check("sweep reports slopes", "log-log slope of e_2,N" in r.stderr, r.stderr)
    s.golden("sweep_uniform_tri2x", rows)
    r2 = run(binary, *sweep_args, "--threads", "2", env={"MARTQUANT_THREADS": "1"})
    s.check("sweep deterministic across thread settings", csv_rows(r2.stdout) == rows)

    r = s.result("reproduce", "reproduce")
    s.check("reproduce all PASS", "FAIL" not in r.stdout and r.stdout.count("PASS") >= 14, r.stdout)
    r = s.result("reproduce --json", "reproduce", "--json")
    report = json.loads(r.stdout)
    s.check("reproduce json all_pass", report["all_pass"] is True)
    s.golden("reproduce", report)
    r = s.result("reproduce --coarse", "reproduce", "--coarse", code=1)
    failed = [line for line in r.stdout.splitlines() if line.startswith("FAIL")]
    s.check("coarse run fails only the W_2^2 line", len(failed) == 1 and "W_2^2(mu, nu_{1/3})" in failed[0], failed)

    r = s.result("help", "--help")
    s.check("help documents exit codes", "Exit codes: 0 ok" in r.stdout and "4 marginals not in convex order" in r.stdout)

    print(f"{len(s.failures)} failure(s)")
    return 1 if s.failures else 0


if __name__ == "__main__":
    sys.exit(main())
