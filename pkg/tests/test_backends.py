"""The compiled kernels and the plain-numpy fallback must agree exactly.

The fallback is selected by an environment flag read at import time, so the
numpy run happens in a subprocess; trajectories are compared byte for byte
through their JSON serialization.
"""

import json
import os
import subprocess
import sys
from pathlib import Path

import marketflow as mf

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO = REPO_ROOT / "scenarios" / "table1.scenario"

DUMP_SNIPPET = """
import sys
import marketflow as mf
from marketflow import write_trajectory

doc = mf.load_scenario_file(sys.argv[1])
if len(sys.argv) > 2:
    tree = mf.apply_overrides(doc.tree, {"integrator.method": sys.argv[2]})
    doc = mf.parse_tree(tree, name=doc.name)
payload = write_trajectory(doc.simulate(), "json")
sys.stdout.buffer.write(mf.BACKEND.encode() + b"\\n" + payload)
"""


def run_backend(disable_jit: bool, method: str = None) -> tuple:
    env = dict(os.environ)
    if disable_jit:
        env["MARKETFLOW_DISABLE_JIT"] = "1"
    else:
        env.pop("MARKETFLOW_DISABLE_JIT", None)
    cmd = [sys.executable, "-c", DUMP_SNIPPET, str(SCENARIO)]
    if method:
        cmd.append(method)
    proc = subprocess.run(cmd, capture_output=True, check=True, env=env)
    backend, _, payload = proc.stdout.partition(b"\n")
    return backend.decode(), payload


def test_env_flag_selects_numpy_backend():
    backend, _ = run_backend(disable_jit=True)
    assert backend == "numpy"


def test_default_backend_is_compiled():
    # guards against silently losing the fast path in this environment
    assert mf.JIT_ENABLED
    assert mf.BACKEND == "numba"


def test_backends_agree_bit_for_bit_euler():
    backend_a, payload_a = run_backend(disable_jit=False)
    backend_b, payload_b = run_backend(disable_jit=True)
    assert (backend_a, backend_b) == ("numba", "numpy")
    assert payload_a == payload_b


def test_backends_agree_bit_for_bit_rk4():
    _, payload_a = run_backend(disable_jit=False, method="rk4")
    _, payload_b = run_backend(disable_jit=True, method="rk4")
    tree = json.loads(payload_a)
    assert tree["params_used"]["wta"] == 0.3
    assert payload_a == payload_b
