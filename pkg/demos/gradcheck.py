"""Compare recorded gradients with central differences for every module.

    python3 demos/gradcheck.py
"""

from psrn.diagnostics import THRESHOLD, run_checks

for r in run_checks():
    print(f"{r.module:18s} max rel err {r.error:.2e}  {r.seconds:5.1f}s  {'ok' if r.passed else 'FAIL'}")
    worst = max(r.per_tensor, key=r.per_tensor.get)
    print(f"{'':18s} worst tensor {worst}")
print(f"threshold {THRESHOLD:g}")
