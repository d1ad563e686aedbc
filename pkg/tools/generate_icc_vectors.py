"""Regenerate the shared ICC validation corpus.

The corpus pins the validation contract mirrored by the browser client:
range bounds, the five ordering constraints, and the eigenvalue gate at a
stated (J, K). Run from the repository root:

    python tools/generate_icc_vectors.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ce_lcrt.correlation import (
    IccVector,
    is_positive_definite,
    min_eigenvalue,
    validate_ordering,
)


def classify(rho: IccVector, J: int, K: int) -> dict:
    violations = validate_ordering(rho)
    ordering_ok = not violations
    pd = is_positive_definite(rho, J, K) if ordering_ok else None
    return {
        "orderingOk": ordering_ok,
        "violated": sorted({v.split(":")[0] for v in violations}),
        "positiveDefinite": pd,
        "valid": ordering_ok and bool(pd),
    }


def main() -> None:
    rng = np.random.default_rng(8101)
    vectors = []

    def add(rho: IccVector, J: int, K: int) -> None:
        vectors.append({"icc": rho.to_dict(), "J": J, "K": K,
                        "expect": classify(rho, J, K)})

    # hand-picked anchors
    add(IccVector(0.05, 0.025, 0.05, 0.025, 0.02, 0.010, 0.5), 2, 14)
    add(IccVector(0.048, 0.042, 0.020, 0.018, 0.007, 0.004, 0.75), 8, 36)
    add(IccVector(0.05, 0.06, 0.05, 0.025, 0.02, 0.010, 0.5), 2, 14)    # (i)
    add(IccVector(0.05, 0.025, 0.05, 0.03, 0.02, 0.010, 0.5), 2, 14)
    add(IccVector(0.05, 0.025, 0.05, 0.026, 0.02, 0.010, 0.5), 2, 14)
    add(IccVector(0.05, 0.025, 0.05, 0.025, 0.06, 0.010, 0.5), 2, 14)   # (iii)
    add(IccVector(0.05, 0.025, 0.05, 0.025, 0.03, 0.028, 0.5), 2, 14)   # (iv)
    add(IccVector(0.05, 0.025, 0.05, 0.025, 0.02, 0.010, 0.01), 2, 14)  # (v)
    add(IccVector(0.1, 0.0, 0.1, 0.0, 0.0, 0.0, 0.9999), 3, 2)          # eigen gate
    add(IccVector(1.2, 0.0, 0.1, 0.0, 0.0, 0.0, 0.1), 2, 5)             # range

    # random valid draws
    while sum(1 for v in vectors if v["expect"]["valid"]) < 60:
        J = int(rng.integers(1, 10))
        K = int(rng.integers(2, 60))
        r0e = float(rng.uniform(0.01, 0.3))
        r0c = float(rng.uniform(0.01, 0.3))
        r1e = r0e * float(rng.uniform(0, 1))
        r1c = r0c * float(rng.uniform(0, 1))
        r0ec = min(r0e, r0c) * float(rng.uniform(0, 1))
        r1ec = min(r1e, r1c, r0ec) * float(rng.uniform(0, 1))
        r2ec = float(rng.uniform(r0ec, 0.9))
        rho = IccVector(r0e, r1e, r0c, r1c, r0ec, r1ec, r2ec)
        if validate_ordering(rho) != []:
            continue
        # keep the eigenvalue gate decisively away from the tolerance so the
        # browser mirror classifies identically in double precision
        if abs(min_eigenvalue(rho, J, K)) < 1e-6:
            continue
        if is_positive_definite(rho, J, K):
            add(rho, J, K)

    # random invalid draws: perturb one constraint at a time
    breakers = [
        lambda r: r._replace_field("rho1E", r.rho0E + 0.02),
        lambda r: r._replace_field("rho1C", r.rho0C + 0.02),
        lambda r: r._replace_field("rho0EC", min(r.rho0E, r.rho0C) + 0.05),
        lambda r: r._replace_field("rho1EC", min(r.rho1E, r.rho1C) + 0.03),
        lambda r: r._replace_field("rho2EC", r.rho0EC - 0.05 if r.rho0EC > 0.05 else -0.5),
        lambda r: r._replace_field("rho0E", 1.5),
        lambda r: r._replace_field("rho2EC", 0.999),
    ]

    def _replace_field(self: IccVector, name: str, value: float) -> IccVector:
        data = self.to_dict()
        data[name] = value
        return IccVector.from_dict(data)

    IccVector._replace_field = _replace_field  # type: ignore[attr-defined]
    while sum(1 for v in vectors if not v["expect"]["valid"]) < 60:
        J = int(rng.integers(1, 10))
        K = int(rng.integers(2, 60))
        rho = IccVector(0.1, 0.05, 0.1, 0.05, 0.04, 0.02, 0.5)
        breaker = breakers[int(rng.integers(0, len(breakers)))]
        jitter = float(rng.uniform(-0.01, 0.01))
        base = IccVector(0.1 + jitter, 0.05, 0.1 - jitter, 0.05, 0.04, 0.02, 0.5)
        rho = breaker(base)
        entry_class = classify(rho, J, K)
        if entry_class["orderingOk"] and abs(min_eigenvalue(rho, J, K)) < 1e-6:
            continue
        if not entry_class["valid"]:
            add(rho, J, K)

    out = Path(__file__).resolve().parent.parent / "shared" / "icc-test-vectors.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps({"vectors": vectors}, indent=1, sort_keys=True) + "\n")
    valid = sum(1 for v in vectors if v["expect"]["valid"])
    print(f"wrote {len(vectors)} vectors ({valid} valid, {len(vectors) - valid} invalid)")


if __name__ == "__main__":
    main()
