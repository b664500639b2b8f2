#!/usr/bin/env python3
"""Smoke test for the irsnet_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/,
stages it into a temporary directory under the importable name, and
exercises every exported function.

Run from the repository root:

    cargo build -p irsnet-py
    python3 python/smoke_test.py
"""

import importlib.util
import json
import math
import os
import shutil
import sys
import tempfile

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def locate_cdylib():
    override = os.environ.get("IRSNET_PY_LIB")
    candidates = [override] if override else [
        os.path.join(REPO_ROOT, "target", profile, name)
        for profile in ("debug", "release")
        for name in ("libirsnet_py.so", "libirsnet_py.dylib", "irsnet_py.dll")
    ]
    for path in candidates:
        if path and os.path.exists(path):
            return path
    sys.exit(
        "error: compiled extension not found; run `cargo build -p irsnet-py` "
        "first (searched target/debug and target/release)"
    )


def load_module(libpath, stage_dir):
    suffix = ".pyd" if libpath.endswith(".dll") else ".so"
    staged = os.path.join(stage_dir, "irsnet_py" + suffix)
    shutil.copyfile(libpath, staged)
    spec = importlib.util.spec_from_file_location("irsnet_py", staged)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    libpath = locate_cdylib()
    checks = 0
    with tempfile.TemporaryDirectory() as stage_dir:
        m = load_module(libpath, stage_dir)

        assert m.version(), "version() should be non-empty"
        checks += 1

        config = json.loads(m.default_config())
        assert config["trials"] == 100
        assert config["topology"]["num_irs"] == 5
        assert [s for s in config["schemes"]] == [
            "proposed", "es", "pes", "gs", "na", "ra", "pra",
        ]
        checks += 1

        # Scalar helpers against closed-form values.
        assert abs(m.rayleigh_distance(0.012, 1e-3) - 0.288) < 1e-12
        assert abs(m.noise_power_dbm(-174.0, 1e10, 10.0) - (-64.0)) < 1e-9
        assert m.rate(1.0) == 1.0
        checks += 1

        # Bad input surfaces as ValueError, not a crash.
        try:
            m.rayleigh_distance(-1.0, 1e-3)
        except ValueError:
            pass
        else:
            raise AssertionError("negative aperture should raise ValueError")
        checks += 1

        # Embedded fixtures all pass.
        report = json.loads(m.run_fixtures())
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        assert not failed, f"fixture checks failed: {failed}"
        checks += 1

        # Deferred acceptance on a 2x2 contest: responder 0 prefers
        # proposer 1, so proposer 0 falls through to responder 1.
        matching = m.match_deferred_acceptance(
            [[0.9, 0.1], [0.8, 0.2]], [[0.3, 0.7], [0.5, 0.4]]
        )
        assert matching == [1, 0], matching
        stable, blocking = m.is_stable(
            matching, [[0.9, 0.1], [0.8, 0.2]], [[0.3, 0.7], [0.5, 0.4]]
        )
        assert stable and blocking == []
        checks += 1

        # A small trial runs and is deterministic.
        small = json.dumps({
            "seed": 11,
            "trials": 2,
            "topology": {
                "num_transmitters": 2, "num_receivers": 2, "num_irs": 3,
                "elements_x": 4, "elements_y": 4,
            },
            "schemes": ["proposed", "ra"],
        })
        first = m.run_trial(small, 0)
        again = m.run_trial(small, 0)
        assert first == again, "same (config, trial) must reproduce exactly"
        trial = json.loads(first)
        assert [s["scheme"] for s in trial["schemes"]] == ["proposed", "ra"]
        assert all(math.isfinite(s["sum_rate_bps_per_hz"]) for s in trial["schemes"])
        checks += 1

        # run_trials agrees with the single-trial entry point.
        batch = json.loads(m.run_trials(small))
        assert len(batch) == 2
        assert batch[0] == trial
        checks += 1

        # A sweep aggregates one row per (value, scheme).
        sweep = json.loads(m.run_sweep(json.dumps({
            "seed": 11,
            "trials": 2,
            "topology": {
                "num_transmitters": 2, "num_receivers": 2, "num_irs": 3,
                "elements_x": 4, "elements_y": 4,
            },
            "schemes": ["ra"],
            "sweep": {"variable": "tx_power", "values": [15.0, 25.0]},
        })))
        assert len(sweep) == 2
        assert [row["sweep_value"] for row in sweep] == [15.0, 25.0]
        checks += 1

        # Config errors surface as ValueError with the field named.
        try:
            m.run_trial("{}", 0)
        except ValueError as err:
            assert "seed" in str(err)
        else:
            raise AssertionError("missing seed should raise ValueError")
        checks += 1

    print(f"smoke test passed ({checks} checks)")


if __name__ == "__main__":
    main()
