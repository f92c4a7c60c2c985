"""Smoke test for the mdidecoy extension module.

Build and install first, e.g. `pip install crates/python` or
`maturin develop -m crates/python/Cargo.toml`.
"""

import json

import mdidecoy as md


def main():
    d = md.PhotonDistribution.coherent(0.5, 20)
    assert abs(d.probs[0] - 0.6065306597126334) < 1e-15
    assert d.tail_mass < 1e-12

    alice = md.SourceTriple.coherent([0.01, 0.1, 0.5])
    bob = md.SourceTriple.thermal([0.01, 0.1, 0.5])
    assert alice.condition_holds() and bob.condition_holds()

    channel = md.ChannelParams(total_loss_db=20.0)
    stats = md.simulate(alice, bob, channel)
    report = md.bound_report(stats, alice, bob)
    y, _ = md.true_yields(channel, 20)
    assert report["y11_14"] <= report["y11_123"] <= y[1][1] + 1e-9
    assert 0.0 <= report["e11_upper"] <= 1.0

    again = md.ObservedStatistics.from_json(stats.to_json())
    assert again.gains == stats.gains

    try:
        md.SourceTriple.coherent([0.1, 0.1, 0.5])
    except ValueError:
        pass
    else:
        raise AssertionError("coinciding intensities must be rejected")

    rate = md.link_key_rate(alice, alice, channel, method="y11_123")
    limit = md.link_key_rate(alice, alice, channel, method="infinite")
    assert 0.0 < rate["rate"] <= limit["rate"]

    best = md.optimize_signal_intensity(0.01, 0.1, channel, method="y11_123")
    assert 0.1 < best["mu_s"] < 1.0 and best["rate"] >= rate["rate"]

    config = {
        "version": 1,
        "alice": {"family": "coherent", "intensities": [0.01, 0.1, 0.5]},
        "bob": {"family": "coherent", "intensities": [0.01, 0.1, 0.5]},
        "sweep": {"loss_db_start": 0, "loss_db_end": 10, "loss_db_step": 5},
        "methods": ["y11_123", "y11_14"],
    }
    csv = md.run_sweep(json.dumps(config)).splitlines()
    assert csv[0].startswith("loss_db,true_y11,y11_123") and len(csv) == 4

    passed, summary = md.verify(instances=100, seed=1)
    assert passed and summary["underbound_123"][1] == 0

    print("smoke test passed")


if __name__ == "__main__":
    main()
