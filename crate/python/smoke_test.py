"""Smoke test for the `gnd` extension module.

Build and install first:

    pip install maturin
    cd crates/python && maturin build --release -o dist && pip install dist/gnd-*.whl
    python python/smoke_test.py
"""

import os
import pathlib
import tempfile

import gnd

ROOT = pathlib.Path(__file__).resolve().parent.parent


def check_code():
    code = gnd.StabilizerCode.rotated_surface(3)
    assert (code.n, code.k, code.m) == (9, 1, 8)
    assert code.is_css and code.known_distance == 3
    assert code.distance(3) == 3
    again = gnd.StabilizerCode.from_qcode(code.to_qcode())
    assert again.fingerprint == code.fingerprint

    # an X error on the centre qubit trips the two Z checks it touches
    err = "IIIIXIIII"
    assert sum(code.syndrome(err)) == 2
    # a logical operator has trivial syndrome and a non-trivial sector
    lx = code.logicals()[0]
    assert sum(code.syndrome(lx)) == 0 and any(code.sector(lx))

    bb = gnd.StabilizerCode.load(ROOT / "data" / "codes" / "bb_18_4_4.qcode")
    assert (bb.n, bb.k) == (18, 4)
    try:
        gnd.StabilizerCode.rotated_surface(4)
    except ValueError:
        pass
    else:
        raise AssertionError("even distance accepted")


def check_dem():
    dem = gnd.DetectorErrorModel.load(ROOT / "data" / "dem" / "repetition_d3_r3.dem")
    assert (dem.num_detectors, dem.num_observables, dem.num_mechanisms) == (8, 1, 21)
    assert gnd.DetectorErrorModel.parse(dem.to_text()).fingerprint == dem.fingerprint
    gammas, betas = gnd.sample(dem, shots=50, seed=3)
    assert len(gammas) == 50 and all(len(g) == 8 for g in gammas)
    assert all(len(b) == 1 for b in betas)


def check_training_and_decoding():
    code = gnd.StabilizerCode.rotated_surface(3)
    a, _ = gnd.sample(code, shots=20, seed=1, p=0.1)
    b, _ = gnd.sample(code, shots=20, seed=1, p=0.1)
    assert a == b

    model, losses = gnd.train(code, 0.1, depth=1, width=4, steps=300, batch=128,
                              lr=3e-3, seed=5, log_every=50)
    assert model.kind == "made" and model.fingerprint == code.fingerprint
    assert losses[-1][1] < losses[0][1], losses
    beta, cond = model.decode_detailed([0] * 8)
    assert beta == [0, 0] and len(cond) == 2 and all(0 <= c <= 1 for c in cond)

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "m.ckpt")
        model.save(path)
        loaded = gnd.Model.load(path, code)
        assert loaded.to_bytes() == model.to_bytes()
        try:
            gnd.Model.load(path, gnd.StabilizerCode.rotated_surface(5))
        except gnd.GndError:
            pass
        else:
            raise AssertionError("fingerprint mismatch not detected")

    mld = gnd.Decoder.exact_mld(code, 0.1)
    bposd = gnd.Decoder.bp_osd(code, 0.1)
    gammas, _ = gnd.sample(code, shots=100, seed=2, p=0.1)
    assert len(mld.decode_batch(gammas)) == 100
    assert len(bposd.decode_batch(gammas)) == 100

    rows = {d.name: gnd.estimate_ler(d, code, 0.1, shots=4000, seed=9)
            for d in (mld, bposd, gnd.Decoder.from_model(model))}
    for row in rows.values():
        assert row["ci_lo"] <= row["ler"] <= row["ci_hi"]
    # exact MLD is optimal up to sampling noise
    assert rows["mld"]["ler"] <= rows["bposd"]["ler"] + 0.01, rows
    assert rows["mld"]["ler"] <= rows["gnd"]["ler"] + 0.01, rows


if __name__ == "__main__":
    check_code()
    check_dem()
    check_training_and_decoding()
    print("smoke test passed")
