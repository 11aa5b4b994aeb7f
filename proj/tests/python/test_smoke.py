# Copyright The mvseg Authors
# SPDX-License-Identifier: Apache-2.0

import json
import os
import subprocess

import jsonschema
import numpy as np
import pytest

import mvseg

SMALL = {
    "dims": [40, 40, 40],
    "spacing": [0.9, 0.9, 0.9],
    "atrium_radius": 8.0,
    "leaflet_thickness": 2.0,
    "leaflet_sag": 3.0,
}


def test_import_and_version():
    assert isinstance(mvseg.__version__, str) and mvseg.__version__
    assert mvseg.worker_count() >= 1


def test_phantom_and_nrrd_round_trip():
    ph = mvseg.generate_phantom(SMALL)
    vol = ph["volume"]
    assert vol.shape == (40, 40, 40)
    assert vol.dtype == np.float32
    assert not np.any(ph["gt_bloodpool"] & ph["gt_leaflet"])
    assert len(ph["annulus"]["points"]) == 12
    data = mvseg.write_nrrd(vol, ph["geometry"], gzip=True)
    back, geometry = mvseg.read_nrrd(data)
    assert np.array_equal(back, vol)
    assert geometry["dims"] == [40, 40, 40]


def test_metrics_and_mesh_io():
    v, t = mvseg.phantom_proximal_mesh(SMALL, 0.5)
    report = mvseg.masd((v, t), (v, t))
    assert report["masd_mm"] == 0.0
    stl = mvseg.write_mesh((v, t), "stl")
    assert len(stl) == 84 + 50 * len(t)
    ph = mvseg.generate_phantom(SMALL)
    assert mvseg.dice(ph["gt_leaflet"], ph["gt_leaflet"], ph["geometry"]) == 1.0


def test_session_workflow():
    ph = mvseg.generate_phantom(SMALL)
    s = mvseg.Session.from_phantom(SMALL)
    assert s.stage == "VOLUME_LOADED"
    s.set_annulus(ph["annulus"])
    a = s.step("BLOODPOOL", 10)
    b = s.step("BLOODPOOL", 5)
    assert b["iterations_done"] == 15
    assert s.undo()["checksum"] == a["checksum"]
    assert s.accept("BLOODPOOL") == "BP_ACCEPTED"
    png = s.slice_png("k", 20, "cur,annulus")
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    restored = mvseg.Session.load(s.save())
    assert restored.stage == "BP_ACCEPTED"
    assert restored.summary()["stage"] == "BP_ACCEPTED"


def test_errors_carry_codes():
    s = mvseg.Session.from_phantom(SMALL)
    with pytest.raises(mvseg.Error) as err:
        s.step("BLOODPOOL", 3)
    assert err.value.code == "WRONG_STAGE"
    with pytest.raises(mvseg.Error) as err:
        s.undo()
    assert err.value.code == "NOTHING_TO_UNDO"
    with pytest.raises(mvseg.Error) as err:
        mvseg.fit_annulus({"points": [[0, 0, 0]] * 3, "probe_dir": [0, 0, 1]})
    assert err.value.code == "INVALID_ARGUMENT"
    assert err.value.detail == "points"


@pytest.mark.skipif("MVSEG_CLI" not in os.environ, reason="MVSEG_CLI not set")
def test_cli_manifest_matches_schema(tmp_path):
    cli = os.environ["MVSEG_CLI"]
    schema_dir = os.environ["MVSEG_SCHEMAS"]
    args = ["--dim", "40", "--spacing", "0.9", "--radius", "8", "--thickness", "2", "--sag", "3"]
    subprocess.run([cli, "phantom", "--out", str(tmp_path / "ph"), *args], check=True, capture_output=True)
    subprocess.run(
        [
            cli, "segment",
            "--input", str(tmp_path / "ph" / "volume.nrrd"),
            "--annulus", str(tmp_path / "ph" / "annulus.json"),
            "--bp-iters", "20", "--leaflet-iters", "10",
            "--out", str(tmp_path / "seg"),
        ],
        check=True,
        capture_output=True,
    )
    manifest = json.loads((tmp_path / "seg" / "run_manifest.json").read_text())
    with open(os.path.join(schema_dir, "run_manifest.schema.json")) as f:
        jsonschema.validate(manifest, json.load(f))
    assert manifest["budgets"] == {"bloodpool": 20, "leaflet": 10}


@pytest.mark.skipif("MVSEG_CLI" not in os.environ, reason="MVSEG_CLI not set")
def test_cli_usage_error(tmp_path):
    r = subprocess.run([os.environ["MVSEG_CLI"], "segment"], capture_output=True)
    assert r.returncode != 0
