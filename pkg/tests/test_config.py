import json

import pytest

from seg25d import config as C


def test_published_defaults_dump():
    cfg = json.loads(C.dump_config(C.load_config()))
    assert cfg["target_spacing"] == [2.0, 2.0, 2.0]
    assert cfg["fov_mm"] == [256.0, 256.0, 360.0]
    assert cfg["window"] == [100.0, 250.0]
    assert cfg["neighbor_offset_mm"] == 4.0
    t = cfg["train"]
    assert (t["lr"], t["beta1"], t["beta2"], t["decay"], t["epochs"]) == (1e-4, 0.9, 0.999, 1e-3, 100)
    a = cfg["aug"]
    assert (a["scale"], a["shift_px"], a["rot_deg"]) == (0.10, 10.0, 20.0)
    geo = C.derived_geometry(cfg)
    assert geo["dims"] == [128, 128, 180]
    assert geo["neighbor_offset_slices"] == [2, 2, 2]


def test_roundtrip_and_overrides(tmp_path):
    cfg = C.load_config(overrides=["train.epochs=3", "aug.enabled=false", "input_mode=body",
                                   "target_spacing=[1,1,1.5]"])
    assert cfg["train"]["epochs"] == 3 and cfg["aug"]["enabled"] is False
    assert cfg["input_mode"] == "body" and cfg["target_spacing"] == [1, 1, 1.5]
    path = tmp_path / "c.json"
    C.dump_config(cfg, path)
    assert C.load_config(path) == cfg


def test_partial_file_merges_over_defaults(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"train": {"seed": 9}}))
    cfg = C.load_config(tmp_path / "c.json")
    assert cfg["train"]["seed"] == 9 and cfg["train"]["epochs"] == 100


@pytest.mark.parametrize("bad", [["nope=1"], ["train.nope=1"], ["train=1"], ["window=[250,100]"],
                                 ["postproc.connectivity=18"], ["fusion.rule=majority"], ["epochs"]])
def test_bad_overrides(bad):
    with pytest.raises(C.ConfigError):
        C.load_config(overrides=bad)


def test_seed_and_derived_objects():
    cfg = C.load_config()
    C.apply_seed(cfg, 42)
    tc = C.train_config(cfg, "coronal")
    assert tc.seed == 42 and tc.augment.seed == 42 and tc.orientation == "coronal"
    assert C.phantom_params(cfg).seed == 42
    cfg["aug"]["enabled"] = False
    assert C.train_config(cfg, "axial").augment is None
