"""End-to-end smoke checks for the python bindings."""

import math

import pytest

import pairlock as pl


def small_config():
    cfg = pl.ModelConfig()
    cfg.aap_h = cfg.aap_w = 4
    cfg.fc_dims = [32, 16, 3]
    cfg.resize_target = 16
    cfg.dropout_rate = 0.0
    return cfg


def test_geometry():
    a = pl.BoundingBox(0, 0, 10, 10)
    b = pl.BoundingBox(0, 0, 10, 5)
    assert pl.iou(a, a) == 1.0
    assert pl.iou(a, b) == pytest.approx(0.5)
    u = pl.union_box(a, pl.BoundingBox(5, 5, 15, 15))
    assert (u.x_min, u.y_min, u.x_max, u.y_max) == (0, 0, 15, 15)


def test_synth_pairs_and_eval(tmp_path):
    cfg = pl.SynthConfig()
    cfg.scene_count = 3
    cfg.image_size = 64
    cfg.seed = 4
    scenes = pl.generate_synthetic(cfg, str(tmp_path))
    assert len(scenes) == 3
    assert (tmp_path / "annotations.json").exists()

    dets = pl.detections_from_ground_truth(scenes)
    preds = []
    for scene, det in zip(scenes, dets):
        sp = pl.ScenePredictions()
        sp.scene_id = scene.id
        pairs = []
        for pair in pl.enumerate_pairs(det.humans(), det.firearms()):
            pair.label = (
                pl.PairLabel.GunHuman
                if pair.firearm.cls == pl.ObjectClass.Gun
                else pl.PairLabel.RifleHuman
            )
            # oracle scoring: 1 for true carry pairs, 0.1 otherwise
            hit = (pair.human_index, pair.firearm_index) in set(scene.carry_pairs)
            pairs.append(pl.score_pair(pair, 1.0 if hit else 0.1))
        sp.pairs = pl.maxout(pairs)
        preds.append(sp)

    report = pl.evaluate_hold(preds, scenes)
    assert report.ap_hold is not None
    assert report.ap_hold == pytest.approx(1.0)


def test_model_train_predict_roundtrip(tmp_path):
    cfg = small_config()
    scfg = pl.SynthConfig()
    scfg.scene_count = 2
    scfg.image_size = 64
    scfg.seed = 9
    scenes = pl.generate_synthetic(scfg, str(tmp_path))

    samples = []
    for scene, det in zip(scenes, pl.detections_from_ground_truth(scenes)):
        img = pl.read_pnm(str(tmp_path / scene.image_path))
        for pair in pl.assign_training_labels(det.humans(), det.firearms(), scene):
            samples.append(pl.make_train_sample(img, pair, cfg))
    assert samples

    net = pl.init_model(cfg, 1)
    tcfg = pl.TrainConfig()
    tcfg.learning_rate = 1e-3
    tcfg.epochs = 2
    tcfg.seed = 1
    log = pl.train(net, samples, tcfg)
    assert len(log) == 2
    assert math.isfinite(log[-1].mean_l_c)

    probs = pl.predict_pair(net, samples[0].apbb)
    assert len(probs) == 3
    assert sum(probs) == pytest.approx(1.0)

    ckpt = tmp_path / "model.bin"
    pl.save_model(str(ckpt), net)
    loaded = pl.load_model(str(ckpt))
    assert pl.predict_pair(loaded, samples[0].apbb) == probs


def test_baselines():
    gun = pl.Detection(pl.ObjectClass.Gun, pl.BoundingBox(0, 0, 10, 10))
    human = pl.Detection(pl.ObjectClass.Human, pl.BoundingBox(0, 0, 10, 12))
    kp = [pl.Keypoint(1, 1, 0.9), pl.Keypoint(2, 2, 0.8)]
    assert pl.hifd_classify(gun, kp, 0.3)
    assert not pl.hifd_classify(gun, kp, 0.9)
    hands = [pl.Keypoint(1, 1, 1.0, pl.KeypointKind.Hand), pl.Keypoint(2, 2, 1.0, pl.KeypointKind.Hand)]
    assert pl.hcfd_classify(gun, hands)
    res = pl.ohfd_associate([gun], [human], 0.5)
    assert res[0].carried and res[0].carrier_index == 0


def test_average_precision():
    assert pl.average_precision([True], 1) == 1.0
    assert pl.average_precision([True, False], 2) == 0.5
