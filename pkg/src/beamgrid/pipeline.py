"""End-to-end orchestration: scenes -> features -> gains -> training -> report.

An ExperimentConfig bundles every knob; experiment configs round-trip through
a flat ``key = value`` text file.  Dataset construction derives one seed per
(sample, attempt), so containers are byte-stable across runs and machines.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import metrics, storage
from .channel import (
    ChannelParams,
    DEFAULT_NOISE_POWER,
    GainMatrix,
    NoPath,
    beam_pair_gains,
    dft_codebook,
    geometric_channel,
    is_los,
    ms_antenna_position,
    optimal_pair,
)
from .features import (
    GridSpec,
    LidarConfig,
    NormBounds,
    PcfSpec,
    build_sa_vector,
    build_vdf,
    sa_vector_width,
    simulate_lidar,
    voxelize_pcf,
)
from .nn import (
    Dataset,
    Network,
    TrainConfig,
    build_saba,
    build_vdban,
    build_vdban_mini,
    count_flops,
    predict_logits,
    saba_specs,
    train,
    vdban_mini_specs,
    vdban_specs,
)
from .scene import (
    NoMs,
    PlacementFailure,
    Scene,
    SceneConfig,
    generate_scene,
    label_beam_coherence,
    make_frames,
)

SPLIT_FRACTIONS = (0.70, 0.15, 0.15)


class GenerationError(Exception):
    """Sample-level retry budget exhausted; the config is too hard to satisfy."""


class ConfigError(Exception):
    """Mutually inconsistent experiment configuration."""


def derive_seed(seed: int, *parts) -> int:
    """Stable child seed from a root seed and a tag path."""
    tokens = [int(seed)]
    for p in parts:
        if isinstance(p, str):
            tokens.extend(p.encode())
        else:
            tokens.append(int(p))
    return int(np.random.SeedSequence(tuple(tokens)).generate_state(1, np.uint64)[0])


@dataclass
class ExperimentConfig:
    """Everything one experiment needs; grid and bounds live on the scene config."""

    scene: SceneConfig = field(default_factory=SceneConfig)
    lidar: LidarConfig = field(default_factory=LidarConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    n_tx_beams: int = 73
    n_rx_beams: int = 5
    noise_power: float = DEFAULT_NOISE_POWER
    feature: str = "vdf"
    network: str = "vdban"
    pcf_mode: str = "binary"
    sa_max_vehicles: int = 20
    n_samples: int = 1000
    seed: int = 0
    b_max: int = 5
    sigma_list: tuple = (0.0, 0.2, 0.4, 0.6)
    retry_budget: int = 100
    coherence_frames: int = 0
    coherence_clip: int = 4

    @property
    def classes(self) -> int:
        return self.n_tx_beams * self.n_rx_beams

    @property
    def grid(self) -> GridSpec:
        return self.scene.grid

    @property
    def bounds(self) -> NormBounds:
        return self.scene.bounds

    def pcf_spec(self) -> PcfSpec:
        return PcfSpec.centered_on(self.grid, mode=self.pcf_mode)

    def validate(self):
        self.scene.validate()
        if self.n_tx_beams < 1 or self.n_rx_beams < 1:
            raise ConfigError("beam counts must be >= 1")
        if self.noise_power <= 0:
            raise ConfigError("noise_power must be > 0")
        if self.feature not in storage.FEATURE_KINDS:
            raise ConfigError(f"unknown feature kind {self.feature!r}")
        if self.network not in ("vdban", "vdban_mini", "saba"):
            raise ConfigError(f"unknown network {self.network!r}")
        if self.network in ("vdban", "vdban_mini") and self.feature != "vdf":
            raise ConfigError(f"network {self.network!r} consumes the vdf feature")
        if self.network == "saba" and self.feature != "sa-vector":
            raise ConfigError("network 'saba' consumes the sa-vector feature")
        if not 1 <= self.b_max <= self.classes:
            raise ConfigError(f"b_max must be in [1, {self.classes}]")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.coherence_frames == 1:
            raise ConfigError("coherence labeling needs at least 2 frames")


def desk_config() -> ExperimentConfig:
    """Minutes-scale default: 8x4x4 grid, 16 beam pairs, reduced CNN.

    The scene mix (traffic density, tall-vehicle share, RSU pole height) is
    calibrated so ~58% of generated samples are line-of-sight.
    """
    grid = GridSpec(dims=(8, 4, 4), pitch=(2.0, 6.0, 1.0))
    scene = SceneConfig(
        lane_count=3,
        lane_width=3.5,
        vehicle_count_range=(4, 10),
        grid=grid,
        rsu_height=4.0,
    )
    return ExperimentConfig(
        scene=scene,
        n_tx_beams=8,
        n_rx_beams=2,
        network="vdban_mini",
        train=TrainConfig(epochs=30, batch_size=32, learning_rate=1e-3, seed=0),
        n_samples=1000,
    )


def paper_config() -> ExperimentConfig:
    """Full-scale shapes: 14x6x6 grid, 73x5 = 365 beam pairs, 10-layer CNN."""
    grid = GridSpec(dims=(14, 6, 6), pitch=(2.0, 6.0, 1.0))
    scene = SceneConfig(
        lane_count=4,
        lane_width=3.5,
        vehicle_count_range=(6, 14),
        grid=grid,
        rsu_height=6.0,
    )
    return ExperimentConfig(
        scene=scene,
        n_tx_beams=73,
        n_rx_beams=5,
        network="vdban",
        train=TrainConfig(epochs=10, batch_size=32, learning_rate=1e-3, seed=0),
        n_samples=1000,
    )


PRESETS = {"desk": desk_config, "paper": paper_config}


# --- key = value config files -------------------------------------------------

def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip() != "")

def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip() != "")

def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _heavy_fraction(scene: SceneConfig) -> float:
    total = sum(scene.class_weights.values())
    return (scene.class_weights.get("truck", 0.0) + scene.class_weights.get("bus", 0.0)) / total


def _set_heavy_fraction(scene: SceneConfig, h: float):
    if not 0.0 <= h <= 1.0:
        raise ValueError("heavy fraction must be within [0, 1]")
    scene.class_weights = {"car": 1.0 - h, "truck": 0.6 * h, "bus": 0.4 * h}


# key -> (getter(config), setter(config, raw string)); the exposed surface of
# the config file.
_KV_TABLE = {
    "seed": (lambda c: c.seed, lambda c, v: setattr(c, "seed", int(v))),
    "n_samples": (lambda c: c.n_samples, lambda c, v: setattr(c, "n_samples", int(v))),
    "feature": (lambda c: c.feature, lambda c, v: setattr(c, "feature", v.strip())),
    "network": (lambda c: c.network, lambda c, v: setattr(c, "network", v.strip())),
    "n_tx_beams": (lambda c: c.n_tx_beams, lambda c, v: setattr(c, "n_tx_beams", int(v))),
    "n_rx_beams": (lambda c: c.n_rx_beams, lambda c, v: setattr(c, "n_rx_beams", int(v))),
    "noise_power": (lambda c: c.noise_power, lambda c, v: setattr(c, "noise_power", float(v))),
    "b_max": (lambda c: c.b_max, lambda c, v: setattr(c, "b_max", int(v))),
    "sigma_list": (lambda c: c.sigma_list, lambda c, v: setattr(c, "sigma_list", _parse_floats(v))),
    "sa_max_vehicles": (lambda c: c.sa_max_vehicles,
                        lambda c, v: setattr(c, "sa_max_vehicles", int(v))),
    "retry_budget": (lambda c: c.retry_budget, lambda c, v: setattr(c, "retry_budget", int(v))),
    "coherence_frames": (lambda c: c.coherence_frames,
                         lambda c, v: setattr(c, "coherence_frames", int(v))),
    "coherence_clip": (lambda c: c.coherence_clip,
                       lambda c, v: setattr(c, "coherence_clip", int(v))),
    "pcf.mode": (lambda c: c.pcf_mode, lambda c, v: setattr(c, "pcf_mode", v.strip())),
    "grid.dims": (lambda c: c.grid.dims,
                  lambda c, v: setattr(c.scene, "grid", replace(c.grid, dims=_parse_ints(v)))),
    "grid.pitch": (lambda c: c.grid.pitch,
                   lambda c, v: setattr(c.scene, "grid", replace(c.grid, pitch=_parse_floats(v)))),
    "grid.origin": (lambda c: c.grid.origin,
                    lambda c, v: setattr(c.scene, "grid", replace(c.grid, origin=_parse_floats(v)))),
    "bounds.w_max": (lambda c: c.bounds.w_max,
                     lambda c, v: setattr(c.scene, "bounds", replace(c.bounds, w_max=float(v)))),
    "bounds.l_max": (lambda c: c.bounds.l_max,
                     lambda c, v: setattr(c.scene, "bounds", replace(c.bounds, l_max=float(v)))),
    "bounds.h_max": (lambda c: c.bounds.h_max,
                     lambda c, v: setattr(c.scene, "bounds", replace(c.bounds, h_max=float(v)))),
    "scene.lane_count": (lambda c: c.scene.lane_count,
                         lambda c, v: setattr(c.scene, "lane_count", int(v))),
    "scene.lane_width": (lambda c: c.scene.lane_width,
                         lambda c, v: setattr(c.scene, "lane_width", float(v))),
    "scene.vehicle_count": (lambda c: c.scene.vehicle_count_range,
                            lambda c, v: setattr(c.scene, "vehicle_count_range",
                                                 tuple(_parse_ints(v)))),
    "scene.heavy_fraction": (lambda c: _heavy_fraction(c.scene),
                             lambda c, v: _set_heavy_fraction(c.scene, float(v))),
    "scene.ms_selection": (lambda c: c.scene.ms_selection,
                           lambda c, v: setattr(c.scene, "ms_selection", v.strip())),
    "scene.rsu_height": (lambda c: c.scene.rsu_height,
                         lambda c, v: setattr(c.scene, "rsu_height", float(v))),
    "scene.rsu_position": (
        lambda c: "auto" if c.scene.rsu_position is None else c.scene.rsu_position,
        lambda c, v: setattr(c.scene, "rsu_position",
                             None if v.strip() == "auto" else _parse_floats(v))),
    "scene.azimuth_jitter": (lambda c: c.scene.azimuth_jitter,
                             lambda c, v: setattr(c.scene, "azimuth_jitter", float(v))),
    "channel.wavelength": (lambda c: c.channel.wavelength,
                           lambda c, v: setattr(c, "channel",
                                                replace(c.channel, wavelength=float(v)))),
    "channel.reflection_coeff": (lambda c: c.channel.reflection_coeff,
                                 lambda c, v: setattr(c, "channel",
                                                      replace(c.channel,
                                                              reflection_coeff=float(v)))),
    "channel.amplitude_scale": (lambda c: c.channel.amplitude_scale,
                                lambda c, v: setattr(c, "channel",
                                                     replace(c.channel,
                                                             amplitude_scale=float(v)))),
    "lidar.n_azimuth": (lambda c: c.lidar.n_azimuth,
                        lambda c, v: setattr(c, "lidar", replace(c.lidar, n_azimuth=int(v)))),
    "lidar.max_range": (lambda c: c.lidar.max_range,
                        lambda c, v: setattr(c, "lidar", replace(c.lidar, max_range=float(v)))),
    "lidar.mount_height": (lambda c: c.lidar.mount_height,
                           lambda c, v: setattr(c, "lidar",
                                                replace(c.lidar, mount_height=float(v)))),
    "train.epochs": (lambda c: c.train.epochs, lambda c, v: setattr(c.train, "epochs", int(v))),
    "train.batch_size": (lambda c: c.train.batch_size,
                         lambda c, v: setattr(c.train, "batch_size", int(v))),
    "train.learning_rate": (lambda c: c.train.learning_rate,
                            lambda c, v: setattr(c.train, "learning_rate", float(v))),
    "train.optimizer": (lambda c: c.train.optimizer,
                        lambda c, v: setattr(c.train, "optimizer", v.strip())),
    "train.momentum": (lambda c: c.train.momentum,
                       lambda c, v: setattr(c.train, "momentum", float(v))),
    "train.seed": (lambda c: c.train.seed, lambda c, v: setattr(c.train, "seed", int(v))),
    "train.shuffle_each_epoch": (lambda c: c.train.shuffle_each_epoch,
                                 lambda c, v: setattr(c.train, "shuffle_each_epoch",
                                                      _parse_bool(v))),
}


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blank lines ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_config_file(path) -> dict[str, str]:
    return parse_kv_text(Path(path).read_text())


def config_from_kv(kv: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    config = base if base is not None else desk_config()
    for key, value in kv.items():
        if key == "preset":
            continue
        if key not in _KV_TABLE:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            _KV_TABLE[key][1](config, value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    config.validate()
    return config


def config_to_kv(config: ExperimentConfig) -> dict[str, str]:
    return {key: _fmt(getter(config)) for key, (getter, _) in _KV_TABLE.items()}


def write_config_file(path, config: ExperimentConfig) -> None:
    lines = [f"{key} = {value}" for key, value in config_to_kv(config).items()]
    Path(path).write_text("\n".join(lines) + "\n")


# --- sample generation ---------------------------------------------------------

@dataclass
class Sample:
    scene: Scene
    gain: GainMatrix
    label: int
    feature: np.ndarray
    coherence: int | None = None


def _round_f32(arr: np.ndarray) -> np.ndarray:
    """Snap to the float32 lattice so in-memory values equal the stored ones."""
    return arr.astype(np.float32).astype(np.float64)


def featurize_scene(config: ExperimentConfig, scene: Scene) -> np.ndarray:
    """Storage-layout feature tensor for one scene, float32-rounded."""
    if config.feature == "vdf":
        return _round_f32(build_vdf(scene, config.grid, config.bounds).data)
    if config.feature == "pcf":
        points = simulate_lidar(scene, config.lidar)
        return voxelize_pcf(points, config.pcf_spec()).data.astype(np.float64)
    return _round_f32(build_sa_vector(scene, config.grid, config.bounds,
                                      config.sa_max_vehicles))


def nn_input(features: np.ndarray, kind: str) -> np.ndarray:
    """Network-layout batch: channels-first for grid features."""
    if kind == "vdf":
        return np.transpose(features, (0, 4, 1, 2, 3))
    if kind == "pcf":
        return features[:, None]
    return features


def _sample_gains(config: ExperimentConfig, scene: Scene, tx_cb, rx_cb,
                  seed: int) -> GainMatrix:
    H = geometric_channel(scene, config.n_tx_beams, config.n_rx_beams,
                          config.channel, seed=seed)
    los = is_los(scene, scene.rsu_position, ms_antenna_position(scene))
    raw = beam_pair_gains(H, tx_cb, rx_cb, los=los, noise_power=config.noise_power)
    # Snap gains to float32 before taking the argmax so the stored container is
    # self-consistent (label == argmax of the float32 gains).
    return GainMatrix(gains=_round_f32(raw.gains), los=los, noise_power=config.noise_power)


def _coherence_label(config: ExperimentConfig, scene: Scene, tx_cb, rx_cb,
                     seed: int) -> int:
    frames = make_frames(scene, config.coherence_frames, (0.5, 3.0),
                         derive_seed(seed, "frames"))

    def beam_oracle(frame: Scene) -> int:
        try:
            return optimal_pair(_sample_gains(config, frame, tx_cb, rx_cb, seed))
        except (NoPath, NoMs):
            return -1

    return label_beam_coherence(frames, beam_oracle, config.coherence_clip)[0]


def generate_samples(config: ExperimentConfig, n: int, seed: int) -> list[Sample]:
    """n deterministic samples; placement failures and outages are retried with
    fresh derived seeds up to config.retry_budget times per sample."""
    config.validate()
    tx_cb = dft_codebook(config.n_tx_beams)
    rx_cb = dft_codebook(config.n_rx_beams)
    samples = []
    for i in range(n):
        sample = None
        for attempt in range(config.retry_budget):
            s_seed = derive_seed(seed, i, attempt)
            try:
                scene = generate_scene(config.scene, s_seed)
                gain = _sample_gains(config, scene, tx_cb, rx_cb, s_seed)
            except (PlacementFailure, NoPath):
                continue
            coherence = (_coherence_label(config, scene, tx_cb, rx_cb, s_seed)
                         if config.coherence_frames > 0 else None)
            sample = Sample(scene=scene, gain=gain, label=optimal_pair(gain),
                            feature=featurize_scene(config, scene), coherence=coherence)
            break
        if sample is None:
            raise GenerationError(
                f"sample {i}: no valid scene/channel within {config.retry_budget} attempts")
        samples.append(sample)
    return samples


def split_assignment(n: int, seed: int) -> np.ndarray:
    """70/15/15 train/val/test tags from a seeded permutation."""
    perm = np.random.default_rng(derive_seed(seed, "split")).permutation(n)
    n_train = int(SPLIT_FRACTIONS[0] * n)
    n_val = int(SPLIT_FRACTIONS[1] * n)
    tags = np.full(n, 2, dtype=np.uint8)
    tags[perm[:n_train]] = 0
    tags[perm[n_train:n_train + n_val]] = 1
    return tags


def build_dataset(config: ExperimentConfig, n_samples: int | None = None,
                  seed: int | None = None) -> tuple[storage.DatasetFile, dict]:
    """Generate samples and package them as a container image plus stats."""
    n = config.n_samples if n_samples is None else int(n_samples)
    root = config.seed if seed is None else int(seed)
    samples = generate_samples(config, n, root)
    splits = split_assignment(n, root)

    features = np.stack([s.feature for s in samples]).astype(np.float32)
    gains = np.stack([s.gain.gains for s in samples]).astype(np.float32)
    labels = np.asarray([s.label for s in samples], dtype=np.int64)
    los = np.asarray([s.gain.los for s in samples], dtype=bool)
    coherence = (np.asarray([s.coherence for s in samples], dtype=np.int32)
                 if config.coherence_frames > 0 else None)

    data = storage.DatasetFile(feature_kind=config.feature, noise_power=config.noise_power,
                               features=features, gains=gains, labels=labels, los=los,
                               splits=splits, coherence=coherence)
    stats = {
        "n_samples": n,
        "los_fraction": float(np.mean(los)),
        "split_counts": {"train": int(np.sum(splits == 0)), "val": int(np.sum(splits == 1)),
                         "test": int(np.sum(splits == 2))},
        "classes": config.classes,
    }
    return data, stats


def dataset_to_nn(data: storage.DatasetFile, classes: int) -> Dataset:
    return Dataset(
        features=nn_input(data.features.astype(np.float64), data.feature_kind),
        labels=data.labels.astype(np.int64),
        splits=data.splits,
        los=data.los,
        n_classes=classes,
        coherence=data.coherence,
    )


def gain_matrices(data: storage.DatasetFile, indices=None) -> list[GainMatrix]:
    idx = range(data.n_samples) if indices is None else indices
    return [GainMatrix(gains=data.gains[i].astype(np.float64), los=bool(data.los[i]),
                       noise_power=data.noise_power) for i in idx]


def build_network(config: ExperimentConfig, seed: int | None = None) -> Network:
    init_seed = derive_seed(config.train.seed if seed is None else seed, "init")
    if config.network == "vdban":
        return build_vdban(config.grid.dims, config.classes, seed=init_seed)
    if config.network == "vdban_mini":
        return build_vdban_mini(config.grid.dims, config.classes, seed=init_seed)
    return build_saba(sa_vector_width(config.sa_max_vehicles), config.classes,
                      seed=init_seed)


def network_input_shape(config: ExperimentConfig) -> tuple[int, ...]:
    if config.network in ("vdban", "vdban_mini"):
        return (7,) + tuple(config.grid.dims)
    return (sa_vector_width(config.sa_max_vehicles),)


# --- experiments ----------------------------------------------------------------

@dataclass
class ExperimentResult:
    report: metrics.EvalReport
    history: object
    stats: dict
    dataset_path: str
    checkpoint_path: str
    report_csv_path: str
    history_csv_path: str
    digest: str


def _report_digest(history, report: metrics.EvalReport) -> str:
    h = hashlib.sha256()
    h.update(history.digest().encode())
    payload = {
        "b_values": report.b_values,
        "atrr_all": report.atrr_all,
        "atrr_los": report.atrr_los,
        "atrr_nlos": report.atrr_nlos,
        "n": [report.n_total, report.n_los, report.n_nlos, report.n_excluded],
        "top1": report.top1_accuracy,
    }
    h.update(json.dumps(payload, sort_keys=True).encode())
    return h.hexdigest()


def run_experiment(config: ExperimentConfig, out_dir,
                   dataset_path=None) -> ExperimentResult:
    """Build (or load) the dataset, train, evaluate the reloaded checkpoint on
    the test split, and write container/checkpoint/CSV artifacts under out_dir."""
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if dataset_path is not None and Path(dataset_path).exists():
        data = storage.read_container(dataset_path)
        if data.feature_kind != config.feature:
            raise ConfigError(
                f"dataset holds {data.feature_kind!r} features but config expects "
                f"{config.feature!r}")
        ds_path = Path(dataset_path)
        stats = {"n_samples": data.n_samples, "los_fraction": float(np.mean(data.los)),
                 "split_counts": {"train": int(np.sum(data.splits == 0)),
                                  "val": int(np.sum(data.splits == 1)),
                                  "test": int(np.sum(data.splits == 2))},
                 "classes": config.classes}
    else:
        data, stats = build_dataset(config)
        ds_path = out / "dataset.bgds"
        storage.write_container(ds_path, data)

    nn_data = dataset_to_nn(data, config.classes)
    net = build_network(config)
    history = train(net, nn_data, config.train)

    ckpt_path = out / "model.bgnn"
    net.save(ckpt_path)
    net = Network.load(ckpt_path)

    test_idx = nn_data.indices(2)
    logits = predict_logits(net, nn_data.features[test_idx])
    report = metrics.split_report(logits, gain_matrices(data, test_idx),
                                  b_max=config.b_max)

    report_csv = out / "report.csv"
    with open(report_csv, "w", newline="") as fp:
        metrics.write_csv(report.rows(), fp)
    history_csv = out / "history.csv"
    with open(history_csv, "w", newline="") as fp:
        fp.write("epoch,train_loss,val_accuracy\n")
        for e, (loss, acc) in enumerate(zip(history.train_loss, history.val_accuracy)):
            fp.write(f"{e},{loss!r},{acc!r}\n")

    return ExperimentResult(report=report, history=history, stats=stats,
                            dataset_path=str(ds_path), checkpoint_path=str(ckpt_path),
                            report_csv_path=str(report_csv),
                            history_csv_path=str(history_csv),
                            digest=_report_digest(history, report))


def evaluate_checkpoint(checkpoint_path, dataset_path, b_max: int = 5,
                        noise_power: float | None = None) -> metrics.EvalReport:
    """Score a saved network on the test split of a container."""
    net = Network.load(checkpoint_path)
    data = storage.read_container(dataset_path)
    if noise_power is not None:
        data.noise_power = noise_power
    test_idx = np.flatnonzero(data.splits == 2)
    feats = nn_input(data.features[test_idx].astype(np.float64), data.feature_kind)
    logits = predict_logits(net, feats)
    return metrics.split_report(logits, gain_matrices(data, test_idx), b_max=b_max)


def sigma_sweep_run(config: ExperimentConfig, checkpoint_path=None, predict=None,
                    sigmas=None, b_values=None):
    """Regenerate the config's test scenes, then sweep location error.

    ``predict`` overrides the checkpoint (useful for baseline predictors);
    exactly one of the two must be provided.
    """
    config.validate()
    if (checkpoint_path is None) == (predict is None):
        raise ConfigError("provide exactly one of checkpoint_path or predict")
    if predict is None:
        net = Network.load(checkpoint_path)
        predict = lambda batch: predict_logits(net, batch)

    samples = generate_samples(config, config.n_samples, config.seed)
    splits = split_assignment(config.n_samples, config.seed)
    test_idx = np.flatnonzero(splits == 2)
    scenes = [samples[i].scene for i in test_idx]
    gains = [samples[i].gain for i in test_idx]

    featurize = lambda scene: nn_input(featurize_scene(config, scene)[None],
                                       config.feature)[0]
    sig = tuple(config.sigma_list if sigmas is None else sigmas)
    bvs = tuple(b_values) if b_values is not None else tuple(range(1, config.b_max + 1))
    return metrics.sigma_sweep(predict, scenes, gains, featurize, sig,
                               b_values=bvs, seed=derive_seed(config.seed, "sweep"))


def flops_report(config: ExperimentConfig | None = None) -> list[dict]:
    """FLOPs table: the two full-scale networks plus the desk-scale CNN."""
    config = config if config is not None else desk_config()
    saba_width = sa_vector_width(config.sa_max_vehicles)
    rows = [
        {"network": "vdban", "input_shape": "7x14x6x6",
         "flops": count_flops(vdban_specs((14, 6, 6), 365), (7, 14, 6, 6))},
        {"network": "saba", "input_shape": f"{saba_width}",
         "flops": count_flops(saba_specs(saba_width, 365), (saba_width,))},
        {"network": "vdban_mini",
         "input_shape": "7x" + "x".join(str(d) for d in config.grid.dims),
         "flops": count_flops(vdban_mini_specs(config.grid.dims, config.classes),
                              network_input_shape(config))},
    ]
    return rows


def inspect_file(path) -> dict:
    """Header summary for any of the binary formats; raises FormatError on
    corruption (including container label/argmax inconsistency)."""
    p = Path(path)
    with open(p, "rb") as fp:
        magic = fp.read(4)
    if magic == storage.MAGIC_DATASET:
        data = storage.read_container(p, verify=True)
        return {"format": "BGDS", "feature_kind": data.feature_kind,
                "n_samples": data.n_samples, "noise_power": data.noise_power,
                "los_fraction": float(np.mean(data.los)) if data.n_samples else math.nan,
                "has_coherence": data.coherence is not None,
                "feature_shape": "x".join(str(d) for d in data.features.shape[1:]),
                "consistent": True}
    if magic == storage.MAGIC_TENSOR:
        arr = storage.load_tensor_file(p)
        return {"format": "BGT1", "rank": arr.ndim,
                "dims": "x".join(str(d) for d in arr.shape), "dtype": "float32"}
    if magic == storage.MAGIC_SCENES:
        scenes = storage.read_scenes(p)
        return {"format": "BGSC", "n_scenes": len(scenes),
                "n_vehicles": ",".join(str(len(s.vehicles)) for s in scenes)}
    from .nn.network import MAGIC_NET
    if magic == MAGIC_NET:
        net = Network.load(p)
        return {"format": "BGNN", "layers": len(net.specs),
                "parameterized_layers": net.parameterized_layer_count,
                "parameters": net.parameter_count()}
    raise storage.FormatError(f"unknown magic {magic!r}")
