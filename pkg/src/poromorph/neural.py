"""Forward-inference engine for the deconvolutional volume generator and the
WB1 portable weight format.

The architecture is a latent projection followed by a chain of transposed
3D convolutions (kernel 4, stride 2, padding 1, each doubling the edge),
batch normalization in inference mode (running statistics), LeakyReLU 0.2,
and a final Tanh. The full-size generator maps a 20-dim latent to a 128^3
volume and carries exactly 5,769,889 parameters.

WB1 layout: the magic line ``WB1\\n``, one JSON manifest line describing
role, metadata and the ordered layer/tensor list (with per-tensor CRC32),
then the concatenated little-endian float32 tensors in manifest order.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ChecksumMismatchError,
    DimMismatchError,
    IoFailureError,
    MalformedManifestError,
    NonFiniteActivationError,
    ShapeMismatchError,
)
from .generators import postprocess
from .volume import CONTINUOUS, DEFAULT_VOXEL_SIZE_UM, VoxelVolume

WB1_MAGIC = b"WB1\n"

#: Parameter total of the full-size generator (weights, biases, batch-norm
#: scale and shift; running statistics excluded).
GENERATOR_PARAMETER_TOTAL = 5_769_889

LINEAR = "linear"
TCONV = "transposed_conv3d"
BN1D = "batchnorm1d"
BN3D = "batchnorm3d"

_TENSOR_NAMES = {
    LINEAR: ("weight", "bias"),
    TCONV: ("weight", "bias"),
    BN1D: ("scale", "shift", "running_mean", "running_var"),
    BN3D: ("scale", "shift", "running_mean", "running_var"),
}
_PARAM_TENSORS = ("weight", "bias", "scale", "shift")


@dataclass(frozen=True)
class NeuralGeneratorSpec:
    """Architecture description; the defaults are the full-size generator."""

    latent_dim: int = 20
    init_channels: int = 256
    init_size: int = 8
    stage_channels: tuple[int, ...] = (128, 64, 32)
    out_channels: int = 1
    kernel: int = 4
    stride: int = 2
    padding: int = 1
    leaky_slope: float = 0.2
    bn_eps: float = 1.0e-5

    def __post_init__(self):
        object.__setattr__(self, "stage_channels", tuple(self.stage_channels))
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.kernel != 2 * self.stride or self.padding * 2 != self.kernel - self.stride:
            # every stage must exactly double the edge length
            raise ValueError("spec requires kernel = 2*stride and padding = (kernel-stride)/2")

    @property
    def feature_dim(self) -> int:
        return self.init_channels * self.init_size ** 3

    @property
    def output_size(self) -> int:
        return self.init_size * 2 ** (len(self.stage_channels) + 1)

    def layer_plan(self) -> list[tuple[str, str, dict[str, tuple[int, ...]]]]:
        """Ordered (name, kind, tensor shapes) triples for the forward pass."""
        k = self.kernel
        plan = [
            ("latent_proj", LINEAR, {"weight": (self.feature_dim, self.latent_dim),
                                     "bias": (self.feature_dim,)}),
            ("latent_bn", BN1D, {n: (self.feature_dim,)
                                 for n in _TENSOR_NAMES[BN1D]}),
        ]
        channels = (self.init_channels, *self.stage_channels)
        for i in range(len(self.stage_channels)):
            cin, cout = channels[i], channels[i + 1]
            plan.append((f"up{i + 1}", TCONV,
                         {"weight": (cin, cout, k, k, k), "bias": (cout,)}))
            plan.append((f"up{i + 1}_bn", BN3D, {n: (cout,) for n in _TENSOR_NAMES[BN3D]}))
        plan.append(("to_voxels", TCONV,
                     {"weight": (channels[-1], self.out_channels, k, k, k),
                      "bias": (self.out_channels,)}))
        return plan

    def parameter_count(self) -> int:
        total = 0
        for _, _, shapes in self.layer_plan():
            for name, shape in shapes.items():
                if name in _PARAM_TENSORS:
                    total += int(np.prod(shape))
        return total

    def to_json_dict(self) -> dict:
        return {
            "latent_dim": self.latent_dim,
            "init_channels": self.init_channels,
            "init_size": self.init_size,
            "stage_channels": list(self.stage_channels),
            "out_channels": self.out_channels,
            "kernel": self.kernel,
            "stride": self.stride,
            "padding": self.padding,
            "leaky_slope": self.leaky_slope,
            "bn_eps": self.bn_eps,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "NeuralGeneratorSpec":
        return cls(
            latent_dim=int(d["latent_dim"]),
            init_channels=int(d["init_channels"]),
            init_size=int(d["init_size"]),
            stage_channels=tuple(int(c) for c in d["stage_channels"]),
            out_channels=int(d["out_channels"]),
            kernel=int(d["kernel"]),
            stride=int(d["stride"]),
            padding=int(d["padding"]),
            leaky_slope=float(d["leaky_slope"]),
            bn_eps=float(d["bn_eps"]),
        )


FULL_SIZE_SPEC = NeuralGeneratorSpec()


@dataclass(frozen=True)
class LayerWeights:
    name: str
    kind: str
    tensors: dict[str, np.ndarray]


@dataclass(frozen=True)
class WeightBundle:
    """Ordered tensor set for one generator, plus free-form metadata."""

    layers: tuple[LayerWeights, ...]
    role: str = "generator"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    def parameter_count(self) -> int:
        total = 0
        for layer in self.layers:
            for name, tensor in layer.tensors.items():
                if name in _PARAM_TENSORS:
                    total += tensor.size
        return total

    def spec(self) -> NeuralGeneratorSpec:
        """Architecture spec embedded in the metadata."""
        try:
            return NeuralGeneratorSpec.from_json_dict(self.metadata["spec"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedManifestError(f"bundle metadata carries no valid spec: {exc}") from exc

    def validate_against(self, spec: NeuralGeneratorSpec) -> None:
        """Check tensor names, kinds and shapes against ``spec`` exactly."""
        plan = spec.layer_plan()
        if len(plan) != len(self.layers):
            raise ShapeMismatchError(
                f"bundle has {len(self.layers)} layers, spec expects {len(plan)}")
        for layer, (name, kind, shapes) in zip(self.layers, plan):
            if layer.name != name or layer.kind != kind:
                raise ShapeMismatchError(
                    f"layer {layer.name!r}/{layer.kind!r} does not match "
                    f"expected {name!r}/{kind!r}")
            if set(layer.tensors) != set(shapes):
                raise ShapeMismatchError(
                    f"layer {name!r} tensors {sorted(layer.tensors)} != {sorted(shapes)}")
            for tname, tshape in shapes.items():
                got = layer.tensors[tname].shape
                if got != tshape:
                    raise ShapeMismatchError(
                        f"layer {name!r} tensor {tname!r} has shape {got}, expected {tshape}")
            if kind in (BN1D, BN3D) and (layer.tensors["running_var"] <= 0).any():
                raise ShapeMismatchError(f"layer {name!r} has non-positive running_var")
        if spec == FULL_SIZE_SPEC and self.parameter_count() != GENERATOR_PARAMETER_TOTAL:
            raise ShapeMismatchError(
                f"full-size generator must have {GENERATOR_PARAMETER_TOTAL} parameters, "
                f"bundle has {self.parameter_count()}")


def save_weight_bundle(bundle: WeightBundle, path) -> None:
    """Write a bundle in the WB1 format (manifest + raw f32 tensors)."""
    layers_manifest = []
    blobs = []
    for layer in bundle.layers:
        tensors_manifest = []
        for tname in _TENSOR_NAMES[layer.kind]:
            tensor = np.ascontiguousarray(layer.tensors[tname], dtype="<f4")
            blob = tensor.tobytes()
            blobs.append(blob)
            tensors_manifest.append({
                "name": tname,
                "shape": list(tensor.shape),
                "crc32": zlib.crc32(blob) & 0xFFFFFFFF,
            })
        layers_manifest.append({"name": layer.name, "kind": layer.kind,
                                "tensors": tensors_manifest})
    manifest = {
        "format_version": 1,
        "role": bundle.role,
        "metadata": bundle.metadata,
        "layers": layers_manifest,
    }
    try:
        with open(path, "wb") as fh:
            fh.write(WB1_MAGIC)
            fh.write(json.dumps(manifest, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            for blob in blobs:
                fh.write(blob)
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc


def load_weight_bundle(path) -> WeightBundle:
    """Read and validate a WB1 bundle.

    Validates CRC32 per tensor and, for generator-role bundles whose
    metadata spec is the full-size architecture, the 5,769,889 parameter
    total.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(WB1_MAGIC):
        raise MalformedManifestError(f"{path}: missing WB1 magic")
    body = blob[len(WB1_MAGIC):]
    nl = body.find(b"\n")
    if nl < 0:
        raise MalformedManifestError(f"{path}: manifest line is unterminated")
    try:
        manifest = json.loads(body[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedManifestError(f"{path}: bad manifest JSON: {exc}") from exc
    payload = body[nl + 1:]

    offset = 0
    layers = []
    try:
        manifest_layers = manifest["layers"]
        role = manifest.get("role", "generator")
        metadata = manifest.get("metadata", {})
    except (KeyError, TypeError) as exc:
        raise MalformedManifestError(f"{path}: manifest missing fields: {exc}") from exc
    for lm in manifest_layers:
        try:
            name, kind = lm["name"], lm["kind"]
            tensors_manifest = lm["tensors"]
        except (KeyError, TypeError) as exc:
            raise MalformedManifestError(f"{path}: malformed layer entry: {exc}") from exc
        if kind not in _TENSOR_NAMES:
            raise MalformedManifestError(f"{path}: unknown layer kind {kind!r}")
        tensors = {}
        for tm in tensors_manifest:
            shape = tuple(int(s) for s in tm["shape"])
            nbytes = int(np.prod(shape)) * 4
            chunk = payload[offset:offset + nbytes]
            if len(chunk) != nbytes:
                raise ShapeMismatchError(
                    f"{path}: tensor {name}.{tm['name']} declares shape {shape} "
                    f"but payload is short")
            if (zlib.crc32(chunk) & 0xFFFFFFFF) != int(tm["crc32"]):
                raise ChecksumMismatchError(f"{path}: CRC mismatch in {name}.{tm['name']}")
            tensors[tm["name"]] = np.frombuffer(chunk, dtype="<f4").reshape(shape).copy()
            offset += nbytes
        layers.append(LayerWeights(name=name, kind=kind, tensors=tensors))
    if offset != len(payload):
        raise ShapeMismatchError(f"{path}: {len(payload) - offset} trailing payload bytes")

    bundle = WeightBundle(layers=tuple(layers), role=role, metadata=metadata)
    if role == "generator" and "spec" in metadata:
        spec = bundle.spec()
        bundle.validate_against(spec)
    return bundle


def conv_transpose3d(x: np.ndarray, weight: np.ndarray,
                     bias: np.ndarray | None = None,
                     stride: int = 2, padding: int = 1) -> np.ndarray:
    """Transposed 3D convolution, channel-first.

    ``x`` has shape (C_in, D, H, W); ``weight`` has shape
    (C_in, C_out, k, k, k). Each input element scatter-adds its weighted
    kernel into the output at stride offsets; implemented as one matrix
    product followed by strided slice accumulation.
    """
    cin, d, h, w = x.shape
    if weight.shape[0] != cin:
        raise ShapeMismatchError(
            f"input has {cin} channels, weight expects {weight.shape[0]}")
    cout, k = weight.shape[1], weight.shape[2]
    od = (d - 1) * stride - 2 * padding + k
    oh = (h - 1) * stride - 2 * padding + k
    ow = (w - 1) * stride - 2 * padding + k
    if min(od, oh, ow) < 1:
        raise ShapeMismatchError("output would be empty; padding too large")

    cols = weight.reshape(cin, -1).T @ x.reshape(cin, -1)
    cols = cols.reshape(cout, k, k, k, d, h, w)
    full = np.zeros((cout, (d - 1) * stride + k, (h - 1) * stride + k,
                     (w - 1) * stride + k), dtype=x.dtype)
    for di in range(k):
        for hj in range(k):
            for wl in range(k):
                full[:,
                     di:di + stride * d:stride,
                     hj:hj + stride * h:stride,
                     wl:wl + stride * w:stride] += cols[:, di, hj, wl]
    out = full[:, padding:padding + od, padding:padding + oh, padding:padding + ow]
    if bias is not None:
        out = out + bias[:, None, None, None].astype(x.dtype)
    return out


def _leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, x, np.asarray(slope, dtype=x.dtype) * x)


def _batchnorm(x: np.ndarray, tensors: dict[str, np.ndarray], eps: float,
               channel_axis: int | None) -> np.ndarray:
    scale, shift = tensors["scale"], tensors["shift"]
    mean, var = tensors["running_mean"], tensors["running_var"]
    if channel_axis is not None:
        expand = [None] * x.ndim
        expand[channel_axis] = slice(None)
        idx = tuple(expand)
        scale, shift, mean, var = scale[idx], shift[idx], mean[idx], var[idx]
    inv = scale / np.sqrt(var + np.asarray(eps, dtype=x.dtype))
    return (x - mean) * inv + shift


def neural_generate(z: np.ndarray, bundle: WeightBundle,
                    spec: NeuralGeneratorSpec | None = None,
                    voxel_size_um: float = DEFAULT_VOXEL_SIZE_UM) -> VoxelVolume:
    """Inference-mode forward pass from latent to a continuous volume.

    Batch norm uses the stored running statistics; the output is the Tanh
    image of the final transposed convolution, bit-deterministic for a fixed
    latent and bundle.
    """
    if spec is None:
        spec = bundle.spec()
    bundle.validate_against(spec)
    z = np.asarray(z, dtype=np.float32)
    if z.shape != (spec.latent_dim,):
        raise DimMismatchError(
            f"latent has shape {z.shape}, spec expects ({spec.latent_dim},)")

    layers = {layer.name: layer for layer in bundle.layers}
    plan = spec.layer_plan()

    def check(name: str, arr: np.ndarray) -> np.ndarray:
        if not np.isfinite(arr).all():
            raise NonFiniteActivationError(f"non-finite activation after {name}")
        return arr

    proj = layers["latent_proj"].tensors
    x = proj["weight"] @ z + proj["bias"]
    x = check("latent_proj", x)
    x = _batchnorm(x, layers["latent_bn"].tensors, spec.bn_eps, channel_axis=None)
    x = _leaky_relu(x, spec.leaky_slope)
    x = x.reshape(spec.init_channels, spec.init_size, spec.init_size, spec.init_size)

    for name, kind, _ in plan[2:]:
        layer = layers[name]
        if kind == TCONV:
            x = conv_transpose3d(x, layer.tensors["weight"], layer.tensors["bias"],
                                 stride=spec.stride, padding=spec.padding)
            x = check(name, x)
        else:
            x = _batchnorm(x, layer.tensors, spec.bn_eps, channel_axis=0)
            x = _leaky_relu(x, spec.leaky_slope)

    out = np.tanh(x[0])
    return VoxelVolume(out, voxel_size_um, CONTINUOUS)


def random_weight_bundle(spec: NeuralGeneratorSpec, seed: int = 0,
                         role: str = "generator") -> WeightBundle:
    """Random but well-scaled weights (1/sqrt(fan_in)); batch norm starts at
    identity with unit running variance. Useful for engine checks and as a
    smoke-test stand-in for trained weights."""
    rng = np.random.default_rng(seed)
    layers = []
    for name, kind, shapes in spec.layer_plan():
        tensors = {}
        if kind == LINEAR:
            fan_in = shapes["weight"][1]
            tensors["weight"] = rng.normal(0.0, 1.0 / np.sqrt(fan_in),
                                           shapes["weight"]).astype(np.float32)
            tensors["bias"] = np.zeros(shapes["bias"], dtype=np.float32)
        elif kind == TCONV:
            fan_in = shapes["weight"][0] * spec.kernel ** 3
            tensors["weight"] = rng.normal(0.0, 1.0 / np.sqrt(fan_in),
                                           shapes["weight"]).astype(np.float32)
            tensors["bias"] = np.zeros(shapes["bias"], dtype=np.float32)
        else:
            n = shapes["scale"][0]
            tensors["scale"] = np.ones(n, dtype=np.float32)
            tensors["shift"] = np.zeros(n, dtype=np.float32)
            tensors["running_mean"] = np.zeros(n, dtype=np.float32)
            tensors["running_var"] = np.ones(n, dtype=np.float32)
        layers.append(LayerWeights(name=name, kind=kind, tensors=tensors))
    return WeightBundle(layers=tuple(layers), role=role,
                        metadata={"spec": spec.to_json_dict()})


class NeuralGenerator:
    """Generator-contract wrapper: latent -> forward pass -> post-processing
    -> binary volume. Set ``apply_postprocess=False`` to get the raw
    continuous output."""

    def __init__(self, bundle: WeightBundle, spec: NeuralGeneratorSpec | None = None,
                 apply_postprocess: bool = True,
                 voxel_size_um: float = DEFAULT_VOXEL_SIZE_UM):
        self.bundle = bundle
        self.spec = spec if spec is not None else bundle.spec()
        bundle.validate_against(self.spec)
        self.apply_postprocess = apply_postprocess
        self.voxel_size_um = voxel_size_um

    @property
    def latent_dim(self) -> int:
        return self.spec.latent_dim

    def __call__(self, z: np.ndarray) -> VoxelVolume:
        vol = neural_generate(z, self.bundle, self.spec, self.voxel_size_um)
        if self.apply_postprocess:
            return postprocess(vol)
        return vol
