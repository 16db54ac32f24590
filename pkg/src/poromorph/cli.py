"""Command-line surface: dataset ingest, generation, analysis, network
extraction, flow simulation, conditioning runs, and population statistics.

Exit codes: 0 success, 1 usage error, 2 data error, 3 conditioning did not
converge (the best-so-far result is still written). Every run writes a
RunManifest JSON beside its outputs; result files themselves are
byte-deterministic for fixed arguments and seeds (manifests carry wall-clock
times and are excluded from that claim).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .conditioner import (
    ConditionerConfig,
    PropertyTarget,
    condition,
)
from .errors import PoromorphError
from .evaluate import default_jobs, evaluate_population
from .generators import GrfConfig, GrfGenerator
from .morphometrics import minkowski_report
from .neural import NeuralGenerator, load_weight_bundle
from .pnm import (
    ExtractionParams,
    PoreNetwork,
    extract_network,
    network_stats,
    simulate_permeability,
)
from .volume import (
    DEFAULT_VOXEL_SIZE_UM,
    SubvolumeSpec,
    VoxelVolume,
    crop_subvolumes,
    load_volume,
    save_volume,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _Manifest:
    """Records command, config, seeds and timings; written beside outputs."""

    def __init__(self, command: str, argv: list[str], config: dict):
        self.data = {
            "command": command,
            "argv": list(argv),
            "config": config,
            "toolkit_version": __version__,
            "inputs": [],
            "outputs": [],
            "wall_clock_s": {},
        }
        self._marks: dict[str, float] = {}

    def start(self, stage: str):
        self._marks[stage] = time.monotonic()

    def stop(self, stage: str):
        self.data["wall_clock_s"][stage] = time.monotonic() - self._marks.pop(stage)

    def add_input(self, path):
        self.data["inputs"].append(str(path))

    def add_output(self, path):
        self.data["outputs"].append(str(path))

    def write(self, path):
        Path(path).write_text(json.dumps(self.data, sort_keys=True, indent=2) + "\n")


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise _UsageError(f"--dims expects nx,ny,nz, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise _UsageError(f"--dims expects integers: {exc}") from exc


def _load_input_volume(args) -> VoxelVolume:
    if args.dims is not None:
        if args.voxel_size_um is None:
            raise _UsageError("raw ingest requires --voxel-size-um")
        return load_volume(args.input, "raw_u8", dims=_parse_dims(args.dims),
                           voxel_size_um=args.voxel_size_um)
    return load_volume(args.input)


def build_parser() -> _Parser:
    parser = _Parser(prog="poromorph", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="crop a scan into training subvolumes")
    p.add_argument("input", help="VVOL file, or raw u8 with --dims")
    p.add_argument("--size", type=int, required=True, help="subvolume edge, voxels")
    p.add_argument("--stride", type=int, required=True, help="crop shift, voxels")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dims", default=None, help="nx,ny,nz for raw u8 input")
    p.add_argument("--voxel-size-um", type=float, default=None)

    p = sub.add_parser("generate", help="sample volumes from a generator backend")
    p.add_argument("--backend", choices=("grf", "neural"), default="grf")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--size", type=int, default=64, help="GRF edge length, voxels")
    p.add_argument("--corr-length", type=float, default=16.0)
    p.add_argument("--threshold", type=float, default=0.77)
    p.add_argument("--modes", type=int, default=20)
    p.add_argument("--voxel-size-um", type=float, default=DEFAULT_VOXEL_SIZE_UM)
    p.add_argument("--weights", default=None, help="WB1 bundle for --backend neural")
    p.add_argument("--postprocess", action=argparse.BooleanOptionalAction, default=True,
                   help="median filter + Otsu on neural output")

    p = sub.add_parser("analyze", help="Minkowski metrics of a binary volume")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--dims", default=None)
    p.add_argument("--voxel-size-um", type=float, default=None)

    p = sub.add_parser("network", help="extract a pore network")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float, default=0.4)
    p.add_argument("--min-sep", type=float, default=4.0)
    p.add_argument("--axis", choices=("x", "y", "z"), default="z")
    p.add_argument("--dims", default=None)
    p.add_argument("--voxel-size-um", type=float, default=None)

    p = sub.add_parser("perm", help="simulate absolute permeability")
    p.add_argument("input", help="VVOL volume or network JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--axis", choices=("x", "y", "z"), default="z")
    p.add_argument("--viscosity", type=float, default=1.0e-3, help="Pa s")
    p.add_argument("--delta-p", type=float, default=101325.0, help="Pa")
    p.add_argument("--sigma", type=float, default=0.4)
    p.add_argument("--min-sep", type=float, default=4.0)
    p.add_argument("--length-m", type=float, default=None,
                   help="domain length; required for network JSON input")
    p.add_argument("--area-m2", type=float, default=None,
                   help="domain cross-section; required for network JSON input")
    p.add_argument("--dims", default=None)
    p.add_argument("--voxel-size-um", type=float, default=None)

    p = sub.add_parser("condition", help="gradual-deformation conditioning run")
    p.add_argument("--target", required=True, help="JSON {kind, value, units, tolerance}")
    p.add_argument("--out", required=True, help="result JSON; volume saved alongside")
    p.add_argument("--backend", choices=("grf", "neural"), default="grf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--t-grid", type=int, default=8)
    p.add_argument("--refine-iters", type=int, default=6)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--corr-length", type=float, default=16.0)
    p.add_argument("--threshold", type=float, default=0.77)
    p.add_argument("--modes", type=int, default=20)
    p.add_argument("--voxel-size-um", type=float, default=DEFAULT_VOXEL_SIZE_UM)
    p.add_argument("--weights", default=None)
    p.add_argument("--sigma", type=float, default=0.4)
    p.add_argument("--min-sep", type=float, default=4.0)
    p.add_argument("--axis", choices=("x", "y", "z"), default="z")

    p = sub.add_parser("evaluate", help="population statistics over a volume directory")
    p.add_argument("input_dir")
    p.add_argument("--out-prefix", required=True, help="writes <prefix>.csv and <prefix>.json")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker threads (default: POROMORPH_JOBS env var, else 1)")
    p.add_argument("--axis", choices=("x", "y", "z"), default="z")
    p.add_argument("--sigma", type=float, default=0.4)
    p.add_argument("--min-sep", type=float, default=4.0)

    return parser


def _make_generator(args):
    if args.backend == "grf":
        cfg = GrfConfig(size=args.size, correlation_length=args.corr_length,
                        threshold=args.threshold, mode_count=args.modes,
                        seed_spectrum=0, voxel_size_um=args.voxel_size_um)
        return GrfGenerator(cfg)
    if args.weights is None:
        raise _UsageError("--backend neural requires --weights")
    bundle = load_weight_bundle(args.weights)
    return NeuralGenerator(bundle, apply_postprocess=args.postprocess
                           if hasattr(args, "postprocess") else True,
                           voxel_size_um=args.voxel_size_um)


def _cmd_ingest(args, manifest: _Manifest) -> int:
    vol = _load_input_volume(args)
    manifest.add_input(args.input)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest.start("crop")
    subs = crop_subvolumes(vol, SubvolumeSpec(size=args.size, stride=args.stride))
    manifest.stop("crop")
    manifest.start("write")
    index = []
    for i, sub_vol in enumerate(subs):
        name = f"sub_{i:06d}.vvol"
        save_volume(sub_vol, out_dir / name)
        index.append(name)
        manifest.add_output(str(out_dir / name))
    (out_dir / "index.json").write_text(json.dumps(
        {"count": len(index), "files": index,
         "size": args.size, "stride": args.stride}, sort_keys=True) + "\n")
    manifest.add_output(str(out_dir / "index.json"))
    manifest.stop("write")
    manifest.write(out_dir / "manifest.json")
    print(f"wrote {len(index)} subvolumes to {out_dir}")
    return 0


def _cmd_generate(args, manifest: _Manifest) -> int:
    generator = _make_generator(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    manifest.start("generate")
    for i in range(args.count):
        z = rng.standard_normal(generator.latent_dim)
        vol = generator(z)
        name = f"gen_{i:06d}.vvol"
        save_volume(vol, out_dir / name)
        manifest.add_output(str(out_dir / name))
    manifest.stop("generate")
    manifest.write(out_dir / "manifest.json")
    print(f"wrote {args.count} volumes to {out_dir}")
    return 0


def _cmd_analyze(args, manifest: _Manifest) -> int:
    vol = _load_input_volume(args)
    manifest.add_input(args.input)
    manifest.start("analyze")
    report = minkowski_report(vol)
    manifest.stop("analyze")
    Path(args.out).write_text(report.to_json() + "\n")
    manifest.add_output(args.out)
    manifest.write(Path(args.out).with_suffix(".manifest.json"))
    print(report.to_json())
    return 0


def _cmd_network(args, manifest: _Manifest) -> int:
    vol = _load_input_volume(args)
    manifest.add_input(args.input)
    params = ExtractionParams(smoothing_sigma=args.sigma,
                              min_peak_separation=args.min_sep)
    manifest.start("extract")
    net = extract_network(vol, params, axis=args.axis)
    manifest.stop("extract")
    stats = network_stats(net)
    payload = net.to_json_dict()
    payload["stats"] = {
        "mean_pore_diameter_m": stats.mean_pore_diameter_m,
        "mean_throat_diameter_m": stats.mean_throat_diameter_m,
        "pore_count": stats.pore_count,
        "throat_count": stats.throat_count,
        "mean_coordination": stats.mean_coordination,
    }
    Path(args.out).write_text(json.dumps(payload, sort_keys=True) + "\n")
    manifest.add_output(args.out)
    manifest.write(Path(args.out).with_suffix(".manifest.json"))
    print(f"{stats.pore_count} pores, {stats.throat_count} throats -> {args.out}")
    return 0


def _cmd_perm(args, manifest: _Manifest) -> int:
    manifest.add_input(args.input)
    if str(args.input).endswith(".json"):
        net = PoreNetwork.from_json_dict(json.loads(Path(args.input).read_text()))
        if args.length_m is None or args.area_m2 is None:
            raise _UsageError("network JSON input requires --length-m and --area-m2")
        length, area = args.length_m, args.area_m2
    else:
        vol = _load_input_volume(args)
        params = ExtractionParams(smoothing_sigma=args.sigma,
                                  min_peak_separation=args.min_sep)
        manifest.start("extract")
        net = extract_network(vol, params, axis=args.axis)
        manifest.stop("extract")
        a_m = vol.voxel_size_m
        sizes = dict(zip("xyz", vol.dims))
        length = args.length_m if args.length_m is not None else sizes[args.axis] * a_m
        area = (args.area_m2 if args.area_m2 is not None
                else (vol.voxel_count // sizes[args.axis]) * a_m ** 2)
    manifest.start("solve")
    result = simulate_permeability(net, axis=args.axis, viscosity=args.viscosity,
                                   delta_p=args.delta_p, domain_length_m=length,
                                   domain_area_m2=area)
    manifest.stop("solve")
    Path(args.out).write_text(result.to_json() + "\n")
    manifest.add_output(args.out)
    manifest.write(Path(args.out).with_suffix(".manifest.json"))
    print(f"k = {result.k_mD:.6g} mD -> {args.out}")
    return 0


def _cmd_condition(args, manifest: _Manifest) -> int:
    target = PropertyTarget.from_json_dict(json.loads(Path(args.target).read_text()))
    manifest.add_input(args.target)
    generator = _make_generator(args)
    config = ConditionerConfig(
        max_outer_iters=args.max_iters, t_grid=args.t_grid,
        refine_iters=args.refine_iters, rng_seed=args.seed,
        extraction=ExtractionParams(smoothing_sigma=args.sigma,
                                    min_peak_separation=args.min_sep),
        flow_axis=args.axis)
    manifest.start("condition")
    result = condition(generator, target, config)
    manifest.stop("condition")
    out = Path(args.out)
    out.write_text(result.to_json() + "\n")
    manifest.add_output(str(out))
    vol_path = out.with_suffix(".vvol")
    save_volume(result.volume, vol_path)
    manifest.add_output(str(vol_path))
    manifest.write(out.with_suffix(".manifest.json"))
    status = "converged" if result.converged else "did not converge"
    print(f"{status}: achieved {result.achieved!r} for target "
          f"{target.value} +/- {target.tolerance} {target.units} "
          f"({result.total_simulator_calls} simulator calls)")
    return 0 if result.converged else 3


def _cmd_evaluate(args, manifest: _Manifest) -> int:
    in_dir = Path(args.input_dir)
    files = sorted(p for p in in_dir.iterdir() if p.suffix == ".vvol")
    if not files:
        raise PoromorphError(f"no .vvol files in {in_dir}")
    volumes = []
    for f in files:
        volumes.append(load_volume(f))
        manifest.add_input(str(f))
    jobs = args.jobs if args.jobs is not None else default_jobs()
    params = ExtractionParams(smoothing_sigma=args.sigma,
                              min_peak_separation=args.min_sep)
    manifest.start("evaluate")
    report = evaluate_population(volumes, sample_ids=[f.stem for f in files],
                                 extraction=params, axis=args.axis, jobs=jobs)
    manifest.stop("evaluate")
    csv_path = Path(args.out_prefix + ".csv")
    json_path = Path(args.out_prefix + ".json")
    csv_path.write_text(report.to_csv())
    json_path.write_text(report.to_json() + "\n")
    manifest.add_output(str(csv_path))
    manifest.add_output(str(json_path))
    manifest.write(Path(args.out_prefix + ".manifest.json"))
    print(f"{len(files)} samples -> {csv_path}, {json_path}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "generate": _cmd_generate,
    "analyze": _cmd_analyze,
    "network": _cmd_network,
    "perm": _cmd_perm,
    "condition": _cmd_condition,
    "evaluate": _cmd_evaluate,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    manifest = _Manifest(args.command, argv, {
        k: v for k, v in vars(args).items() if k != "command"})
    try:
        return _COMMANDS[args.command](args, manifest)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (PoromorphError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
