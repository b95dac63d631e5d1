#!/usr/bin/env python3
"""
kinsdf command-line entry point.

Usage:
  python scripts/kinsdf.py gensdf --hand hand.obj --object obj.obj --count 40000 --seed 0 --out samples.gsdf
  python scripts/kinsdf.py fk --pose pose.json --out joints.json
  python scripts/kinsdf.py ik --joints joints.json --out pose.json
  python scripts/kinsdf.py features --samples samples.gsdf --pose pose.json --mode k3 --out feats.csv
  python scripts/kinsdf.py fit --samples samples.gsdf --pose pose.json --mode k3 --epochs 50 --out hand.model
  python scripts/kinsdf.py fit --samples samples.gsdf --pose pose.json --center 0 0 0.4 --mode k3 --object-mode ko3 \
      --grid view.gsdg --camera camera.json --out hand.model --object-out obj.model
  python scripts/kinsdf.py extract --model hand.model --pose pose.json --res 64 --out hand_pred.obj
  python scripts/kinsdf.py eval --pred-hand hand_pred.obj --gt-hand hand.obj --out report.json
  python scripts/kinsdf.py ablate --train-poses 64 --test-poses 16 --out ablation.json
  python scripts/kinsdf.py ablate --mode v1 --mode v2 --out visual_ablation.json

Common options:
  --seed / --threads / --out / --config (JSON file; its values override flags)

Exit codes: 0 ok, 2 config error, 3 input parse error, 4 numerical failure.
Errors are written to stderr as one JSON line.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from typing import Any, Dict, List, Optional

from src.cli.commands import COMMAND_TABLE
from src.cli.config import get_run_config, resolve_config, set_run_config
from src.errors import KinSdfError
from src.features.kinematic import HAND_MODES, OBJECT_MODES
from src.features.visual import VISUAL_MODES

MODES = list(HAND_MODES) + list(OBJECT_MODES)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, help="Random seed (default: GSDF_SEED or 0)")
    p.add_argument("--threads", type=int, help="Worker threads for data-parallel passes (default: GSDF_THREADS or 1)")
    p.add_argument("--out", dest="output", help="Artifact path")
    p.add_argument("--config", help="JSON file whose values override command-line flags")


def _pose_inputs(p: argparse.ArgumentParser):
    p.add_argument("--pose", help="Pose JSON with 'theta' (16x3) and optional 'phi'")
    p.add_argument("--skeleton", help="Skeleton JSON (default: bundled template)")
    p.add_argument("--center", type=float, nargs=3, metavar=("X", "Y", "Z"),
                   help="Object center in world units; required by object modes")


def _visual_inputs(p: argparse.ArgumentParser, with_mode: bool = True):
    p.add_argument("--grid", help="Image feature grid (GSDG), world coordinates = camera coordinates")
    p.add_argument("--camera", help="Camera intrinsics JSON for --grid")
    if with_mode:
        p.add_argument("--visual-mode", choices=VISUAL_MODES,
                       help="v1: pooled global feature, v2: feature sampled at each point's projection")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Kinematic-feature SDF toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gensdf", help="Sample signed distances around a hand and an object mesh")
    _common(p)
    p.add_argument("--hand", help="Hand mesh (OBJ)")
    p.add_argument("--object", help="Object mesh (OBJ)")
    p.add_argument("--count", type=int, help="Number of samples")
    p.add_argument("--near-fraction", type=float, help="Fraction of samples drawn near the surfaces")
    p.add_argument("--sigmas", type=float, nargs="+", help="Near-surface noise scales (normalized units)")
    p.add_argument("--cm-per-unit", type=float, help="Centimeters per world unit of the meshes, recorded for eval")

    p = sub.add_parser("fk", help="Joint positions of a pose")
    _common(p)
    p.add_argument("--pose", help="Pose JSON")
    p.add_argument("--skeleton", help="Skeleton JSON (default: bundled template)")

    p = sub.add_parser("ik", help="Pose that reproduces a joint set")
    _common(p)
    p.add_argument("--joints", help="Joint JSON ({'joints': 21x3})")
    p.add_argument("--skeleton", help="Skeleton JSON (default: bundled template)")

    p = sub.add_parser("features", help="Kinematic features at every sample position (CSV)")
    _common(p)
    _pose_inputs(p)
    _visual_inputs(p)
    p.add_argument("--samples", help="Sample set (GSDF)")
    p.add_argument("--mode", choices=MODES)

    p = sub.add_parser("fit", help="Train an SDF decoder on a sample set")
    _common(p)
    _pose_inputs(p)
    p.add_argument("--samples", help="Sample set (GSDF)")
    _visual_inputs(p)
    p.add_argument("--mode", choices=MODES, help="Feature mode; k* fits the hand, ko* the object")
    p.add_argument("--object-mode", choices=OBJECT_MODES,
                   help="Also fit an object decoder jointly on the weighted shape loss")
    p.add_argument("--object-out", dest="object_output", help="Object model path for --object-mode")
    p.add_argument("--loss-weights", type=float, nargs=3, metavar=("W_OP", "W_HSDF", "W_OSDF"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--steps-per-epoch", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--decay-every", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--hidden", type=int, help="Hidden layer width")
    p.add_argument("--layers", type=int, help="Number of linear layers")

    p = sub.add_parser("extract", help="Marching-cubes mesh of a fitted decoder")
    _common(p)
    _pose_inputs(p)
    _visual_inputs(p, with_mode=False)
    p.add_argument("--model", help="Model file written by fit")
    p.add_argument("--res", type=int, help="Grid resolution per axis")
    p.add_argument("--iso", type=float, help="Iso level")

    p = sub.add_parser("eval", help="Reconstruction, pose and interaction metrics")
    _common(p)
    for side in ("hand", "object"):
        p.add_argument(f"--pred-{side}", help=f"Predicted {side} mesh (OBJ)")
        p.add_argument(f"--gt-{side}", help=f"Ground-truth {side} mesh (OBJ)")
    p.add_argument("--pred-joints", help="Predicted joint JSON")
    p.add_argument("--gt-joints", help="Ground-truth joint JSON")
    p.add_argument("--pred-center", type=float, nargs=3, metavar=("X", "Y", "Z"))
    p.add_argument("--gt-center", type=float, nargs=3, metavar=("X", "Y", "Z"))
    p.add_argument("--surface-samples", type=int)
    p.add_argument("--align-iters", type=int)
    p.add_argument("--cm-per-unit", type=float,
                   help="Centimeters per world unit (default: recorded in the mesh manifests, else 100)")
    p.add_argument("--voxel-cm", type=float)
    p.add_argument("--no-interaction", dest="interaction", action="store_const", const=False,
                   help="Skip contact / penetration / intersection volume")
    p.add_argument("--csv", help="Also write the per-sample table as CSV")

    p = sub.add_parser("ablate", help="Feature-mode ablation on the synthetic capsule-hand benchmark")
    _common(p)
    p.add_argument("--train-poses", type=int)
    p.add_argument("--test-poses", type=int)
    p.add_argument("--mode", dest="modes", choices=MODES + list(VISUAL_MODES), action="append",
                   help="Restrict to these modes (repeatable)")
    p.add_argument("--samples-per-scene", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--steps-per-epoch", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--res", type=int, help="Evaluation grid resolution")
    p.add_argument("--surface-samples", type=int)
    p.add_argument("--csv", help="Also write the comparison table as CSV")
    return parser


def _flags(args: argparse.Namespace) -> Dict[str, Any]:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    modes = flags.pop("modes", None)
    if modes:
        flags["hand_modes"] = [m for m in modes if m in HAND_MODES]
        flags["object_modes"] = [m for m in modes if m in OBJECT_MODES]
        flags["visual_modes"] = [m for m in modes if m in VISUAL_MODES]
    return flags


def _report_error(payload: Dict[str, Any]):
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        set_run_config(resolve_config(args.command, _flags(args), args.config).validate())
        cfg = get_run_config()
        COMMAND_TABLE[cfg.command](cfg)
        return 0
    except KinSdfError as e:
        print(f"❌ {e.message}")
        _report_error(e.to_dict())
        return e.exit_code
    except Exception as e:
        print(f"❌ {type(e).__name__}: {e}")
        _report_error({
            "error": type(e).__name__,
            "message": str(e),
            "exit_code": 4,
            "file": None,
            "field": None,
            "detail": traceback.format_exc(),
        })
        return 4


if __name__ == "__main__":
    sys.exit(main())
