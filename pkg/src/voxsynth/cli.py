"""Command-line surface.

Every run resolves its arguments into a flat JSON-serializable parameter
dict, executes, and writes a manifest (<out>.manifest.json by default)
recording the command, parameters, config digest, input digests, and output
digests. ``rerun`` re-executes a manifest and verifies the outputs are
byte-identical. No timestamps enter any artifact, so reruns are exact.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, anatomy, metrics, priors, volumes
from .diffusion import (
    ConvDenoiser,
    TrainConfig,
    build_schedule,
    load_checkpoint,
    sample as sample_slice,
    save_checkpoint,
    train as train_model,
)
from .diffusion.training import loss_curve_csv
from .errors import ValidationError, VoxsynthError
from .volumes import Modality

MANIFEST_VERSION = 1


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_params(params: dict) -> str:
    return hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest()


def _write_manifest(path, command, params, inputs, outputs):
    manifest = {
        "tool": "voxsynth",
        "version": __version__,
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "params": params,
        "config_digest": _digest_params(params),
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in outputs],
    }
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _modality_window(v: volumes.ScalarVolume) -> tuple[float, float]:
    if v.modality == Modality.CT_HU:
        return metrics.CT_WINDOW
    if v.modality == Modality.NORMALIZED:
        return (-1.0, 1.0)
    return v.value_range


# --------------------------------------------------------------------------
# command bodies: take a resolved params dict, return (inputs, outputs)


def run_phantom(params) -> tuple[list, list]:
    spec = anatomy.PhantomSpec()
    inputs = []
    if params["spec"]:
        with open(params["spec"]) as f:
            spec = anatomy.PhantomSpec.from_json_dict(json.load(f))
        inputs.append(params["spec"])
    vol, _sid = anatomy.generate_phantom(params["seed"], spec)
    volumes.write_volume(params["out"], vol)
    return inputs, [params["out"]]


def run_contour(params) -> tuple[list, list]:
    img = volumes.read_volume(params["input"])
    if not isinstance(img, volumes.ScalarVolume):
        raise ValidationError("contour expects a scalar volume input")
    mask = anatomy.extract_body_contour(img, params["threshold"])
    out = volumes.label_volume(
        mask.data.astype(np.uint8), mask.spacing, subject_id="contour"
    )
    volumes.write_volume(params["out"], out)
    return [params["input"]], [params["out"]]


def run_fuse(params) -> tuple[list, list]:
    organs = volumes.read_volume(params["organs"])
    contour_vol = volumes.read_volume(params["contour"])
    if not isinstance(organs, volumes.LabelVolume) or not isinstance(
        contour_vol, volumes.LabelVolume
    ):
        raise ValidationError("fuse expects label volumes for organs and contour")
    contour = anatomy.BodyContourMask(
        contour_vol.dims, contour_vol.spacing, contour_vol.data != 0
    )
    fused = anatomy.fuse_masks(organs, contour)
    volumes.write_volume(params["out"], fused)
    return [params["organs"], params["contour"]], [params["out"]]


def run_compose(params) -> tuple[list, list]:
    with open(params["recipe"]) as f:
        recipe = anatomy.CompositionRecipe.from_json_dict(json.load(f))
    subjects = {}
    for p in params["subjects"]:
        v = volumes.read_volume(p)
        if not isinstance(v, volumes.LabelVolume):
            raise ValidationError(f"{p} is not a label volume")
        subjects[v.subject_id] = v
    result = anatomy.compose_anatomy(subjects, recipe)
    volumes.write_volume(params["out"], result.volume)
    outputs = [params["out"]]
    if params["provenance_out"]:
        prov = volumes.label_volume(
            result.provenance.astype(np.uint16),
            result.volume.spacing,
            subject_id="provenance",
        )
        volumes.write_volume(params["provenance_out"], prov)
        with open(params["provenance_out"] + ".sources.json", "w") as f:
            json.dump({"sources": list(result.sources)}, f, sort_keys=True)
            f.write("\n")
        outputs += [params["provenance_out"], params["provenance_out"] + ".sources.json"]
    return [params["recipe"]] + list(params["subjects"]), outputs


def run_simulate(params) -> tuple[list, list]:
    labels = volumes.read_volume(params["labels"])
    if not isinstance(labels, volumes.LabelVolume):
        raise ValidationError("simulate expects a label volume")
    inputs = [params["labels"]]
    if params["table"]:
        table = priors.load_tissue_table(params["table"])
        inputs.append(params["table"])
    else:
        table = priors.default_tissue_table()
    presets = priors.load_sequence_presets()
    kind = params["kind"]
    if kind not in presets:
        raise ValidationError(f"unknown sequence kind {kind!r} (have {sorted(presets)})")
    base = presets[kind]
    seq = priors.SequenceParams(
        kind=base.kind,
        tr_ms=params["tr"] if params["tr"] is not None else base.tr_ms,
        te_ms=params["te"] if params["te"] is not None else base.te_ms,
        flip_deg=params["flip"] if params["flip"] is not None else base.flip_deg,
    )
    out = priors.simulate_prior(labels, table, seq)
    volumes.write_volume(params["out"], out)
    return inputs, [params["out"]]


def run_train(params) -> tuple[list, list]:
    with open(params["pairs"]) as f:
        pair_list = json.load(f)["pairs"]
    inputs = [params["pairs"]]
    dataset = []
    for entry in pair_list:
        prior = volumes.read_volume(entry["prior"])
        target = volumes.read_volume(entry.get("target", entry["prior"]))
        inputs.append(entry["prior"])
        if "target" in entry:
            inputs.append(entry["target"])
        ywin = _modality_window(prior)
        xwin = _modality_window(target)
        for z in range(prior.n_slices):
            y = volumes.normalize_array(prior.slice_at(z), ywin)
            x = volumes.normalize_array(target.slice_at(z), xwin)
            dataset.append((x, y))
    sched = build_schedule(params["timesteps"], params["beta_start"], params["beta_end"])
    model = ConvDenoiser(
        base_channels=params["base_channels"],
        emb_dim=params["emb_dim"],
        seed=params["model_seed"],
    )
    cfg = TrainConfig(
        epochs=params["epochs"],
        batch_size=params["batch_size"],
        learning_rate=params["learning_rate"],
        seed=params["seed"],
    )
    result = train_model(model, dataset, cfg, sched)
    save_checkpoint(
        params["out"],
        model,
        {
            "T": params["timesteps"],
            "beta_start": params["beta_start"],
            "beta_end": params["beta_end"],
        },
        {"model_init": params["model_seed"], "train": params["seed"]},
    )
    outputs = [params["out"]]
    if params["losses_out"]:
        loss_curve_csv(result, params["losses_out"])
        outputs.append(params["losses_out"])
    return inputs, outputs


def run_sample(params) -> tuple[list, list]:
    model, sched, _header = load_checkpoint(params["checkpoint"])
    prior = volumes.read_volume(params["prior"])
    if not isinstance(prior, volumes.ScalarVolume):
        raise ValidationError("sample expects a scalar prior volume")
    window = _modality_window(prior)
    out_slices = []
    for z in range(prior.n_slices):
        y = volumes.normalize_array(prior.slice_at(z), window)
        x0 = sample_slice(model, y, sched, rng_seed=params["seed"] + z)
        out_slices.append(volumes.denormalize_array(x0, window))
    gen = volumes.scalar_volume(
        np.stack(out_slices), prior.spacing, prior.modality, window
    )
    volumes.write_volume(params["out"], gen)
    return [params["checkpoint"], params["prior"]], [params["out"]]


def run_eval(params) -> tuple[list, list]:
    if params.get("pred_labels"):
        return _run_eval_dice_grid(params)
    pred = volumes.read_volume(params["pred"])
    ref = volumes.read_volume(params["ref"])
    if not isinstance(pred, volumes.ScalarVolume) or not isinstance(ref, volumes.ScalarVolume):
        raise ValidationError("eval expects scalar volumes (use --pred-labels for Dice grids)")
    report = metrics.evaluate_volume_pair(pred, ref, dataset_tag=params["tag"])
    feats_needed = params["frechet_grid"] ** 2
    if pred.n_slices > feats_needed:
        grid = (params["frechet_grid"], params["frechet_grid"])
        fa = metrics.downsampled_pixel_features(list(pred.data), grid)
        fb = metrics.downsampled_pixel_features(list(ref.data), grid)
        info = metrics.frechet_gaussian_info(fa, fb)
        report.metadata["frechet"] = {
            "value": info.value,
            "regularized": info.regularized,
            "eps": info.eps,
            "feature_grid": list(grid),
        }
    metrics.report_to_csv(report, params["out"])
    outputs = [params["out"]]
    if params["summary"]:
        metrics.report_summary_json(report, params["summary"])
        outputs.append(params["summary"])
    return [params["pred"], params["ref"]], outputs


def _run_eval_dice_grid(params) -> tuple[list, list]:
    pred_paths = sorted(params["pred_labels"])
    ref_paths = sorted(params["ref_labels"])
    preds, refs = {}, {}
    for p in pred_paths:
        v = volumes.read_volume(p)
        preds[v.subject_id or os.path.basename(p)] = v.data
    for p in ref_paths:
        v = volumes.read_volume(p)
        refs[v.subject_id or os.path.basename(p)] = v.data
    class_ids = params["classes"]
    grid, subjects = metrics.dice_grid(preds, refs, class_ids)
    metrics.dice_grid_to_csv(grid, subjects, class_ids, params["out"])
    outputs = [params["out"]]
    if params["heatmap"]:
        metrics.dice_grid_to_png(grid, subjects, class_ids, params["heatmap"])
        outputs.append(params["heatmap"])
    return pred_paths + ref_paths, outputs


_COMMANDS = {
    "phantom": run_phantom,
    "contour": run_contour,
    "fuse": run_fuse,
    "compose": run_compose,
    "simulate": run_simulate,
    "train": run_train,
    "sample": run_sample,
    "eval": run_eval,
}


def _execute(command: str, params: dict, manifest_path=None) -> None:
    inputs, outputs = _COMMANDS[command](params)
    if manifest_path is None:
        manifest_path = outputs[0] + ".manifest.json"
    _write_manifest(manifest_path, command, params, inputs, outputs)


def run_rerun(manifest_path, out_dir=None) -> int:
    """Re-execute a recorded run and verify byte-identical outputs."""
    with open(manifest_path) as f:
        manifest = json.load(f)
    command = manifest["command"]
    if command not in _COMMANDS:
        raise ValidationError(f"manifest names unknown command {command!r}")
    params = dict(manifest["params"])
    if manifest.get("config_digest") != _digest_params(params):
        raise ValidationError("manifest config digest does not match its params")
    for rec in manifest["inputs"]:
        if _sha256(rec["path"]) != rec["sha256"]:
            raise ValidationError(f"input {rec['path']} changed since the recorded run")

    remap = {}
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for rec in manifest["outputs"]:
            remap[rec["path"]] = os.path.join(out_dir, os.path.basename(rec["path"]))
        for key, value in list(params.items()):
            if isinstance(value, str) and value in remap:
                params[key] = remap[value]

    inputs, outputs = _COMMANDS[command](params)
    ok = True
    for rec in manifest["outputs"]:
        new_path = remap.get(rec["path"], rec["path"])
        actual = _sha256(new_path)
        status = "ok" if actual == rec["sha256"] else "MISMATCH"
        if actual != rec["sha256"]:
            ok = False
        print(f"rerun {command}: {new_path} {status}")
    return 0 if ok else 1


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="voxsynth",
        description="label volumes -> physical priors -> conditional diffusion -> metrics",
    )
    ap.add_argument("--version", action="version", version=f"voxsynth {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    command_parsers = []

    p = sub.add_parser("phantom", help="generate a procedural phantom label volume")
    command_parsers.append(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", help="phantom spec JSON (defaults built in)")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("contour", help="extract the solid body contour of a scalar volume")
    command_parsers.append(p)
    p.add_argument("--input", required=True)
    p.add_argument(
        "--threshold", type=float, default=anatomy.DEFAULT_CT_CONTOUR_THRESHOLD
    )
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("fuse", help="restrict organ labels to a body contour")
    command_parsers.append(p)
    p.add_argument("--organs", required=True)
    p.add_argument("--contour", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("compose", help="merge organs from multiple subjects")
    command_parsers.append(p)
    p.add_argument("--recipe", required=True, help="composition recipe JSON")
    p.add_argument("--subjects", nargs="+", required=True, help=".svol label volumes")
    p.add_argument("--out", required=True)
    p.add_argument("--provenance-out", dest="provenance_out")
    p.add_argument("--manifest")

    p = sub.add_parser("simulate", help="simulate a modality-specific prior volume")
    command_parsers.append(p)
    p.add_argument("--labels", required=True)
    p.add_argument(
        "--kind",
        required=True,
        choices=[
            "ct", "gre_t1", "space_t2", "vibe_in", "vibe_opp",
            "dixon_vibe_in", "dixon_vibe_opp",
        ],
    )
    p.add_argument("--table", help="tissue table CSV (defaults to packaged v1)")
    p.add_argument("--tr", type=float)
    p.add_argument("--te", type=float)
    p.add_argument("--flip", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("train", help="train the desk denoiser on prior/target pairs")
    command_parsers.append(p)
    p.add_argument("--pairs", required=True, help='JSON {"pairs": [{"prior", "target"?}]}')
    p.add_argument("--timesteps", type=int, default=500)
    p.add_argument("--beta-start", dest="beta_start", type=float, default=1e-4)
    p.add_argument("--beta-end", dest="beta_end", type=float, default=0.02)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=4)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=2e-3)
    p.add_argument("--base-channels", dest="base_channels", type=int, default=8)
    p.add_argument("--emb-dim", dest="emb_dim", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-seed", dest="model_seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--losses-out", dest="losses_out")
    p.add_argument("--manifest")

    p = sub.add_parser("sample", help="generate a volume conditioned on a prior")
    command_parsers.append(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--prior", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("eval", help="metric report for a prediction/reference pair")
    command_parsers.append(p)
    p.add_argument("--pred")
    p.add_argument("--ref")
    p.add_argument("--tag", default="")
    p.add_argument("--frechet-grid", dest="frechet_grid", type=int, default=4)
    p.add_argument("--pred-labels", dest="pred_labels", nargs="+")
    p.add_argument("--ref-labels", dest="ref_labels", nargs="+")
    p.add_argument("--classes", type=lambda s: [int(x) for x in s.split(",")])
    p.add_argument("--heatmap")
    p.add_argument("--out", required=True)
    p.add_argument("--summary")
    p.add_argument("--manifest")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--data-root", dest="data_root", default=os.environ.get("VOXSYNTH_DATA", "."))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    p = sub.add_parser("rerun", help="re-execute a manifest and verify outputs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", dest="out_dir")

    for cp in command_parsers:
        cp.add_argument("--config", help="JSON parameter file; explicit flags win")

    return ap


_PARAM_KEYS = {
    "phantom": ["seed", "spec", "out"],
    "contour": ["input", "threshold", "out"],
    "fuse": ["organs", "contour", "out"],
    "compose": ["recipe", "subjects", "out", "provenance_out"],
    "simulate": ["labels", "kind", "table", "tr", "te", "flip", "out"],
    "train": [
        "pairs", "timesteps", "beta_start", "beta_end", "epochs", "batch_size",
        "learning_rate", "base_channels", "emb_dim", "seed", "model_seed",
        "out", "losses_out",
    ],
    "sample": ["checkpoint", "prior", "seed", "out"],
    "eval": [
        "pred", "ref", "tag", "frechet_grid", "pred_labels", "ref_labels",
        "classes", "heatmap", "out", "summary",
    ],
}


def _apply_config(params: dict, config_path, command: str, argv) -> dict:
    """Overlay config-file values onto parameters the user did not set."""
    with open(config_path) as f:
        overrides = json.load(f)
    given = set()
    for token in argv:
        if token.startswith("--"):
            given.add(token[2:].split("=", 1)[0].replace("-", "_"))
    merged = dict(params)
    for key, value in overrides.items():
        if key not in _PARAM_KEYS[command]:
            raise ValidationError(f"config key {key!r} unknown for {command}")
        if key not in given:
            merged[key] = value
    return merged


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "rerun":
            return run_rerun(args.manifest, args.out_dir)
        if args.command == "serve":
            import uvicorn

            from .service import create_app

            uvicorn.run(create_app(args.data_root), host=args.host, port=args.port)
            return 0
        params = {k: getattr(args, k) for k in _PARAM_KEYS[args.command]}
        if args.config:
            params = _apply_config(params, args.config, args.command, argv)
        if args.command == "eval" and not params.get("pred_labels"):
            if not params.get("pred") or not params.get("ref"):
                print("eval: --pred/--ref or --pred-labels/--ref-labels required",
                      file=sys.stderr)
                return 2
        _execute(args.command, params, args.manifest)
        return 0
    except VoxsynthError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (LookupError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
