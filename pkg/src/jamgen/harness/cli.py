"""Command-line driver.

Verbs: train-system, train-pgm, train-uap, train-substitute, gan-train,
attack-eval, defense-eval, compare.  Exit codes: 0 success, 2 config error,
3 missing artifact, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigError, DivergedError, MissingArtifactError
from ..nn import save_model, save_tensors
from .config import ExperimentConfig, load_config
from .results import ResultTable, compare, format_comparison
from .runner import Workspace, run
from .seeds import stage_rng


def _outdir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_train_system(args):
    cfg = _load(args)
    ws = Workspace(cfg.seed, desk=cfg.desk_scale)
    bundle = ws.bundle(cfg.scenario)
    out = _outdir(args)
    if cfg.scenario == "autoencoder":
        save_model(bundle.victim.encoder, out / "ae-encoder.awnn", tag="ae-encoder")
        save_model(bundle.victim.decoder, out / "ae-decoder.awnn", tag="ae-decoder")
    elif cfg.scenario == "modulation":
        save_model(bundle.victim, out / "classifier.awnn", tag="classifier")
    else:
        save_model(bundle.victim, out / "ofdm-detector.awnn", tag="ofdm-detector")
    print(f"trained {cfg.scenario} victim -> {out}")


def cmd_train_pgm(args):
    cfg = _load(args)
    ws = Workspace(cfg.seed, desk=cfg.desk_scale)
    gen, disc = ws.pgm(cfg.scenario, cfg.attack.psr_db, alpha=cfg.attack.alpha,
                       beta=cfg.attack.beta, black_box=cfg.attack.black_box)
    out = _outdir(args)
    extra = {"psr_db": cfg.attack.psr_db, "alpha": cfg.attack.alpha,
             "beta": cfg.attack.beta, "power_budget": gen.power_budget,
             "config": {k: (list(v) if isinstance(v, tuple) else v)
                        for k, v in vars(gen.config).items()}}
    save_model(gen.model, out / "pgm.awnn", tag="pgm", extra=extra)
    if disc is not None:
        save_model(disc.model, out / "disc.awnn", tag="disc",
                   extra={"mu": disc.mu, "sigma": disc.sigma})
    print(f"trained pgm ({cfg.scenario}, psr {cfg.attack.psr_db} dB) -> {out}")


def cmd_train_uap(args):
    cfg = _load(args)
    ws = Workspace(cfg.seed, desk=cfg.desk_scale)
    uap = ws.uap(cfg.scenario, cfg.attack.psr_db)
    out = _outdir(args)
    save_tensors(out / "uap.awnn", "uap", {"delta": uap.delta},
                 extra={"psr_db": uap.psr_db, "power_budget": uap.power_budget,
                        "epochs": uap.epochs})
    print(f"trained single uap ({cfg.scenario}) -> {out}")


def cmd_train_substitute(args):
    cfg = _load(args)
    ws = Workspace(cfg.seed, desk=cfg.desk_scale)
    from .runner import build_substitute_target
    target = build_substitute_target(ws.bundle(cfg.scenario), ws.master)
    out = _outdir(args)
    if cfg.scenario == "autoencoder":
        save_model(target.system.encoder, out / "sub-encoder.awnn", tag="sub-encoder")
        save_model(target.system.decoder, out / "sub-decoder.awnn", tag="sub-decoder")
    elif cfg.scenario == "modulation":
        save_model(target.classifier, out / "sub-classifier.awnn", tag="sub-classifier")
    else:
        save_model(target.detector, out / "sub-ofdm.awnn", tag="sub-ofdm")
    print(f"trained substitute ({cfg.scenario}) -> {out}")


def cmd_gan_train(args):
    cfg = _load(args)
    if cfg.attack.alpha <= 0:
        raise ConfigError("gan-train requires attack.alpha > 0")
    ws = Workspace(cfg.seed, desk=cfg.desk_scale)
    gen, disc = ws.pgm(cfg.scenario, cfg.attack.psr_db, alpha=cfg.attack.alpha,
                       beta=cfg.attack.beta)
    from ..gan import discriminator_f1
    f1 = discriminator_f1(disc, gen, 4000, stage_rng(cfg.seed, "gan-f1"))
    out = _outdir(args)
    save_model(gen.model, out / "pgm.awnn", tag="pgm",
               extra={"alpha": cfg.attack.alpha, "psr_db": cfg.attack.psr_db})
    save_model(disc.model, out / "disc.awnn", tag="disc",
               extra={"mu": disc.mu, "sigma": disc.sigma, "f1": f1})
    print(f"gan-train alpha={cfg.attack.alpha}: discriminator f1 = {f1:.4f} -> {out}")


def _eval(args, need_defense: bool):
    cfg = _load(args)
    if need_defense and cfg.defense.kind == "none":
        raise ConfigError("defense-eval requires a defense")
    if not need_defense and cfg.defense.kind != "none":
        raise ConfigError("attack-eval runs without a defense (use defense-eval)")
    if cfg.out is None and args.out:
        cfg.out = str(Path(args.out) / f"{cfg.scenario}_{cfg.attack.kind}_"
                                       f"{cfg.defense.kind}.csv")
    table = run(cfg)
    print(f"{len(table.rows)} rows" + (f" -> {cfg.out}" if cfg.out else ""))
    return table


def cmd_attack_eval(args):
    _eval(args, need_defense=False)


def cmd_defense_eval(args):
    _eval(args, need_defense=True)


def cmd_compare(args):
    tables = []
    for path in args.tables:
        if not Path(path).exists():
            raise MissingArtifactError(path)
        tables.append(ResultTable.from_csv(path))
    a, b = tables[0], tables[1]
    metric_a = args.metric or sorted(a.metrics())[0]
    metric_b = args.metric_b or metric_a
    report = compare(a, b, metric_a, metric_b)
    print(format_comparison(report, Path(args.tables[0]).stem,
                            Path(args.tables[1]).stem))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="jamgen",
        description="Generator-based adversarial attacks on DNN wireless "
                    "receivers: training, evaluation sweeps, defenses.")
    sub = parser.add_subparsers(dest="verb", required=True)
    verbs = {
        "train-system": cmd_train_system,
        "train-pgm": cmd_train_pgm,
        "train-uap": cmd_train_uap,
        "train-substitute": cmd_train_substitute,
        "gan-train": cmd_gan_train,
        "attack-eval": cmd_attack_eval,
        "defense-eval": cmd_defense_eval,
    }
    for name in verbs:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
    p = sub.add_parser("compare")
    p.add_argument("tables", nargs=2)
    p.add_argument("--metric", default=None)
    p.add_argument("--metric-b", default=None)
    p.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)
    try:
        if args.verb == "compare":
            cmd_compare(args)
        else:
            verbs[args.verb](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except MissingArtifactError as e:
        print(f"missing artifact: {e}", file=sys.stderr)
        return 3
    except DivergedError as e:
        print(f"numerical divergence: {e}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
