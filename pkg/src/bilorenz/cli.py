"""Scenario-driven command line frontend.

Subcommands:
  iterate <config|preset>   run the iteration, emit CSV tables
  bounds <upper|lower>      iterate a bound recursion from a marginal seed
  classify <copula>         TP2/RR2 + log-concavity + rank correlations
  presets list              list shipped scenario presets

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
The environment variable LORENZ_GRID_N overrides every grid size.
"""

import argparse
import os
import re
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import bounds, copulas, diagnostics, engine, marginals
from .errors import BilorenzError, ConfigError, DomainError, ParameterError
from .grids import DEFAULT_GRID_N, unit_grid

EMIT_FLAGS = ("marginals", "phi", "dependence", "bounds", "classify")

_MARGINAL_KEYS = {
    "uniform01": (),
    "power": ("a",),
    "lognormal": ("mu", "sigma"),
    "beta": ("alpha", "beta"),
    "gamma": ("shape", "scale"),
    "sinewave": ("freq", "amp"),
}
_COPULA_KEYS = {
    "independence": (),
    "gaussian": ("rho",),
    "clayton": ("theta",),
    "frank": ("theta",),
    "amh": ("theta",),
    "comonotonic_m": (),
    "countermonotonic_w": (),
}


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    f1: marginals.MarginalSpec
    f2: marginals.MarginalSpec
    copula: copulas.CopulaSpec
    grid_n: int
    n_max: int
    output: Path
    emit: frozenset


def _parse_sections(path: Path):
    """Key-value grammar: full-line comments (#), [section] headers, key = value."""
    sections: dict = {None: {}}
    current = None
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path)
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in ("marginal1", "marginal2", "copula", "run"):
                raise ConfigError(f"unknown section [{current}]", path, lineno)
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", path, lineno)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key in sections.setdefault(current, {}):
            raise ConfigError(f"duplicate key {key!r}", path, lineno)
        sections[current][key] = (value, lineno)
    return sections


def _take(section: dict, key: str, path, *, required=False, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key {key!r}", path)
        return default, None
    return section.pop(key)


def _reject_leftovers(section: dict, where: str, path):
    for key, (_, lineno) in section.items():
        raise ConfigError(f"unknown key {key!r} in {where}", path, lineno)


def _parse_marginal_section(section: dict, where: str, path) -> marginals.MarginalSpec:
    fam, lineno = _take(section, "family", path, required=True)
    fam = fam.lower()
    if fam not in _MARGINAL_KEYS:
        raise ConfigError(f"unknown marginal family {fam!r}", path, lineno)
    args = []
    for key in _MARGINAL_KEYS[fam]:
        raw, key_line = _take(section, key, path, required=True)
        try:
            args.append(float(raw))
        except ValueError:
            raise ConfigError(f"key {key!r} must be a number, got {raw!r}", path, key_line)
    _reject_leftovers(section, where, path)
    try:
        return marginals.MarginalSpec(fam, tuple(args))
    except ParameterError as exc:
        raise ConfigError(str(exc), path, lineno)


def _parse_copula_section(section: dict, path) -> copulas.CopulaSpec:
    fam, lineno = _take(section, "family", path, required=True)
    fam = fam.lower()
    if fam not in _COPULA_KEYS:
        raise ConfigError(f"unknown copula family {fam!r}", path, lineno)
    args = []
    for key in _COPULA_KEYS[fam]:
        raw, key_line = _take(section, key, path, required=True)
        try:
            args.append(float(raw))
        except ValueError:
            raise ConfigError(f"key {key!r} must be a number, got {raw!r}", path, key_line)
    _reject_leftovers(section, "[copula]", path)
    try:
        return copulas.CopulaSpec(fam, tuple(args))
    except ParameterError as exc:
        raise ConfigError(str(exc), path, lineno)


def parse_config(path) -> RunConfig:
    """Parse and fully validate a scenario config file."""
    path = Path(path)
    sections = _parse_sections(path)

    top = sections.pop(None)
    scenario, _ = _take(top, "scenario", path, default=path.stem)
    _reject_leftovers(top, "the top level", path)

    for name in ("marginal1", "marginal2", "copula", "run"):
        if name not in sections:
            raise ConfigError(f"missing required section [{name}]", path)

    f1 = _parse_marginal_section(sections["marginal1"], "[marginal1]", path)
    f2 = _parse_marginal_section(sections["marginal2"], "[marginal2]", path)
    cop = _parse_copula_section(sections["copula"], path)

    run = sections["run"]

    def _int_key(key, required, default):
        raw, lineno = _take(run, key, path, required=required, default=None)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"key {key!r} must be an integer, got {raw!r}", path, lineno)

    grid_n = _int_key("grid_n", False, DEFAULT_GRID_N)
    n_max = _int_key("iterations", True, None)
    output_raw, _ = _take(run, "output", path, default=f"runs/{scenario}")
    emit_raw, emit_line = _take(run, "emit", path, default="marginals, phi, dependence")
    flags = frozenset(t.strip().lower() for t in emit_raw.split(",") if t.strip())
    bad = flags - set(EMIT_FLAGS)
    if bad:
        raise ConfigError(f"unknown emit flag(s) {sorted(bad)}", path, emit_line)
    _reject_leftovers(run, "[run]", path)

    try:
        engine.ScenarioSpec(f1, f2, cop, grid_n=grid_n, n_max=n_max)
    except ParameterError as exc:
        raise ConfigError(str(exc), path)

    return RunConfig(scenario=scenario, f1=f1, f2=f2, copula=cop, grid_n=grid_n,
                     n_max=n_max, output=Path(output_raw), emit=flags)


_TOKEN_RE = re.compile(r"^\s*([a-zA-Z0-9_]+)\s*(?:\(([^()]*)\))?\s*$")


def _parse_token(text: str, kind: str):
    m = _TOKEN_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse {kind} spec {text!r}; expected name(args)")
    fam = m.group(1).lower()
    args = tuple(float(a) for a in m.group(2).split(",")) if m.group(2) else ()
    return fam, args


def parse_marginal_token(text: str) -> marginals.MarginalSpec:
    """Parse compact seed syntax such as 'uniform01' or 'lognormal(0.5,0.2)'."""
    fam, args = _parse_token(text, "marginal")
    if fam == "uniform":
        fam = "uniform01"
    return marginals.MarginalSpec(fam, args)


def parse_copula_token(text: str) -> copulas.CopulaSpec:
    fam, args = _parse_token(text, "copula")
    alias = {"m": "comonotonic_m", "comonotonic": "comonotonic_m",
             "w": "countermonotonic_w", "countermonotonic": "countermonotonic_w"}
    return copulas.CopulaSpec(alias.get(fam, fam), args)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def emit_csv(path: Path, header, rows) -> Path:
    """Write one CSV table: UTF-8, comma separated, 12 significant digits."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def preset_names() -> list:
    root = resources.files("bilorenz") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_path(name: str) -> Path:
    path = Path(str(resources.files("bilorenz") / "presets" / f"{name}.cfg"))
    if not path.exists():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path


def run_scenario(cfg: RunConfig) -> list:
    """Execute a configured run and emit the flagged CSV tables.

    Row order is iteration-major, then grid index; two runs of the same
    config produce byte-identical files.
    """
    outdir = cfg.output
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write-probe"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {outdir} is not writable: {exc}")

    spec = engine.ScenarioSpec(cfg.f1, cfg.f2, cfg.copula,
                               grid_n=cfg.grid_n, n_max=cfg.n_max)
    x = unit_grid(cfg.grid_n)
    builder = diagnostics.TraceBuilder()
    marginal_rows = []
    classify_rows = []
    for s in engine.iterate_states(spec):
        builder.add(s)
        if "marginals" in cfg.emit:
            marginal_rows.extend(
                (s.n, x[j], s.L1.values[j], s.L2.values[j]) for j in range(cfg.grid_n))
        if "classify" in cfg.emit:
            rep = copulas.classify_tp2_rr2(s.c, tol=1e-6, clip=diagnostics.INTERIOR_CLIP)
            classify_rows.append((s.n, rep.tp2, rep.rr2, rep.worst_violation))
    trace = builder.finish()

    written = []
    if "marginals" in cfg.emit:
        written.append(emit_csv(outdir / "marginals.csv", ["n", "x", "L1", "L2"],
                                marginal_rows))
        written.append(emit_csv(
            outdir / "marginal_convergence.csv",
            ["n", "sup_err_phi1", "sup_err_phi2", "crossing1", "crossing2"],
            ((r.n, r.sup_err_phi1, r.sup_err_phi2, r.crossing1, r.crossing2)
             for r in trace.records)))
    if "phi" in cfg.emit:
        written.append(emit_csv(
            outdir / "phi.csv", ["n", "x", "phi1", "phi2"],
            ((r.n, p, r.phi1[p], r.phi2[p])
             for r in trace.records for p in diagnostics.PHI_PROBES)))
    if "dependence" in cfg.emit:
        written.append(emit_csv(
            outdir / "dependence.csv", ["n", "tau", "rho", "independence_gap"],
            ((r.n, r.tau, r.rho, r.independence_gap) for r in trace.records)))
    if "bounds" in cfg.emit:
        upper, lower = bounds.frechet_envelope(cfg.f1, cfg.f2, cfg.n_max, cfg.grid_n)
        written.append(emit_csv(
            outdir / "bounds.csv", ["n", "x", "upper", "lower1", "lower2"],
            ((k, x[j], upper.marginal1[k].values[j], lower.marginal1[k].values[j],
              lower.marginal2[k].values[j])
             for k in range(cfg.n_max + 1) for j in range(cfg.grid_n))))
    if "classify" in cfg.emit:
        written.append(emit_csv(outdir / "classify.csv",
                                ["n", "tp2", "rr2", "worst_violation"], classify_rows))
    return written


def _grid_n_from_env(default: int) -> int:
    raw = os.environ.get("LORENZ_GRID_N")
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"LORENZ_GRID_N must be an integer, got {raw!r}")
    return value


def _cmd_iterate(args) -> int:
    candidate = Path(args.config)
    path = candidate if candidate.exists() else preset_path(args.config)
    cfg = parse_config(path)
    grid_n = _grid_n_from_env(cfg.grid_n)
    output = Path(args.out) if args.out else cfg.output
    cfg = RunConfig(cfg.scenario, cfg.f1, cfg.f2, cfg.copula, grid_n,
                    cfg.n_max, output, cfg.emit)
    for written in run_scenario(cfg):
        print(f"wrote {written}")
    print(f"ok scenario={cfg.scenario} iterations={cfg.n_max} grid_n={cfg.grid_n}")
    return 0


def _cmd_bounds(args) -> int:
    seed = parse_marginal_token(args.seed)
    grid_n = _grid_n_from_env(args.grid_n)
    upper, lower = bounds.frechet_envelope(seed, seed, args.n, grid_n)
    seq = upper if args.side == "upper" else lower
    if args.out:
        emit_csv(Path(args.out), ["n", "x", "value"],
                 ((k, g.nodes[j], g.values[j])
                  for k, g in enumerate(seq.marginal1) for j in range(grid_n)))
        print(f"wrote {args.out}")
    if args.side == "upper":
        fit = diagnostics.power_law_exponent_fit(seq.marginal1[-1])
        print(f"exponent_fit={fit:.6f}")
    else:
        i_seq = diagnostics.denominator_sequence(seq)
        defect = bounds.check_reflection(seq.marginal1[-1], seq.marginal2[-1])
        print(f"I_final={i_seq[-1]:.12g}")
        print(f"reflection_defect={defect:.3e}")
    return 0


def _cmd_classify(args) -> int:
    spec = parse_copula_token(args.copula)
    grid_n = _grid_n_from_env(args.grid_n)
    header = ["family", "singular", "tp2", "rr2", "worst_violation",
              "log_concave_joint", "log_concave_coordinatewise", "tau", "rho"]
    if spec.singular:
        tau = 1.0 if spec.family == "comonotonic_m" else -1.0
        row = [str(spec), True, None, None, None, None, None, tau, tau]
    else:
        dens = copulas.density_grid(spec, grid_n)
        rep = copulas.classify_tp2_rr2(dens)
        lc = copulas.classify_log_concavity(dens)
        row = [str(spec), False, rep.tp2, rep.rr2, rep.worst_violation,
               lc.joint, lc.coordinatewise,
               diagnostics.kendall_tau(dens), diagnostics.spearman_rho(dens)]
    print(",".join(header))
    print(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    return 0


def _cmd_presets(args) -> int:
    if args.action == "list":
        for name in preset_names():
            print(name)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bilorenz",
        description="Iterated bivariate Lorenz curves: runs, bounds, classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_it = sub.add_parser("iterate", help="run a scenario config or preset")
    p_it.add_argument("config", help="path to a config file, or a preset name")
    p_it.add_argument("--out", help="override the output directory")
    p_it.set_defaults(func=_cmd_iterate)

    p_b = sub.add_parser("bounds", help="iterate a Frechet-Hoeffding bound recursion")
    p_b.add_argument("side", choices=("upper", "lower"))
    p_b.add_argument("--seed", required=True,
                     help="marginal seed, e.g. uniform or lognormal(0.5,0.2)")
    p_b.add_argument("--n", type=int, required=True, help="number of iterations")
    p_b.add_argument("--grid-n", dest="grid_n", type=int, default=DEFAULT_GRID_N)
    p_b.add_argument("--out", help="write iterates to this CSV file")
    p_b.set_defaults(func=_cmd_bounds)

    p_c = sub.add_parser("classify", help="classify a copula density")
    p_c.add_argument("copula", help="copula spec, e.g. clayton(2) or gaussian(-0.8)")
    p_c.add_argument("--grid-n", dest="grid_n", type=int, default=DEFAULT_GRID_N)
    p_c.set_defaults(func=_cmd_classify)

    p_p = sub.add_parser("presets", help="manage shipped presets")
    p_p.add_argument("action", choices=("list",))
    p_p.set_defaults(func=_cmd_presets)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BilorenzError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
