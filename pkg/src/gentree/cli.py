"""Command-line interface: grow, compile, analyze, verify and render.

Exit status: 0 when every configured check passes, 1 when a check fails,
2 for unreadable input or unwritable output, 3 for any other module error.
Errors are written to stderr as a single JSON object.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from .analysis import canopy_equivalence_report, endpoint_set, extract_scaffold_tangent, hausdorff, \
    recover_parameters
from .compiler import check_isomorphism, compile_tree, policy_from_name, scaffold_of
from .errors import GentreeError, NotIsomorphic
from .frontend import IFSSpec, LSystemSpec, attractor_points, expand_discrete
from .integrate import DEFAULT_STEP
from .render import RenderOptions, render_svg
from .specfile import GrowSpec, load_spec
from .tree import GeneratorTree, check_branch_continuity, grow_tree, tree_to_dict

EXIT_OK, EXIT_CHECK, EXIT_IO, EXIT_ERROR = 0, 1, 2, 3
COMMANDS = ("grow", "compile", "analyze", "verify", "render")


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Path
    out: Path = Path(".")
    depth: int | None = None
    policy: str = "matched"
    turn: float = 0.5
    integrator: str = "auto"
    step: float = DEFAULT_STEP
    overlay_scaffold: bool = False
    markers: bool = False
    tolerance: float = 1e-9
    ratio_tolerance: float = 0.1
    k_ref: int | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.depth is not None and self.depth < 0:
            raise ValueError("depth must be non-negative")
        if not self.step > 0:
            raise ValueError("step must be positive")


class _IOFailure(Exception):
    pass


def _read(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _IOFailure(f"cannot read {path}: {e.strerror or e}") from None


def _write(out: Path, name: str, text: str) -> Path:
    try:
        out.mkdir(parents=True, exist_ok=True)
        p = out / name
        p.write_text(text, encoding="utf-8")
    except OSError as e:
        raise _IOFailure(f"cannot write {out / name}: {e.strerror or e}") from None
    return p


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _depth(cfg: RunConfig, declared: int | None, fallback: int) -> int:
    if cfg.depth is not None:
        return cfg.depth
    return declared if declared is not None else fallback


def _grow(spec: GrowSpec, cfg: RunConfig, declared: int | None) -> GeneratorTree:
    return grow_tree(spec.field, spec.init, spec.span, spec.schedule, _depth(cfg, declared, spec.depth),
                     integrator=cfg.integrator, step=cfg.step)


def _compile(spec, cfg: RunConfig, declared: int | None):
    dtree = expand_discrete(spec, _depth(cfg, declared, 6))
    gtree = compile_tree(dtree, policy_from_name(cfg.policy, cfg.turn))
    return dtree, gtree


def _certify(gtree, dtree, cfg: RunConfig) -> tuple[dict, bool]:
    try:
        cert = check_isomorphism(scaffold_of(gtree), dtree).to_dict()
    except NotIsomorphic as e:
        return {"isomorphic": False, "depth": dtree.depth, **e.to_dict()}, False
    cert["tolerance"] = cfg.tolerance
    return cert, cert["max_gap"] < cfg.tolerance


def _tree_for(spec, cfg: RunConfig, declared: int | None) -> GeneratorTree:
    if isinstance(spec, GeneratorTree):
        return spec
    if isinstance(spec, GrowSpec):
        return _grow(spec, cfg, declared)
    return _compile(spec, cfg, declared)[1]


def _render(gtree: GeneratorTree, cfg: RunConfig) -> str:
    scaffold = scaffold_of(gtree) if cfg.overlay_scaffold else None
    return render_svg(gtree, scaffold, RenderOptions(markers=cfg.markers))


def _run(cfg: RunConfig) -> tuple[int, dict]:
    spec, declared = load_spec(_read(cfg.input))
    out = Path(cfg.out)
    summary: dict = {"command": cfg.command}

    if cfg.command == "grow":
        if not isinstance(spec, GrowSpec):
            raise GentreeError("grow expects a 'generator' spec")
        gtree = _grow(spec, cfg, declared)
        cont = check_branch_continuity(gtree)
        _write(out, "tree.json", _dump(tree_to_dict(gtree)))
        _write(out, "tree.svg", _render(gtree, cfg))
        summary.update(branches=len(gtree), continuity_ok=cont.ok,
                       max_position_gap=cont.max_position_gap, max_heading_gap=cont.max_heading_gap)
        return (EXIT_OK if cont.ok else EXIT_CHECK), summary

    if cfg.command == "compile":
        if not isinstance(spec, (IFSSpec, LSystemSpec)):
            raise GentreeError("compile expects an 'ifs' or 'lsystem' spec")
        dtree, gtree = _compile(spec, cfg, declared)
        cert, ok = _certify(gtree, dtree, cfg)
        _write(out, "tree.json", _dump(tree_to_dict(gtree)))
        _write(out, "certificate.json", _dump(cert))
        summary.update(branches=len(gtree), certificate=cert)
        return (EXIT_OK if ok else EXIT_CHECK), summary

    if cfg.command == "analyze":
        gtree = _tree_for(spec, cfg, declared)
        report = recover_parameters(extract_scaffold_tangent(gtree))
        _write(out, "recovery.csv", report.to_csv())
        _write(out, "recovery.json", report.to_json())
        summary.update(generations=len(report.rows))
        return EXIT_OK, summary

    if cfg.command == "verify":
        if not isinstance(spec, (IFSSpec, LSystemSpec)):
            raise GentreeError("verify expects an 'ifs' or 'lsystem' spec")
        dtree, gtree = _compile(spec, cfg, declared)
        cert, iso_ok = _certify(gtree, dtree, cfg)
        _write(out, "certificate.json", _dump(cert))
        checks = {"isomorphism": iso_ok}
        if isinstance(spec, IFSSpec):
            depth = gtree.depth
            root = spec.root
            endpoint_gap = max(hausdorff(endpoint_set(gtree, k), attractor_points(spec.maps, k, root))
                               for k in range(1, depth + 1))
            checks["endpoint_identity"] = endpoint_gap < cfg.tolerance
            summary["endpoint_gap"] = endpoint_gap
            ks = list(range(2, depth + 1))
            if len(ks) >= 2:
                k_ref = cfg.k_ref if cfg.k_ref is not None else max(12, depth + 4)
                canopy = canopy_equivalence_report(gtree, spec.maps, ks, k_ref, root)
                _write(out, "canopy.csv", canopy.to_csv())
                lam = max(m.lam for m in spec.maps)
                ratio = canopy.fitted_ratio
                checks["decay_monotone"] = canopy.monotone()
                checks["decay_ratio"] = math.isfinite(ratio) and abs(ratio - lam) <= cfg.ratio_tolerance * lam
                summary.update(fitted_ratio=ratio, k_ref=k_ref)
        ok = all(checks.values())
        summary.update(checks=checks, passed=ok, max_gap=cert.get("max_gap"))
        _write(out, "verify.json", _dump(summary))
        return (EXIT_OK if ok else EXIT_CHECK), summary

    # render
    gtree = _tree_for(spec, cfg, declared)
    _write(out, "tree.svg", _render(gtree, cfg))
    summary.update(branches=len(gtree))
    return EXIT_OK, summary


def run(config: RunConfig) -> int:
    """Execute one command; prints a JSON summary on stdout, errors as JSON on stderr."""
    try:
        status, summary = _run(config)
    except _IOFailure as e:
        click.echo(json.dumps({"kind": "io", "message": str(e)}), err=True)
        return EXIT_IO
    except GentreeError as e:
        click.echo(json.dumps(e.to_dict()), err=True)
        return EXIT_ERROR
    except ValueError as e:
        click.echo(json.dumps({"kind": "invalid_input", "message": str(e)}), err=True)
        return EXIT_ERROR
    click.echo(json.dumps(summary, sort_keys=True))
    return status


def _common(f):
    opts = [
        click.argument("input", type=click.Path(path_type=Path)),
        click.option("--out", type=click.Path(path_type=Path), default=Path("."), show_default=True,
                     help="Output directory."),
        click.option("--depth", type=click.IntRange(min=0), default=None,
                     help="Tree depth (overrides the spec file)."),
        click.option("--policy", type=click.Choice(["chord", "arc", "matched"]), default="matched",
                     show_default=True, help="Edge curve policy for compiled trees."),
        click.option("--turn", type=float, default=0.5, show_default=True,
                     help="Total turn per edge for --policy arc."),
        click.option("--integrator", type=click.Choice(["auto", "closed", "rk4"]), default="auto",
                     show_default=True),
        click.option("--step", type=click.FloatRange(min=0, min_open=True), default=DEFAULT_STEP,
                     show_default=True),
        click.option("--overlay-scaffold", is_flag=True, help="Draw scaffold chords (dashed)."),
        click.option("--markers", is_flag=True, help="Draw branchpoint markers."),
        click.option("--tolerance", type=float, default=1e-9, show_default=True,
                     help="Positional tolerance for isomorphism and endpoint checks."),
        click.option("--k-ref", type=click.IntRange(min=0), default=None,
                     help="Reference attractor depth for verify."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


@click.group()
@click.version_option(package_name="gentree")
def main():
    """Compile tree fractals into generator trees and verify the correspondence."""


def _command(name: str, help_text: str):
    @main.command(name=name, help=help_text)
    @_common
    def cmd(**kw):
        sys.exit(run(RunConfig(command=name, **kw)))
    return cmd


_command("grow", "Grow a generator tree from a 'generator' spec; writes tree.json and tree.svg.")
_command("compile", "Compile an IFS or L-system spec; writes tree.json and certificate.json.")
_command("analyze", "Recover per-generation parameters; writes recovery.csv and recovery.json.")
_command("verify", "Compile and check isomorphism, endpoint identity and canopy decay.")
_command("render", "Render a tree or spec to tree.svg.")


if __name__ == "__main__":
    main()
