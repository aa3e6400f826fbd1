"""Command line entry point: ``hoacs <command>``."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import click
from pydantic import ValidationError

from hoacs.aes_guard import REFERENCE_KEYS, key_expansion, parse_hex
from hoacs.attack_calc import AttackParams, attack_report
from hoacs.bench import PUBLISHED_RATIOS, bench_run
from hoacs.config import SEED_ENV, BenchConfig, load_bench_config, make_rng, resolve_seed
from hoacs.errors import HoacsError
from hoacs.hoacs_ir import parse_ir, print_ir, transform
from hoacs.rnc_core import decode, encode, from_residues, make_moduli_set, parse_moduli
from hoacs.rnc_ops import add_enc, div_int, less_than, mul_enc, sub_enc, xor_enc
from hoacs.trace_audit import TraceMode, audit, find_keys, run_traced

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)

seed_option = click.option("--seed", type=int, default=None, help=f"random seed (default: ${SEED_ENV})")
moduli_option = click.option("--moduli", default="17,19", show_default=True, help="comma-separated moduli")
json_option = click.option("--json", "as_json", is_flag=True, help="machine-readable output")
mode_option = click.option(
    "--mode",
    type=click.Choice([m.value for m in TraceMode]),
    default=TraceMode.PROTECTED_GRID.value,
    show_default=True,
)


class HoacsGroup(click.Group):
    """Turns library errors into exit status 1 with a one-line message."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except HoacsError as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc
        except ValidationError as exc:
            raise click.ClickException(str(exc)) from exc


def _echo_json(data: object) -> None:
    click.echo(json.dumps(data, indent=2))


@click.group(cls=HoacsGroup)
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug logging")
def cli(verbose: int) -> None:
    logging.basicConfig(level=LOG_LEVELS[min(verbose, 2)], format=LOG_FORMAT)


@cli.command("encode")
@click.option("--value", type=int, required=True)
@moduli_option
@click.option("--shift/--no-shift", default=True, help="apply a random multiple shift")
@seed_option
@json_option
def encode_cmd(value: int, moduli: str, shift: bool, seed: int | None, as_json: bool) -> None:
    """Encode a plain integer."""
    mset = parse_moduli(moduli)
    x = encode(value, mset, make_rng(seed) if shift else None)
    if as_json:
        _echo_json({"value": value, "moduli": list(mset.moduli), "components": list(x.components)})
    else:
        click.echo(str(x))


@cli.command("decode")
@click.option("--components", required=True, help="comma-separated components")
@moduli_option
@json_option
def decode_cmd(components: str, moduli: str, as_json: bool) -> None:
    """Decode residue components back to an integer."""
    mset = parse_moduli(moduli)
    try:
        residues = [int(c) for c in components.split(",")]
    except ValueError as exc:
        raise click.BadParameter(f"cannot parse {components!r}", param_hint="--components") from exc
    value = decode(from_residues(residues, mset), mset)
    if as_json:
        _echo_json({"components": residues, "moduli": list(mset.moduli), "value": value})
    else:
        click.echo(value)


@cli.command("ops-demo")
@click.option("-a", type=int, default=29, show_default=True)
@click.option("-b", type=int, default=27, show_default=True)
@moduli_option
@click.option("--shift/--no-shift", default=False)
@seed_option
@json_option
def ops_demo(a: int, b: int, moduli: str, shift: bool, seed: int | None, as_json: bool) -> None:
    """Run a handful of encoded operations on two values and decode the results."""
    mset = parse_moduli(moduli)
    rng = make_rng(seed) if shift else None
    x, y = encode(a, mset, rng), encode(b, mset, rng)
    results = {
        "a": str(x),
        "b": str(y),
        "add": decode(add_enc(x, y, mset, rng), mset),
        "sub": decode(sub_enc(x, y, mset, rng), mset),
        "mul": decode(mul_enc(x, y, mset, rng), mset),
        "less_than": less_than(x, y, mset),
    }
    if b:
        q, r = div_int(x, y, mset, rng)
        results["div"] = decode(q, mset)
        results["mod"] = decode(r, mset)
    width = mset.dynamic_range.bit_length() - 1
    if a < 1 << width and b < 1 << width:
        results["xor"] = decode(xor_enc(x, y, width, mset, rng), mset)
    if as_json:
        _echo_json(results)
    else:
        for name, value in results.items():
            click.echo(f"{name:>9}: {value}")


@cli.command("aes")
@click.option("--key", required=True, help="16-byte key as hex")
@click.option("--block", required=True, help="16-byte block as hex")
@mode_option
@click.option("--moduli", default="17,19", show_default=True)
@click.option("--shift/--no-shift", default=True)
@seed_option
@click.option("--audit", "audit_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="write trace.csv and report.json here")
@json_option
def aes_cmd(key: str, block: str, mode: str, moduli: str, shift: bool, seed: int | None,
            audit_dir: Path | None, as_json: bool) -> None:
    """Encrypt one block, optionally writing its trace and leak report."""
    key_bytes, block_bytes = parse_hex(key), parse_hex(block)
    rng = make_rng(seed) if shift else None
    ciphertext, log = run_traced(mode, key_bytes, block_bytes, parse_moduli(moduli), rng)
    report = find_keys(log, key_bytes, key_expansion(key_bytes), mode=mode)
    if audit_dir is not None:
        try:
            audit_dir.mkdir(parents=True, exist_ok=True)
            log.write_csv(audit_dir / "trace.csv")
            (audit_dir / "report.json").write_text(report.to_json())
        except OSError as exc:
            raise click.ClickException(f"cannot write audit files: {exc}") from exc
    if as_json:
        _echo_json({"ciphertext": ciphertext.hex(), "events": len(log), "report": report.model_dump()})
    else:
        click.echo(ciphertext.hex())
        if audit_dir is not None:
            click.echo(report.summary())


@cli.command("audit")
@mode_option
@click.option("--key", "keys", multiple=True, help="key as hex; defaults to the three reference keys")
@click.option("--block", default="00" * 16, show_default=True)
@click.option("--moduli", default="17,19", show_default=True)
@click.option("--shift/--no-shift", default=True)
@seed_option
@json_option
def audit_cmd(mode: str, keys: tuple[str, ...], block: str, moduli: str, shift: bool,
              seed: int | None, as_json: bool) -> None:
    """Trace several keys and report which key material reaches the registers."""
    key_list = [parse_hex(k) for k in (keys or REFERENCE_KEYS.values())]
    rng = make_rng(seed) if shift else None
    reports = audit(mode, key_list, parse_hex(block), parse_moduli(moduli), rng)
    if as_json:
        _echo_json([r.model_dump() for r in reports])
    else:
        for report in reports:
            click.echo(report.summary())


@cli.command("transform")
@click.option("--in", "src", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", "dst", type=click.Path(dir_okay=False, path_type=Path), default=None)
@seed_option
@click.option("--m1", type=int, default=None)
@click.option("--m2", type=int, default=None)
def transform_cmd(src: Path, dst: Path | None, seed: int | None, m1: int | None, m2: int | None) -> None:
    """Apply the protection pass to an IR file."""
    if (m1 is None) != (m2 is None):
        raise click.UsageError("--m1 and --m2 go together")
    moduli = make_moduli_set([m1, m2]) if m1 is not None else None
    module = transform(parse_ir(src.read_text()), moduli, seed=resolve_seed(seed) or 0)
    text = print_ir(module)
    if dst is None:
        click.echo(text, nl=False)
    else:
        dst.write_text(text)


@cli.command("attack-calc")
@click.option("--b", "b", type=int, default=32, show_default=True)
@click.option("--t-exec", type=float, default=66, show_default=True)
@click.option("--s-cpu", type=float, default=4e9, show_default=True)
@click.option("--n-dr", type=int, default=8, show_default=True)
@click.option("--gamma", type=int, default=5, show_default=True)
@click.option("--m", "m", type=int, default=65537, show_default=True)
@click.option("--k", "k", type=int, default=2, show_default=True)
def attack_calc_cmd(**params: float) -> None:
    """Print trojan testing times and the brute-force cost as JSON."""
    report = attack_report(AttackParams(**params))
    click.echo(report.model_dump_json(indent=2))


@cli.command("bench")
@click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--ops", default=None, help="comma-separated ops")
@click.option("--counts", default=None, help="comma-separated instruction counts")
@click.option("--repetitions", type=int, default=None)
@click.option("--variants", default=None)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None)
@seed_option
@json_option
def bench_cmd(config_path: Path | None, ops: str | None, counts: str | None, repetitions: int | None,
              variants: str | None, out: Path | None, seed: int | None, as_json: bool) -> None:
    """Measure encoded-operation overhead against plain operations."""

    def split(text: str | None) -> list[str] | None:
        return None if text is None else [t.strip() for t in text.split(",") if t.strip()]

    overrides = {
        "ops": split(ops),
        "counts": split(counts),
        "repetitions": repetitions,
        "variants": split(variants),
        "output": out,
        "seed": seed,
    }
    if config_path is not None:
        cfg = load_bench_config(config_path, **overrides)
    else:
        cfg = BenchConfig.model_validate({k: v for k, v in overrides.items() if v is not None})
    report = bench_run(cfg)
    if as_json:
        click.echo(report.to_json())
        return
    click.echo(report.to_csv(), nl=False)
    for op, by_variant in report.summary().items():
        for variant, ratio in by_variant.items():
            shown = "n/a" if ratio is None else f"{ratio:.2f}"
            published = PUBLISHED_RATIOS.get(op, {}).get(variant)
            click.echo(f"# {op} {variant}: mean ratio {shown} (published {published})")


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the web dashboard."""
    import uvicorn

    uvicorn.run("hoacs.web:app", host=host, port=port)


def main() -> None:
    cli(prog_name="hoacs")


