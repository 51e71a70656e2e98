"""Command line: ``sivor train | run | verify | bench``.

Every report carries the hash of the run configuration and a version
string so results can be matched to the code and settings that made them.
Set SIVOR_THREADS to spread ``run`` instances over worker processes.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import random
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click

from . import __version__
from .errors import SivorError, UnknownSuite
from .gauge import NAMED_GAUGES, load_gauge, named_gauge
from .io import load_model, save_model
from .mixture import PRESETS, MixtureModel, preset_mixtures, sample_instance

VERIFY_LEVELS = ("off", "sampled", "full")
AGG_FIELDS = ["instances", "verified", "verify_failures", "mean_depth", "mean_li_answers",
              "mean_ls_fallbacks", "mean_R", "mean_z_square", "mean_z_square_per_n",
              "mean_total_s"] + [f"mean_step{i}_s" for i in range(1, 8)]


@dataclass
class RunConfig:
    """Everything a command was asked to do; hashed into its reports."""
    command: str
    gauge: str = "square"
    mixture: str = None
    model: str = None
    n: int = None
    m: int = None
    epsilon: float = 0.5
    tau: int = 11
    seed: int = 0
    instances: int = 0
    out: str = "."
    svg: bool = False
    verify_level: str = "off"
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.verify_level not in VERIFY_LEVELS:
            raise click.BadParameter(f"verify level must be one of {VERIFY_LEVELS}")
        if self.instances < 0:
            raise click.BadParameter("instances must be nonnegative")
        if self.n is not None and self.n < 1:
            raise click.BadParameter("n must be positive")
        if self.m is not None and self.m < 1:
            raise click.BadParameter("m must be positive")
        if not 0 < self.epsilon < 1:
            raise click.BadParameter("epsilon must lie strictly between 0 and 1")
        return self

    def digest(self):
        blob = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def version_string():
    """Package version plus ``git describe`` output when run from a checkout."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def report_header(cfg: RunConfig):
    return {"config": asdict(cfg), "config_hash": cfg.digest(), "version": version_string()}


def threads():
    raw = os.environ.get("SIVOR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise click.BadParameter(f"SIVOR_THREADS must be an integer, got {raw!r}")


def resolve_gauge(spec):
    if spec in NAMED_GAUGES:
        return named_gauge(spec)
    if os.path.exists(spec):
        return load_gauge(spec)
    raise click.BadParameter(f"gauge {spec!r} is neither a named gauge "
                             f"({', '.join(NAMED_GAUGES)}) nor a file")


def resolve_mixture(spec, n, m, seed):
    if spec in PRESETS:
        if n is None or m is None:
            raise click.BadParameter("a preset mixture needs --n and --m")
        return preset_mixtures(spec, n, m, seed=seed)
    if spec and os.path.exists(spec):
        return MixtureModel.load(spec)
    raise click.BadParameter(f"mixture {spec!r} is neither a preset "
                             f"({', '.join(PRESETS)}) nor a file")


def _write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


@click.group()
@click.version_option(__version__, prog_name="sivor")
def main():
    """Self-improving Voronoi diagrams under convex polygon gauges."""


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

@main.command()
@click.option("--gauge", default="square", show_default=True,
              help="Named gauge or a JSON file of CCW [x, y] vertices.")
@click.option("--mixture", required=True, help="Preset name or a mixture JSON file.")
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False),
              help="Where to write the trained model.")
@click.option("--n", type=int, help="Points per instance (defaults to the mixture's).")
@click.option("--m", type=int, help="Mixture size bound (defaults to the mixture's).")
@click.option("--epsilon", type=float, default=0.5, show_default=True)
@click.option("--tau", type=int, default=11, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--allow-large-m", is_flag=True, help="Accept m*m > n.")
@click.option("--svg", is_flag=True, help="Also draw the trained diagram.")
def train(gauge, mixture, model_path, n, m, epsilon, tau, seed, allow_large_m, svg):
    """Train a model and write it with a training report next to it."""
    from .trainer import train as run_training
    from .voronoi import to_svg

    cfg = RunConfig("train", gauge, mixture, model_path, n, m, epsilon, tau, seed,
                    svg=svg, extra={"allow_large_m": allow_large_m}).validate()
    g = resolve_gauge(gauge)
    mx = resolve_mixture(mixture, n, m, seed)
    n = n if n is not None else mx.n
    m = m if m is not None else mx.m
    t0 = time.perf_counter()
    try:
        model = run_training(mx, n, m, epsilon, g, tau=tau, seed=seed,
                             allow_large_m=allow_large_m)
    except SivorError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")
    size = save_model(model, model_path)
    report = report_header(cfg)
    report.update({"model_bytes": size, "train_seconds": time.perf_counter() - t0,
                   "sizes": model.summary(), "division": model.division.size_report(),
                   "times": model.meta.get("times", {})})
    report["sizes"].pop("mixture_spec", None)
    report["sizes"].pop("times", None)
    _write_json(str(model_path) + ".report.json", report)
    if svg:
        to_svg(model.vorS, str(model_path) + ".svg")
    s = report["sizes"]
    click.echo(f"trained |S|={s['S']} |B|={s['B']} regions={s['regions']} "
               f"attempts={s['attempts']} -> {model_path} ({size} bytes)")


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

_WORKER_MODEL = None


def _worker_init(path):
    global _WORKER_MODEL
    _WORKER_MODEL = load_model(path)


def _one_instance(args):
    j, inst, seed, check, svg_path = args
    from .operator import run
    from .voronoi import brute_force_voronoi, combinatorial_equal, to_svg
    model = _WORKER_MODEL
    dI, st = run(model, inst, random.Random(seed * 1_000_003 + j), verify=check)
    row = {"instance": j, **st.to_json()}
    if check:
        ref = brute_force_voronoi(model.gauge, inst, model.frame)
        row["oracle_equal"] = combinatorial_equal(dI, ref)
    if svg_path:
        to_svg(dI, svg_path)
    return row


def _checked(level, j, count):
    if level == "full":
        return True
    if level == "sampled":
        return j % max(1, count // 10) == 0
    return False


def aggregate(rows, n):
    def mean(vals):
        vals = list(vals)
        return sum(vals) / len(vals) if vals else 0.0
    checked = [r for r in rows if "oracle_equal" in r]
    out = {"instances": len(rows), "verified": len(checked),
           "verify_failures": sum(1 for r in checked if not r["oracle_equal"]),
           "mean_depth": mean(r["mean_depth"] for r in rows),
           "mean_li_answers": mean(r["li_answers"] for r in rows),
           "mean_ls_fallbacks": mean(r["ls_fallbacks"] for r in rows),
           "mean_R": mean(r["R_size"] for r in rows),
           "mean_z_square": mean(r["z_square"] for r in rows),
           "mean_z_square_per_n": mean(r["z_square"] / n for r in rows) if n else 0.0,
           "mean_total_s": mean(sum(r["times"].values()) for r in rows)}
    for i in range(1, 8):
        out[f"mean_step{i}_s"] = mean(r["times"][f"step{i}"] for r in rows)
    return out


@main.command("run")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mixture", help="Mixture to draw from (defaults to the one the model was trained on).")
@click.option("--instances", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", default="sivor-run", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--svg", is_flag=True, help="Draw each output diagram.")
@click.option("--verify-level", type=click.Choice(VERIFY_LEVELS), default="off", show_default=True,
              help="Check outputs against brute force: never, every tenth instance, or all.")
def run_cmd(model_path, mixture, instances, seed, out_dir, svg, verify_level):
    """Run the operation phase on fresh instances; writes JSONL and CSV reports."""
    cfg = RunConfig("run", mixture=mixture, model=model_path, seed=seed, instances=instances,
                    out=out_dir, svg=svg, verify_level=verify_level).validate()
    model = load_model(model_path)
    if mixture:
        mx = resolve_mixture(mixture, model.n, model.m, seed)
    else:
        mx = MixtureModel.from_json(model.meta["mixture_spec"])
    if mx.n != model.n:
        raise click.ClickException(f"mixture draws {mx.n} points, model expects {model.n}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if svg:
        (out / "svg").mkdir(exist_ok=True)
    # instances are drawn up front so results do not depend on the worker count
    rng = random.Random(seed)
    jobs = [(j, sample_instance(mx, rng), seed, _checked(verify_level, j, instances),
             str(out / "svg" / f"instance_{j:05d}.svg") if svg else None)
            for j in range(instances)]
    workers = threads()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers, initializer=_worker_init,
                                 initargs=(model_path,)) as pool:
            rows = list(pool.map(_one_instance, jobs))
    else:
        global _WORKER_MODEL
        _WORKER_MODEL = model
        rows = [_one_instance(job) for job in jobs]
    header = report_header(cfg)
    header["workers"] = workers
    with open(out / "instances.jsonl", "w") as fh:
        fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    agg = aggregate(rows, model.n)
    with open(out / "aggregate.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config_hash", "version"] + AGG_FIELDS)
        if rows:
            w.writerow([header["config_hash"], header["version"]] + [agg[k] for k in AGG_FIELDS])
    click.echo(f"{len(rows)} instances, mean depth {agg['mean_depth']:.2f}, "
               f"verified {agg['verified']} with {agg['verify_failures']} failures -> {out}")
    if agg["verify_failures"]:
        sys.exit(1)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

@main.command()
@click.argument("suite")
@click.option("--verify-level", type=click.Choice(VERIFY_LEVELS), default="sampled",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--inject-fault", type=click.Choice(["skip-perturbation"]), default=None,
              help="Break the build on purpose to check the suite notices.")
@click.option("--json", "as_json", is_flag=True, help="Print the result as JSON.")
def verify(suite, verify_level, seed, inject_fault, as_json):
    """Run one property suite; exits nonzero on any failure.

    Suites: geometry, voronoi, nettree, wspd, knn, pipeline, certifier, or all.
    """
    from .suites import SUITES, run_suite
    names = list(SUITES) if suite == "all" else [suite]
    failed = False
    for name in names:
        try:
            res = run_suite(name, verify_level, seed, inject_fault)
        except UnknownSuite as exc:
            raise click.ClickException(str(exc))
        failed |= not res.passed
        if as_json:
            click.echo(json.dumps(res.to_json(), sort_keys=True))
        else:
            status = "PASS" if res.passed else "FAIL"
            click.echo(f"{status} {name}: {res.cases} cases, {len(res.failures)} failures, "
                       f"{res.seconds:.1f}s")
            for f in res.failures[:5]:
                click.echo(f"    {f}")
    sys.exit(1 if failed else 0)


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

@main.command()
@click.option("--size", type=click.Choice(["small", "large"]), default="small", show_default=True)
@click.option("--repeat", type=int, default=3, show_default=True)
@click.option("--out", "out_path", default="bench.csv", show_default=True,
              type=click.Path(dir_okay=False))
def bench(size, repeat, out_path):
    """Compare the compiled kernels with the pure-Python ones."""
    from .bench import compare
    cfg = RunConfig("bench", extra={"size": size, "repeat": repeat})
    rows = compare(size, repeat)
    header = report_header(cfg)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config_hash", "version", "workload", "pure_s", "compiled_s", "speedup",
                    "compiled_available"])
        for r in rows:
            w.writerow([header["config_hash"], header["version"], r["workload"],
                        f"{r['pure_s']:.6f}", f"{r['compiled_s']:.6f}", f"{r['speedup']:.3f}",
                        r["compiled_available"]])
    for r in rows:
        click.echo(f"{r['workload']:>14}: pure {r['pure_s']:.4f}s  compiled "
                   f"{r['compiled_s']:.4f}s  x{r['speedup']:.2f}")
    if not rows[0]["compiled_available"]:
        click.echo("compiled kernels are not built; both columns ran pure Python")


if __name__ == "__main__":
    main()
