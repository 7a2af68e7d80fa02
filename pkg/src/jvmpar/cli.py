"""Command-line pipeline: analyze / parallelize / verify / bench / report.

Exit codes: 0 ok; 2 malformed classfile; 3 unsupported class version;
4 nothing to parallelize (original passed through); 5 verification failed;
6 measurement backend unavailable.
"""

from __future__ import annotations

import argparse
import json
import random
import statistics
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import metrics
from .autotune import TuneConfig, measure, tune
from .classfile.io import parse_class
from .classfile.model import ClassModel
from .decompile import decompile, ir_dump
from .depcheck import analyze_nest, deps_json
from .errors import (JvmparError, MalformedClassfile, MeasurementFailure,
                     UnsupportedVersion)
from .interp import Interp, check_equivalence
from .inputs import generator_for
from .loops import LoopForest, NormalizedLoop, build_forest, forest_json
from .classfile.opcodes import is_supported
from .parcodegen import ParallelVariant
from .xform import candidates_json, enumerate_candidates

EXIT_MALFORMED = 2
EXIT_VERSION = 3
EXIT_NO_CANDIDATES = 4
EXIT_VERIFY_FAILED = 5
EXIT_NO_BACKEND = 6


@dataclass
class MethodAnalysis:
    name: str
    desc: str
    transformable: bool
    reason: str = ""
    forest: LoopForest | None = None
    nests: list = field(default_factory=list)  # (root, accesses, results, pt, candidates)

    def to_json(self) -> dict:
        out = {"name": self.name, "desc": self.desc,
               "transformable": self.transformable}
        if self.reason:
            out["reason"] = self.reason
        if self.forest is not None:
            out["loops"] = forest_json(self.forest)
        out["nests"] = []
        for root, accesses, results, pt, cands in self.nests:
            out["nests"].append({
                "root_path": list(root.path),
                "deps": deps_json(root, accesses, results, pt),
                "candidates": candidates_json(cands),
            })
        return out


def analyze_model(model: ClassModel, tile_sizes=(32, 64, 128)) -> list[MethodAnalysis]:
    out = []
    for m in model.methods:
        name = model.method_name(m)
        desc = model.method_desc(m)
        if m.code is None:
            out.append(MethodAnalysis(name, desc, False, reason="abstract"))
            continue
        bad = [i.mnemonic for i in m.code.instructions if not is_supported(i.mnemonic)]
        if bad:
            out.append(MethodAnalysis(
                name, desc, False,
                reason=f"unsupported opcodes: {sorted(set(bad))}"))
            continue
        if m.code.exception_table:
            out.append(MethodAnalysis(name, desc, False, reason="exception table"))
            continue
        try:
            forest = build_forest(model, m)
        except JvmparError as exc:
            out.append(MethodAnalysis(name, desc, False,
                                      reason=f"{type(exc).__name__}: {exc}"))
            continue
        ma = MethodAnalysis(name, desc, True, forest=forest)
        for root in forest.roots:
            if not isinstance(root, NormalizedLoop):
                continue
            accesses, results, pt = analyze_nest(root)
            cands = enumerate_candidates(root, pt, results, tile_sizes=tile_sizes,
                                         next_slot=m.code.max_locals)
            ma.nests.append((root, accesses, results, pt, cands))
        out.append(ma)
    return out


def _load_class(path: str) -> ClassModel:
    return parse_class(Path(path).read_bytes())


def _tiles(arg: str) -> tuple:
    return tuple(int(x) for x in arg.split(",") if x)


_COMMON_DEFAULTS = {
    "workers": 4, "chunks": "block", "tiles": "32,64,128", "r": 64,
    "backend": "interp", "schedules": 20, "tol": 0.0, "seed": 42,
    "out": None, "method": None, "size": 16, "int_args": None,
    "task_overhead": 1000,
}


def _apply_config_file(args):
    """key=value lines; explicit flags win (a flag still at its default is
    overridden, which is the documented behavior)."""
    if not getattr(args, "config", None):
        return
    for line in Path(args.config).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key not in _COMMON_DEFAULTS or not hasattr(args, key):
            continue
        if getattr(args, key) != _COMMON_DEFAULTS[key]:
            continue  # explicitly set on the command line
        default = _COMMON_DEFAULTS[key]
        if isinstance(default, bool):
            setattr(args, key, value.lower() in ("1", "true", "yes"))
        elif isinstance(default, int) and not isinstance(default, bool):
            setattr(args, key, int(value))
        elif isinstance(default, float):
            setattr(args, key, float(value))
        else:
            setattr(args, key, value)


# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    model = _load_class(args.classfile)
    analyses = analyze_model(model, tile_sizes=_tiles(args.tiles))
    report = {"class": model.name, "version": [model.major, model.minor],
              "methods": [a.to_json() for a in analyses]}
    payload = report
    if args.dump_loops:
        payload = {a.name: (a.to_json().get("loops", [])) for a in analyses}
    elif args.dump_deps:
        payload = {a.name: [n["deps"] for n in a.to_json()["nests"]] for a in analyses}
    elif args.explain:
        payload = {a.name: [n["candidates"] for n in a.to_json()["nests"]]
                   for a in analyses}
    elif args.dump_ir:
        for a in analyses:
            if a.transformable:
                sys.stdout.write(f";; {a.name}{a.desc}\n")
                sys.stdout.write(ir_dump(model, a.name, a.desc))
        return 0
    elif args.dump_dfg:
        from .dfg import build_dfg, to_dot
        for a in analyses:
            if a.transformable:
                m = model.find_method(a.name, a.desc)
                stmts = decompile(model, m)
                sys.stdout.write(to_dot(build_dfg(stmts), stmts))
        return 0
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _pick_method(model, analyses, wanted: str | None):
    if wanted is not None:
        for a in analyses:
            if a.name == wanted:
                return a
        raise JvmparError(f"method {wanted} not found")
    for a in analyses:
        if a.transformable and any(nest[4] for nest in a.nests):
            return a
    return None


def cmd_parallelize(args) -> int:
    model = _load_class(args.classfile)
    analyses = analyze_model(model, tile_sizes=_tiles(args.tiles))
    ma = _pick_method(model, analyses, args.method)
    outdir = Path(args.out or "jvmpar-out")
    outdir.mkdir(parents=True, exist_ok=True)

    config = TuneConfig(n_workers=args.workers, strategy=args.chunks,
                        tile_sizes=_tiles(args.tiles), r=args.r,
                        backend=args.backend, seed=args.seed,
                        task_overhead=args.task_overhead)
    best = None
    best_report = None
    failed_reports = []
    if ma is not None:
        rng_seed = args.seed
        for root, accesses, results, pt, cands in ma.nests:
            if not cands:
                continue
            gen = generator_for(ma.desc, args.size, args.int_args)
            variant, report = tune(
                model, ma.name, ma.desc, root, pt, results,
                lambda: gen(random.Random(rng_seed)), config)
            if variant is None:
                failed_reports.append(report)
                continue
            cost = report.records[report.selected].cost
            if best is None or cost < best[0]:
                best = (cost, variant)
                best_report = report
    if best is None:
        # pass the original through so downstream tooling has a file, and
        # keep the per-candidate failure reasons inspectable
        (outdir / Path(args.classfile).name).write_bytes(Path(args.classfile).read_bytes())
        if failed_reports:
            (outdir / "tune-report.json").write_text(json.dumps(
                {"failed_nests": [r.to_json() for r in failed_reports]},
                indent=2) + "\n")
        sys.stderr.write("no parallelizable candidate; original copied through\n")
        return EXIT_NO_CANDIDATES
    _, variant = best
    written = variant.write_to(outdir)
    report_json = best_report.to_json()
    if args.rank_check:
        # reduced-scale trials pick the variant; report (not assert) whether
        # the ranking transfers to full scale
        gen = generator_for(ma.desc, args.size, args.int_args)
        full = {}
        for k, t in enumerate(best_report.records):
            if t.variant is not None:
                full[k] = measure(t.variant, gen(random.Random(args.seed)), config)
        ranked_reduced = sorted((t.cost, k) for k, t in enumerate(best_report.records)
                                if t.variant is not None)
        ranked_full = sorted((c, k) for k, c in full.items())
        report_json["full_scale_costs"] = full
        report_json["rank_agreement"] = \
            [k for _, k in ranked_reduced] == [k for _, k in ranked_full]
    (outdir / "tune-report.json").write_text(
        json.dumps(report_json, indent=2) + "\n")
    (outdir / "plan.json").write_text(json.dumps(variant.plan, indent=2) + "\n")
    for w in written:
        print(w)
    print(outdir / "tune-report.json")
    return 0


def load_variant(variant_dir: str, original_name: str, method: str,
                 desc: str) -> ParallelVariant:
    driver = None
    tasks = []
    for f in sorted(Path(variant_dir).glob("*.class")):
        m = parse_class(f.read_bytes())
        if m.name == original_name:
            driver = m
        else:
            tasks.append(m)
    if driver is None:
        raise MalformedClassfile(f"no driver class {original_name} in {variant_dir}")
    return ParallelVariant(driver=driver, tasks=tasks, method=method, desc=desc,
                           plan={})


def cmd_verify(args) -> int:
    original = _load_class(args.classfile)
    method = original.find_method(args.method) if args.method else None
    if method is None:
        for m in original.methods:
            if original.method_name(m) not in ("<init>", "<clinit>") and m.code:
                method = m
                break
    name = original.method_name(method)
    desc = original.method_desc(method)
    variant = load_variant(args.variant_dir, original.name, name, desc)
    gen = generator_for(desc, args.size, args.int_args)
    report = check_equivalence(original, name, variant, gen,
                               n_schedules=args.schedules, rel_tol=args.tol,
                               seed=args.seed)
    payload = {"ok": report.ok, "schedules": report.schedules_run,
               "detail": report.detail, "witness_schedule": report.witness_schedule}
    if args.trace:
        import random as _random
        trace: list = []
        interp = Interp(variant.classes(), trace=trace, trace_limit=args.trace)
        try:
            interp.exec_method(variant.driver_name, name,
                               gen(_random.Random(args.seed)))
        except JvmparError as exc:
            trace.append(f"<trapped: {exc}>")
        payload["trace"] = trace
    print(json.dumps(payload, indent=2))
    return 0 if report.ok else EXIT_VERIFY_FAILED


def cmd_bench(args) -> int:
    if args.backend == "jvm":
        import shutil
        if shutil.which("java") is None:
            sys.stderr.write("jvm backend requested but no java on PATH\n")
            return EXIT_NO_BACKEND
    model = _load_class(args.classfile)
    analyses = analyze_model(model, tile_sizes=_tiles(args.tiles))
    ma = _pick_method(model, analyses, args.method)
    if ma is None or not any(nest[4] for nest in ma.nests):
        sys.stderr.write("no parallelizable method\n")
        return EXIT_NO_CANDIDATES
    sizes = [int(x) for x in args.sizes.split(",")]
    plist = [int(x) for x in args.plist.split(",")]
    records = []
    label = f"{model.name}.{ma.name}"
    for size in sizes:
        for p in plist:
            samples = []
            for rep in range(args.repeats):
                gen = generator_for(ma.desc, size, args.int_args)
                margs = gen(random.Random(args.seed + rep))
                if p == 1:
                    interp = Interp({model.name: model})
                    _, _, steps = interp.exec_method(model, ma.name, margs, ma.desc)
                    samples.append(float(steps))
                else:
                    config = TuneConfig(n_workers=p, strategy=args.chunks,
                                        tile_sizes=_tiles(args.tiles), r=args.r,
                                        backend=args.backend, seed=args.seed,
                                        task_overhead=args.task_overhead)
                    root, accesses, results, pt, cands = next(
                        (n for n in ma.nests if n[4]), ma.nests[0])
                    variant, _ = tune(model, ma.name, ma.desc, root, pt, results,
                                      lambda: gen(random.Random(args.seed + rep)),
                                      config)
                    if variant is None:
                        sys.stderr.write("no candidate for bench\n")
                        return EXIT_NO_CANDIDATES
                    samples.append(measure(variant, margs, config))
            agg = statistics.mean(samples) if args.agg == "mean" else \
                statistics.median(samples)
            records.append(metrics.RunRecord(label, size, p, agg))
    text = metrics.emit_report(records, "csv" if args.csv else "json")
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    text = Path(args.input).read_text()
    records = metrics.parse_report_json(text)
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    csv_text = metrics.emit_report(records, "csv")
    csv_path = outdir / "bench.csv"
    csv_path.write_text(csv_text)
    rows = json.loads(metrics.emit_report(records, "json"))["rows"]
    from .figures import render_figures
    written = render_figures(rows, outdir)
    print(csv_path)
    for w in written:
        print(w)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jvmpar",
                                 description="automatic JVM bytecode parallelization")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--workers", type=int, default=4)
        p.add_argument("--chunks", choices=("block", "cyclic"), default="block")
        p.add_argument("--tiles", default="32,64,128")
        p.add_argument("--r", type=int, default=64)
        p.add_argument("--backend", choices=("interp", "jvm"), default="interp")
        p.add_argument("--schedules", type=int, default=20)
        p.add_argument("--tol", type=float, default=0.0)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", default=None)
        p.add_argument("--method", default=None)
        p.add_argument("--size", type=int, default=16)
        p.add_argument("--int-args", dest="int_args", type=lambda s: [int(x) for x in s.split(",")],
                       default=None, help="override int params, comma separated")
        p.add_argument("--task-overhead", dest="task_overhead", type=int, default=1000)
        p.add_argument("--config", default=None, help="key=value config file")

    p = sub.add_parser("analyze", help="loops, dependences, candidates as JSON")
    p.add_argument("classfile")
    common(p)
    p.add_argument("--dump-loops", action="store_true")
    p.add_argument("--dump-deps", action="store_true")
    p.add_argument("--explain", action="store_true", help="candidate list only")
    p.add_argument("--dump-ir", action="store_true", help="textual IR listing")
    p.add_argument("--dump-dfg", action="store_true", help="DOT dependency graph")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("parallelize", help="emit driver + task classfiles")
    p.add_argument("classfile")
    common(p)
    p.add_argument("--rank-check", dest="rank_check", action="store_true",
                   help="also record full-scale costs and rank agreement")
    p.set_defaults(fn=cmd_parallelize)

    p = sub.add_parser("verify", help="serial vs parallel differential check")
    p.add_argument("classfile")
    p.add_argument("variant_dir")
    common(p)
    p.add_argument("--trace", type=int, default=0, metavar="N",
                   help="include the first N executed instructions in the report")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="size/worker sweep to metrics CSV/JSON")
    p.add_argument("classfile")
    common(p)
    p.add_argument("--sizes", default="16,32")
    p.add_argument("--plist", default="1,2,4")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--agg", choices=("mean", "median"), default="mean")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("report", help="metrics JSON to CSV + figures")
    p.add_argument("input")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    _apply_config_file(args)
    try:
        return args.fn(args)
    except MalformedClassfile as exc:
        sys.stderr.write(f"malformed classfile: {exc}\n")
        return EXIT_MALFORMED
    except UnsupportedVersion as exc:
        sys.stderr.write(f"unsupported class version: {exc}\n")
        return EXIT_VERSION
    except FileNotFoundError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_MALFORMED
    except MeasurementFailure as exc:
        sys.stderr.write(f"backend unavailable: {exc}\n")
        return EXIT_NO_BACKEND
    except JvmparError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
