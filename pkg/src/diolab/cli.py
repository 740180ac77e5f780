"""Command-line front end.

Subcommands: bestapprox, levy, doeblin-lenstra, cheung, cross-section,
determinants, residues, gaps, count, selfcheck.  A flat key=value config
file can seed any flag; explicit flags win.  Every output file embeds the
resolved configuration, the package version and the seed, so any run can be
reproduced from its own header.

Exit codes: 0 ok, 1 parse error, 2 precision exhausted, 3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import multiprocessing
import os
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from . import bestapprox as ba
from . import dynamics, sampling
from . import stats as st
from .geometry import ApproxSpace, parse_space
from .numerics import PrecisionExhausted

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_PRECISION = 2
EXIT_MISMATCH = 3


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for every parse failure
        raise _CliError(message)


# ---------------------------------------------------------------------------
# config and common construction


def _load_config(path: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise _CliError(f"bad config line: {line!r}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _resolved_config(args) -> Dict[str, object]:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items())
            if k not in skip and v is not None}


def _header(args, seed=None) -> Dict[str, object]:
    return {"config": _resolved_config(args), "version": __version__,
            "seed": seed if seed is not None else getattr(args, "seed", None),
            "rng": sampling.RNG_ALGORITHM}


def _space_from(args) -> ApproxSpace:
    desc = getattr(args, "decomp", None) or "1|1"
    if getattr(args, "norms", None):
        dims = desc.replace("m:", "").replace("n:", "")
        left, right = dims.split("|")
        nl, nr = args.norms.split("|")
        mtok = [d.strip() + n.strip() for d, n in zip(left.split(","), nl.split(","))]
        ntok = [d.strip() + n.strip() for d, n in zip(right.split(","), nr.split(","))]
        desc = ",".join(mtok) + "|" + ",".join(ntok)
    return parse_space(desc)


def _parse_rational_matrix(text: str) -> List[List[Fraction]]:
    rows = []
    for row in text.split(";"):
        rows.append([Fraction(tok.strip()) for tok in row.split(",") if tok.strip()])
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise _CliError("theta rows must have equal length")
    return rows


def _theta_from(args, space: ApproxSpace, draw: int = 0) -> ba.Theta:
    if getattr(args, "theta", None):
        return ba.Theta.explicit(_parse_rational_matrix(args.theta))
    if getattr(args, "theta_file", None):
        with open(args.theta_file, "r", encoding="utf-8") as fh:
            text = ";".join(line.strip().replace(" ", ",")
                            for line in fh if line.strip())
        return ba.Theta.explicit(_parse_rational_matrix(text))
    source = _source_from(args, space)
    return sampling.sample(source, draw)


def _source_from(args, space: ApproxSpace) -> sampling.ThetaSource:
    from .numerics import digits_for_convergents

    measure = (getattr(args, "measure", None) or "lebesgue").lower()
    digits = getattr(args, "digits", None)
    seed = getattr(args, "seed", 0) or 0
    length = getattr(args, "length", None) or 1000
    dec = space.decomp
    if measure == "lebesgue":
        return sampling.lebesgue_source(
            dec.m, dec.n, digits or max(120, digits_for_convergents(length)), seed)
    if measure == "cantor":
        if dec.m != 1 or dec.n != 1:
            raise _CliError("the Cantor measure samples 1x1 matrices")
        # ternary digits cost log3(10) of a decimal digit
        return sampling.cantor_source(
            digits or max(250, math.ceil(2.1 * digits_for_convergents(length))),
            seed)
    if measure.startswith("curve"):
        deg = int(measure.split(":", 1)[1]) if ":" in measure else dec.n
        return sampling.curve_source(deg, digits or 120, seed)
    if measure.startswith("quadratic"):
        if ":" not in measure:
            raise _CliError("quadratic measure syntax: quadratic:a,b,c")
        a, b, c = (int(x) for x in measure.split(":", 1)[1].split(","))
        return sampling.quadratic_source(a, b, c)
    raise _CliError(f"unknown measure {measure!r}")


# ---------------------------------------------------------------------------
# output helpers


def _write_jsonl(path: str, header: Dict, rows: Sequence[Dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"header": header}) + "\n")
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def _write_csv(path: str, header: Dict, fieldnames: Sequence[str],
               rows: Sequence[Sequence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps({"header": header}) + "\n")
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def _emit(args, header, fieldnames, rows, stem: str) -> Optional[str]:
    if not getattr(args, "out", None):
        return None
    fmt = getattr(args, "format", None) or "csv"
    path = args.out
    if fmt == "jsonl":
        _write_jsonl(path, header, [dict(zip(fieldnames, r)) for r in rows])
    else:
        _write_csv(path, header, fieldnames, rows)
    return path


def _fig_path(args, suffix: str) -> Optional[str]:
    if not getattr(args, "out", None) or getattr(args, "no_plot", False):
        return None
    stem, _ = os.path.splitext(args.out)
    return stem + suffix + ".png"


def read_records(path: str) -> Tuple[Dict, List[ba.BestApprox]]:
    """Re-ingest a JSON-lines record stream written by ``bestapprox``."""
    header: Dict = {}
    records: List[ba.BestApprox] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            if "header" in obj:
                header = obj["header"]
            else:
                records.append(ba.record_from_dict(obj))
    return header, records


# ---------------------------------------------------------------------------
# engine selection / enrichment


def _run_engine(theta: ba.Theta, space: ApproxSpace, cfg: ba.EngineConfig):
    if space.decomp.n == 1:
        return ba.scan_best_n1(theta, space, cfg)
    return ba.enumerate_best_general(theta, space, cfg)


def _enrich(records, theta, space, moduli, with_dynamics: bool) -> None:
    for rec in records:
        if moduli and rec.residues is None:
            rec.residues = {int(N): tuple(x % N for x in rec.p) +
                            tuple(x % N for x in rec.q) for N in moduli}
        if with_dynamics and not rec.degenerate:
            try:
                rec.t = dynamics.hit_time(rec, space, strict=False)
                rec.proj = ba.proj_of(theta, rec.p, rec.q, space)
            except (dynamics.DegenerateRecord, ba.DegenerateBlock):
                rec.t = None


# ---------------------------------------------------------------------------
# subcommands


def cmd_bestapprox(args) -> int:
    space = _space_from(args)
    theta = _theta_from(args, space)
    moduli = tuple(int(N) for N in (args.mod or []))
    cfg = ba.EngineConfig(definition=args.definition, q_bound=args.qmax,
                          mode=args.mode, moduli=moduli)
    records = _run_engine(theta, space, cfg)
    _enrich(records, theta, space, moduli, with_dynamics=True)

    if args.selfcheck:
        box = max([1] + [abs(c) for r in records for c in r.p + r.q])
        while (2 * box + 1) ** space.decomp.d > 20000 and box > 1:
            box -= max(1, box // 4)
        oracle = ba.oracle_best(theta, space, box, cfg)
        eng = [(r.p, r.q) for r in records
               if all(abs(c) <= box for c in r.p + r.q)]
        orc = [(r.p, r.q) for r in oracle]
        if eng != orc:
            print(f"selfcheck FAILED inside box {box}: engine {eng} oracle {orc}")
            return EXIT_MISMATCH
        print(f"selfcheck ok inside box {box} ({len(orc)} records)")

    rows = [ba.record_to_dict(r) for r in records]
    if args.out:
        _write_jsonl(args.out, _header(args), rows)
        fig = _fig_path(args, "_growth")
        if fig and records:
            from . import report
            series = [[(r.index + 1, r.log_q_norm) for r in records]]
            report.levy_figure(fig, series, title="log ||q_l|| by index")
    else:
        for row in rows:
            print(json.dumps(row))
    print(f"{len(records)} best approximations"
          + (f" -> {args.out}" if args.out else ""))
    return EXIT_OK


def _levy_worker(payload):
    (source, draw, length, power) = payload
    theta = sampling.sample(source, draw)
    space = ApproxSpace.create([1], [1])
    records, _ = ba.best_records_from_cf(theta, space, length)
    lv = st.levy_series(records, power=power)
    step = max(1, len(lv.series) // 200)
    return (draw, lv.tail_mean, lv.series[-1][1], lv.series[::step])


def _pool_map(fn, payloads, workers: int):
    if workers <= 1:
        return [fn(p) for p in payloads]
    with multiprocessing.Pool(workers) as pool:
        return pool.map(fn, payloads)


def cmd_levy(args) -> int:
    space = ApproxSpace.create([1], [1])
    source = _source_from(args, space)
    payloads = [(source, i, args.length, 1) for i in range(args.samples)]
    results = _pool_map(_levy_worker, payloads, args.workers)
    tails = [t for _, t, _, _ in results]
    mean = sum(tails) / len(tails)
    stderr = (sum((t - mean) ** 2 for t in tails) / max(1, len(tails) - 1)) ** 0.5 \
        / len(tails) ** 0.5
    ref = st.LEVY_CONSTANT
    rel = abs(mean - ref) / ref
    ok = rel <= args.tol if args.tol else None
    print(f"levy estimate {mean:.6f} +- {stderr:.6f} "
          f"(reference {ref:.6f}, rel dev {rel * 100:.3f}%)"
          + ("" if ok is None else f" -> {'PASS' if ok else 'FAIL'}"))
    rows = [("levy_tail", draw, tail, stderr) for draw, tail, _, _ in results]
    rows.append(("levy_mean", len(tails), mean, stderr))
    _emit(args, _header(args), ("estimator", "index", "value", "stderr"), rows, "levy")
    fig = _fig_path(args, "_series")
    if fig:
        from . import report
        report.levy_figure(fig, [series for _, _, _, series in results],
                           reference=ref, title="(1/l) log q_l")
    if ok is False:
        return EXIT_MISMATCH
    return EXIT_OK


def _dl_worker(payload):
    (source, draw, length, shift) = payload
    theta = sampling.sample(source, draw)
    space = ApproxSpace.create([1], [1])
    records, _ = ba.best_records_from_cf(theta, space, length)
    return st.dl_samples(records, shift, space)


def cmd_doeblin_lenstra(args) -> int:
    space = ApproxSpace.create([1], [1])
    source = _source_from(args, space)
    payloads = [(source, i, args.length, args.shift) for i in range(args.samples)]
    pools = _pool_map(_dl_worker, payloads, args.workers)
    samples = [v for chunk in pools for v in chunk]
    emp = st.EmpiricalDistribution.from_samples(samples)
    ks = st.ks_distance(emp, st.dl_reference_cdf)
    spot = emp.cdf(0.5)
    ref_spot = st.dl_reference_cdf(0.5)
    print(f"doeblin-lenstra: n={len(emp)} KS={ks:.4f} "
          f"F(1/2)={spot:.4f} (reference {ref_spot:.4f})")
    hist = emp.histogram([i / 60 for i in range(61)])
    rows = [("dl_ks", len(emp), ks, 0.0), ("dl_spot_half", len(emp), spot, 0.0)]
    rows += [("dl_hist", i, c, 0.0) for i, c in enumerate(hist["counts"])]
    _emit(args, _header(args), ("estimator", "index", "value", "stderr"), rows, "dl")
    if args.out:
        with open(os.path.splitext(args.out)[0] + "_hist.json", "w") as fh:
            json.dump(hist, fh)
    fig = _fig_path(args, "_hist")
    if fig:
        from . import report
        report.histogram_figure(fig, emp, with_dl_reference=True,
                                title="approximation quality distribution")
    if args.tol and ks > args.tol:
        return EXIT_MISMATCH
    return EXIT_OK


def _cheung_worker(payload):
    (source, draw, length, t_start) = payload
    theta = sampling.sample(source, draw)
    space = ApproxSpace.create([1, 1], [1])
    T = t_start
    records = []
    for _ in range(12):
        records = ba.frontier_best_cuboid(theta, space, int(math.exp(T)))
        if len(records) >= length:
            break
        T *= 1.3
    recs = records[:length]
    series = [(i + 1, r.log_q_norm ** 2 / (i + 1)) for i, r in enumerate(recs)]
    mean, _ = st.tail_stats([v for _, v in series])
    dets = st.determinant_samples(recs, space)
    return (draw, mean, series[-1][1], len(records), dets)


def cmd_cheung(args) -> int:
    space = ApproxSpace.create([1, 1], [1])
    if args.digits is None:
        # log q grows like sqrt(l) under the cuboid semantics
        args.digits = max(100, int(0.05 * args.length) + 60)
    source = _source_from(args, space)
    payloads = [(source, i, args.length, 30.0) for i in range(args.samples)]
    results = _pool_map(_cheung_worker, payloads, args.workers)
    tails = [t for _, t, _, _, _ in results]
    spread = (max(tails) - min(tails)) / sorted(tails)[len(tails) // 2]
    mean = sum(tails) / len(tails)
    print(f"cheung: mean (log q_l)^2/l = {mean:.4f}, "
          f"spread (max-min)/median = {spread * 100:.2f}% over {len(tails)} samples")
    rows = [("cheung_tail", draw, tail, 0.0) for draw, tail, _, _, _ in results]
    rows.append(("cheung_spread", len(tails), spread, 0.0))
    _emit(args, _header(args), ("estimator", "index", "value", "stderr"), rows, "cheung")
    fig = _fig_path(args, "_spread")
    if fig:
        from . import report
        report.scatter_figure(fig, tails, reference=mean,
                              title="(log q_l)^2 / l per sample")
    if args.tol and spread > args.tol:
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_cross_section(args) -> int:
    space = _space_from(args)
    theta = _theta_from(args, space)
    cfg = ba.EngineConfig(definition=args.definition, q_bound=max(1.0, math.exp(args.T)))
    report_ = dynamics.verify_correspondence(theta, space, args.T, cfg)
    print(report_.summary())
    rows = [("cross_section_hits", 0, report_.n_hits, 0.0),
            ("cross_section_eligible", 0, report_.n_eligible, 0.0),
            ("cross_section_match", 0, int(report_.match), 0.0)]
    _emit(args, _header(args), ("estimator", "index", "value", "stderr"), rows, "xsec")
    return EXIT_OK if report_.match else EXIT_MISMATCH


def _det_worker(payload):
    # determinant law lives in the trivial decomposition: norm records
    (source, draw, length) = payload
    theta = sampling.sample(source, draw)
    space = ApproxSpace.create([source.m], [1])
    records = ba.successor_best_norm(theta, space, length)
    return st.determinant_samples(records, space)


def cmd_determinants(args) -> int:
    space = _space_from(args)
    if getattr(args, "records", None):
        _, records = read_records(args.records)
        freq = st.determinant_distribution(records, space)
    elif space.decomp.m == 1 and space.decomp.n == 1:
        theta = _theta_from(args, space)
        records, _ = ba.best_records_from_cf(theta, space, args.length)
        freq = st.determinant_distribution(records, space)
    elif space.decomp.k == 1 and space.decomp.r == 1 and space.decomp.n == 1:
        if args.digits is None:
            # resolve sup distances ~ q^(-1/m) out to the requested depth
            args.digits = int(0.8 * args.length) + 100
        source = _source_from(args, space)
        results = _pool_map(_det_worker,
                            [(source, i, args.length)
                             for i in range(max(1, args.samples))], args.workers)
        vals: List[int] = []
        for dets in results:
            vals.extend(dets)
        total = len(vals)
        freq = {v: vals.count(v) / total for v in sorted(set(vals))}
    else:
        raise _CliError("determinant statistics need k = r = 1 "
                        "(use --decomp 'm|1' or re-ingest --records)")
    print("determinant frequencies:",
          {k: round(v, 4) for k, v in freq.items()})
    rows = [("det_freq", k, v, 0.0) for k, v in freq.items()]
    _emit(args, _header(args), ("estimator", "index", "value", "stderr"), rows, "det")
    fig = _fig_path(args, "_freq")
    if fig:
        from . import report
        report.frequency_figure(fig, freq, title="determinant distribution")
    return EXIT_OK


def _residue_worker(payload):
    (source, draw, length, N) = payload
    theta = sampling.sample(source, draw)
    space = ApproxSpace.create([1], [1])
    records, _ = ba.best_records_from_cf(theta, space, length, moduli=(N,))
    out: Dict[Tuple[int, ...], int] = {}
    for rec in records:
        if rec.degenerate:
            continue
        cls = rec.residues[N]
        out[cls] = out.get(cls, 0) + 1
    return out


def cmd_residues(args) -> int:
    N = int(args.mod[0]) if args.mod else 2
    space = ApproxSpace.create([1], [1])
    if getattr(args, "records", None):
        _, records = read_records(args.records)
        freq = st.residue_distribution(records, N)
    else:
        source = _source_from(args, space)
        payloads = [(source, i, args.length, N) for i in range(args.samples)]
        counts: Dict[Tuple[int, ...], int] = {}
        for chunk in _pool_map(_residue_worker, payloads, args.workers):
            for k, v in chunk.items():
                counts[k] = counts.get(k, 0) + v
        total = sum(counts.values())
        freq = {k: v / total for k, v in sorted(counts.items())}
    print(f"residue classes mod {N}:",
          {str(k): round(v, 4) for k, v in freq.items()})
    rows = [("residue_freq", "-".join(map(str, k)), v, 0.0) for k, v in freq.items()]
    _emit(args, _header(args), ("estimator", "class", "value", "stderr"), rows, "res")
    fig = _fig_path(args, "_freq")
    if fig:
        from . import report
        report.frequency_figure(fig, freq, expected=None,
                                title=f"(p, q) mod {N}")
    return EXIT_OK


def cmd_gaps(args) -> int:
    space = _space_from(args)
    if getattr(args, "records", None):
        _, records = read_records(args.records)
    else:
        theta = _theta_from(args, space)
        records, _ = ba.best_records_from_cf(theta, space, args.length)
    dist, _ = st.gap_distribution(records)
    if len(dist) == 0:
        print("gaps: no nondegenerate consecutive pairs in the stream")
        return EXIT_OK
    check = st.telescoping_gap_check(records)
    print(f"gaps: n={len(dist)} mean={dist.mean():.6f} "
          f"telescoping residual={check:.2e}")
    edges = [i * 0.1 for i in range(0, 61)]
    hist = dist.histogram(edges)
    rows = [("gap_mean", 0, dist.mean(), 0.0),
            ("gap_telescoping", 0, check, 0.0)]
    rows += [("gap_hist", i, c, 0.0) for i, c in enumerate(hist["counts"])]
    _emit(args, _header(args), ("estimator", "index", "value", "stderr"), rows, "gaps")
    fig = _fig_path(args, "_hist")
    if fig:
        from . import report
        report.histogram_figure(fig, dist, title="log(q_{l+1}/q_l) distribution")
    return EXIT_OK


def _parse_constraints(args) -> st.ConstraintSet:
    err = None
    if args.err_range:
        a, b = (float(x) for x in args.err_range.split(","))
        err = (a, b)
    res = None
    if args.residue:
        cls_txt, mod_txt = args.residue.split("@")
        N = int(mod_txt)
        classes = frozenset(tuple(int(x) for x in c.split(","))
                            for c in cls_txt.split(";"))
        res = (N, classes)
    return st.ConstraintSet(error_interval=err, residue_classes=res)


def cmd_count(args) -> int:
    space = _space_from(args)
    constraint = _parse_constraints(args)
    if getattr(args, "records", None):
        _, records = read_records(args.records)
    else:
        theta = _theta_from(args, space)
        if space.decomp.m == 1 and space.decomp.n == 1:
            records, _ = ba.best_records_from_cf(theta, space, args.length)
        else:
            cfg = ba.EngineConfig(definition=args.definition,
                                  q_bound=max(1.0, math.exp(args.T)))
            records = _run_engine(theta, space, cfg)
    n, normalized = st.count_constrained(records, constraint, args.T, space)
    print(f"count: N={n} normalized N/T^(k+r-1)={normalized:.6f}")
    rows = [("count", args.T, n, 0.0), ("count_normalized", args.T, normalized, 0.0)]
    _emit(args, _header(args), ("estimator", "T", "value", "stderr"), rows, "count")
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    import random
    rng = random.Random(args.seed or 0)
    shapes = [((1,), (1,)), ((1, 1), (1,)), ((1,), (1, 1)), ((2,), (1,))]
    trials = args.trials
    failures = 0
    for trial in range(trials):
        m_parts, n_parts = shapes[trial % len(shapes)]
        space = ApproxSpace.create(m_parts, n_parts)
        den = rng.choice([97, 101, 103, 211])
        rows = [[Fraction(rng.randrange(1, den), den)
                 for _ in range(space.decomp.n)] for _ in range(space.decomp.m)]
        theta = ba.Theta.explicit(rows)
        defs = [ba.GENERAL, ba.NORM] if space.decomp.k == 1 and space.decomp.r == 1 \
            else [ba.GENERAL]
        if space.decomp.n == 1 and all(p == 1 for p in m_parts):
            defs.append(ba.CUBOID)
        for definition in defs:
            sp = space
            if definition == ba.NORM:
                sp = ApproxSpace.create([space.decomp.m], [space.decomp.n])
            if definition == ba.CUBOID:
                sp = ApproxSpace.create([1] * space.decomp.m, [1] * space.decomp.n)
            box = 8 if sp.decomp.d <= 3 else 4
            cfg = ba.EngineConfig(definition=definition, q_bound=box)
            eng = _run_engine(theta, sp, cfg)
            eng = [(r.p, r.q) for r in eng
                   if all(abs(c) <= box for c in r.p + r.q)]
            orc = [(r.p, r.q) for r in ba.oracle_best(theta, sp, box, cfg)]
            if eng != orc:
                failures += 1
                print(f"mismatch: theta={rows} def={definition} "
                      f"engine={eng} oracle={orc}")
    print(f"selfcheck: {trials} trials, {failures} mismatches")
    return EXIT_OK if failures == 0 else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--decomp", help="decomposition, e.g. '2e,1s|1s' or '1|1'")
    p.add_argument("--norms", help="per-block norms, e.g. 'e,s|s'")
    p.add_argument("--def", dest="definition", default=None,
                   choices=[ba.CUBOID, ba.NORM, ba.GENERAL])
    p.add_argument("--theta", help="exact rational matrix: rows ';', entries ','")
    p.add_argument("--theta-file", help="text file, one matrix row per line")
    p.add_argument("--measure", help="lebesgue | cantor | curve:<deg> | quadratic:a,b,c")
    p.add_argument("--digits", type=int, help="sampler digit budget")
    p.add_argument("--qmax", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--shift", type=int, default=0)
    p.add_argument("--mod", action="append", help="modulus (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("DIOLAB_WORKERS", "1")))
    p.add_argument("--out", help="output path")
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--records", help="re-ingest a JSONL record stream")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--mode", choices=["exact", "float"], default="exact")
    p.add_argument("--err-range", help="error constraint 'a,b'")
    p.add_argument("--residue", help="residue constraint 'c1,..,cd[;...]@N'")
    p.add_argument("--selfcheck", action="store_true")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--verify", action="store_true")


_DEFAULTS = {
    "bestapprox": {"definition": ba.GENERAL, "qmax": 100.0},
    "levy": {"samples": 20, "length": 1000},
    "doeblin-lenstra": {"samples": 20, "length": 1000},
    "cheung": {"samples": 8, "length": 300},
    "cross-section": {"definition": ba.NORM, "T": 3.0},
    "determinants": {"samples": 2, "length": 1000},
    "residues": {"samples": 20, "length": 1000},
    "gaps": {"length": 1000},
    "count": {"definition": ba.GENERAL, "T": 3.0, "length": 1000},
    "selfcheck": {},
}

_COMMANDS = {
    "bestapprox": cmd_bestapprox,
    "levy": cmd_levy,
    "doeblin-lenstra": cmd_doeblin_lenstra,
    "cheung": cmd_cheung,
    "cross-section": cmd_cross_section,
    "determinants": cmd_determinants,
    "residues": cmd_residues,
    "gaps": cmd_gaps,
    "count": cmd_count,
    "selfcheck": cmd_selfcheck,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="diolab",
                     description="best Diophantine approximations and their statistics")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(func=fn)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        # config file seeds unset flags; explicit flags win
        if args.config:
            conf = _load_config(args.config)
            for key, raw in conf.items():
                if getattr(args, key, None) in (None, False):
                    current = getattr(args, key, None)
                    if isinstance(current, bool):
                        setattr(args, key, raw.lower() in ("1", "true", "yes"))
                    elif key in ("mod",):
                        setattr(args, key, raw.split(","))
                    elif key in ("length", "samples", "trials", "workers",
                                 "seed", "digits", "shift"):
                        setattr(args, key, int(raw))
                    elif key in ("qmax", "T", "tol"):
                        setattr(args, key, float(raw))
                    else:
                        setattr(args, key, raw)
        for key, val in _DEFAULTS[args.command].items():
            if getattr(args, key, None) is None:
                setattr(args, key, val)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except (_CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION


if __name__ == "__main__":
    sys.exit(main())
