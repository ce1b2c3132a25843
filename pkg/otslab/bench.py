"""Timing harness for keygen / sign / verify.

Each trial draws a fresh random key and a fresh random t, then times key
generation, signing and verification with ``time.perf_counter_ns`` on a
single thread. ``ChainMode.SEQUENTIAL`` walks chains one step at a time,
as the reference timings do; ``ChainMode.JUMP`` uses the logarithmic
jump-ahead so its speedup is itself a reported number. Hash chains have no
jump-ahead, so wots groups are timed in sequential mode only.

Absolute timings are hardware specific; only orderings and ratios are
meaningful across machines.
"""
import csv
import io
import logging
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from datetime import datetime, timezone
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from sqlalchemy import create_engine, text

from . import hashchain, lcg, prngots
from .exceptions import BenchConfigurationError
from .hashchain import ChainValue, WotsParams
from .keystore import Scheme
from .lcg import ChainMode, LcgParams

logger = logging.getLogger(__name__)

OPERATIONS = ("keygen", "sign", "verify")
DEFAULT_TRIALS = 30
DEFAULT_WARMUP = 3

SUMMARY_HEADER = [
    "scheme", "paramset", "operation", "mode",
    "min_ns", "q1_ns", "median_ns", "q3_ns", "max_ns", "mean_ns", "trials",
]
RECORD_HEADER = ["scheme", "paramset", "operation", "trial", "duration_ns", "mode"]


@dataclass(frozen=True)
class TimingRecord:
    scheme: str
    paramset: str
    operation: str
    trial: int
    duration_ns: int
    mode: str

    @property
    def group(self) -> Tuple[str, str, str, str]:
        return self.scheme, self.paramset, self.operation, self.mode


@dataclass(frozen=True)
class TimingSummary:
    scheme: str
    paramset: str
    operation: str
    mode: str
    min_ns: float
    q1_ns: float
    median_ns: float
    q3_ns: float
    max_ns: float
    mean_ns: float
    trials: int


@dataclass(frozen=True)
class BenchGroup:
    """One (scheme, paramset, mode) cell of a run; picklable for worker processes."""

    scheme: Scheme
    paramset: str
    mode: ChainMode
    lcg_params: Optional[LcgParams] = None


def resolve_modes(mode: str) -> List[ChainMode]:
    if mode == "both":
        return [ChainMode.SEQUENTIAL, ChainMode.JUMP]
    try:
        return [ChainMode(mode)]
    except ValueError:
        raise BenchConfigurationError(f"Unknown chain mode {mode!r}; use sequential, jump or both") from None


def plan_groups(schemes: Sequence[str], paramsets: Sequence[str], modes: Sequence[ChainMode]) -> List[BenchGroup]:
    groups = []
    for scheme_name in schemes:
        try:
            scheme = Scheme(scheme_name)
        except ValueError:
            raise BenchConfigurationError(f"Unknown scheme {scheme_name!r}") from None
        for paramset in paramsets:
            if scheme is Scheme.PRNG_OTS:
                try:
                    params = lcg.registry_get(paramset)
                except LookupError:
                    raise BenchConfigurationError(
                        f"prng-ots needs an LCG parameter set, got {paramset!r}") from None
                groups.extend(BenchGroup(scheme, paramset, mode, params) for mode in modes)
            else:
                if paramset not in hashchain.DIGESTS:
                    raise BenchConfigurationError(f"wots needs a digest name, got {paramset!r}")
                if ChainMode.JUMP in modes:
                    logger.info(f"wots/{paramset}: hash chains have no jump-ahead, timing sequential only")
                groups.append(BenchGroup(scheme, paramset, ChainMode.SEQUENTIAL))
    return groups


def _timed(fn, *args):
    start = time.perf_counter_ns()
    result = fn(*args)
    return result, time.perf_counter_ns() - start


def _trial_prng(params: LcgParams, w: int, t: int, mode: ChainMode) -> Dict[str, int]:
    p = prngots.generate_seed(params)
    pair, keygen_ns = _timed(prngots.prng_keygen, p, params, w, mode)
    sig, sign_ns = _timed(prngots.prng_sign, p, t, params, w, mode)
    ok, verify_ns = _timed(prngots.prng_verify, pair.P, sig.S, t, params, w, mode)
    if not ok:
        raise RuntimeError(f"Verification failed during benchmark for {params.name}")
    return {"keygen": keygen_ns, "sign": sign_ns, "verify": verify_ns}


def _trial_wots(params: WotsParams, t: int) -> Dict[str, int]:
    r = ChainValue.random(params.hash_name)
    public, keygen_ns = _timed(hashchain.wots_keygen, r, params)
    zeta, sign_ns = _timed(hashchain.wots_sign, r, t, params)
    ok, verify_ns = _timed(hashchain.wots_verify, public, zeta, t, params)
    if not ok:
        raise RuntimeError(f"Verification failed during benchmark for {params.hash_name}")
    return {"keygen": keygen_ns, "sign": sign_ns, "verify": verify_ns}


def run_group(group: BenchGroup, w: int, trials: int, warmup: int = DEFAULT_WARMUP,
              seed: Optional[int] = None) -> List[TimingRecord]:
    """Time one group on the calling thread."""
    rng = random.Random(seed) if seed is not None else random.SystemRandom()
    top = hashchain.chain_length(w)
    if group.scheme is Scheme.PRNG_OTS:
        def trial(t):
            return _trial_prng(group.lcg_params, w, t, group.mode)
    else:
        wots_params = WotsParams(w, group.paramset)

        def trial(t):
            return _trial_wots(wots_params, t)

    logger.info(f"Bench {group.scheme}/{group.paramset} mode={group.mode} w={w}: "
                f"{warmup} warmup + {trials} trials")
    for _ in range(warmup):
        trial(rng.randint(0, top))

    records = []
    for index in range(trials):
        durations = trial(rng.randint(0, top))
        for operation in OPERATIONS:
            records.append(TimingRecord(group.scheme.value, group.paramset, operation, index,
                                        durations[operation], group.mode.value))
    logger.info(f"Bench {group.scheme}/{group.paramset} mode={group.mode}: {len(records)} records")
    return records


def _run_group_job(job: Tuple[BenchGroup, int, int, int, Optional[int]]) -> List[TimingRecord]:
    return run_group(*job)


def run_bench(schemes: Sequence[str], paramsets: Sequence[str], w: int = prngots.DEFAULT_W,
              trials: int = DEFAULT_TRIALS, mode: str = "sequential", warmup: int = DEFAULT_WARMUP,
              parallel: bool = False, seed: Optional[int] = None) -> List[TimingRecord]:
    """Time every (scheme, paramset, mode) group.

    Groups run one after another unless ``parallel`` is set, in which case
    they are spread over worker processes; timed sections stay single threaded
    either way.
    """
    if trials < 1:
        raise BenchConfigurationError(f"trials must be >= 1, got {trials}")
    if warmup < 0:
        raise BenchConfigurationError(f"warmup must be >= 0, got {warmup}")
    hashchain.check_chain_depth(w)
    groups = plan_groups(schemes, paramsets, resolve_modes(mode))
    jobs = [(group, w, trials, warmup, None if seed is None else seed + i) for i, group in enumerate(groups)]

    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 1)) as pool:
            batches = list(pool.map(_run_group_job, jobs))
    else:
        batches = [_run_group_job(job) for job in jobs]
    return [record for batch in batches for record in batch]


# ==================== Statistics ====================

def summarize(records: Iterable[TimingRecord],
              expected_groups: Optional[Iterable[Tuple[str, str, str, str]]] = None) -> List[TimingSummary]:
    """Order statistics per (scheme, paramset, operation, mode).

    Quartiles use linear interpolation between order statistics. Groups
    listed in ``expected_groups`` without any record are omitted with a
    warning.
    """
    grouped: Dict[Tuple[str, str, str, str], List[int]] = {}
    for record in records:
        grouped.setdefault(record.group, []).append(record.duration_ns)

    if expected_groups is not None:
        for key in expected_groups:
            if key not in grouped:
                logger.warning(f"No timing records for {'/'.join(key)}; group omitted from summary")

    summaries = []
    for (scheme, paramset, operation, mode), durations in grouped.items():
        values = np.asarray(durations, dtype=np.float64)
        q0, q1, q2, q3, q4 = np.percentile(values, [0, 25, 50, 75, 100])
        summaries.append(TimingSummary(
            scheme=scheme, paramset=paramset, operation=operation, mode=mode,
            min_ns=float(q0), q1_ns=float(q1), median_ns=float(q2), q3_ns=float(q3),
            max_ns=float(q4), mean_ns=float(np.mean(values)), trials=len(durations),
        ))
    return summaries


def find_summary(summaries: Iterable[TimingSummary], scheme: str, paramset: str,
                 operation: str, mode: str) -> Optional[TimingSummary]:
    for summary in summaries:
        if (summary.scheme, summary.paramset, summary.operation, summary.mode) == (scheme, paramset, operation, mode):
            return summary
    return None


def fastest_paramset(summaries: Iterable[TimingSummary], operation: str,
                     mode: str = ChainMode.SEQUENTIAL.value, scheme: str = Scheme.PRNG_OTS.value) -> Optional[str]:
    candidates = [s for s in summaries if (s.scheme, s.operation, s.mode) == (scheme, operation, mode)]
    if not candidates:
        return None
    return min(candidates, key=lambda s: s.median_ns).paramset


def check_fastest(summaries: Sequence[TimingSummary], expected: str = "gcc",
                  mode: str = ChainMode.SEQUENTIAL.value) -> bool:
    """Soft check that ``expected`` has the lowest median for every operation.

    A miss is logged as a warning, never raised: the ordering depends on the
    machine and on operand sizes.
    """
    holds = True
    for operation in OPERATIONS:
        fastest = fastest_paramset(summaries, operation, mode)
        if fastest is None:
            continue
        if fastest != expected:
            holds = False
            logger.warning(f"{operation}: fastest median in {mode} mode is {fastest}, not {expected}")
    return holds


def speedup(summaries: Sequence[TimingSummary], paramset: str, operation: str = "keygen",
            scheme: str = Scheme.PRNG_OTS.value) -> Optional[float]:
    """Sequential median divided by jump median for one group."""
    sequential = find_summary(summaries, scheme, paramset, operation, ChainMode.SEQUENTIAL.value)
    jumped = find_summary(summaries, scheme, paramset, operation, ChainMode.JUMP.value)
    if sequential is None or jumped is None:
        return None
    return sequential.median_ns / max(jumped.median_ns, 1.0)


# ==================== CSV and text output ====================

def write_summary_csv(summaries: Iterable[TimingSummary], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for summary in summaries:
        writer.writerow(astuple(summary))


def summary_csv_text(summaries: Iterable[TimingSummary]) -> str:
    buffer = io.StringIO()
    write_summary_csv(summaries, buffer)
    return buffer.getvalue()


def write_records_csv(records: Iterable[TimingRecord], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for record in records:
        writer.writerow(astuple(record))


def read_records_csv(source: TextIO) -> List[TimingRecord]:
    reader = csv.DictReader(source)
    if reader.fieldnames != RECORD_HEADER:
        raise BenchConfigurationError(f"Unexpected raw record header: {reader.fieldnames}")
    return [
        TimingRecord(row["scheme"], row["paramset"], row["operation"], int(row["trial"]),
                     int(row["duration_ns"]), row["mode"])
        for row in reader
    ]


def read_summary_csv(source: TextIO) -> List[TimingSummary]:
    reader = csv.DictReader(source)
    if reader.fieldnames != SUMMARY_HEADER:
        raise BenchConfigurationError(f"Unexpected summary header: {reader.fieldnames}")
    numeric = {f.name for f in fields(TimingSummary)} - {"scheme", "paramset", "operation", "mode", "trials"}
    return [
        TimingSummary(**{
            key: (float(value) if key in numeric else int(value) if key == "trials" else value)
            for key, value in row.items()
        })
        for row in reader
    ]


def format_ns(ns: float) -> str:
    if ns >= 10e6:
        return "%.1f ms" % (ns / 1e6)
    if ns >= 10e3:
        return "%.1f us" % (ns / 1e3)
    return "%.0f ns" % ns


def format_summary_table(summaries: Sequence[TimingSummary]) -> str:
    headers = ["scheme", "paramset", "operation", "mode", "min", "q1", "median", "q3", "max", "mean", "n"]
    rows = [
        [s.scheme, s.paramset, s.operation, s.mode,
         *(format_ns(v) for v in (s.min_ns, s.q1_ns, s.median_ns, s.q3_ns, s.max_ns, s.mean_ns)),
         str(s.trials)]
        for s in summaries
    ]
    widths = [max(len(row[i]) for row in [headers] + rows) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
             for row in [headers] + rows]
    return "\n".join(lines)


# ==================== Run archive ====================

class BenchArchive:
    """基准测试结果归档，按运行保存原始计时记录"""

    def __init__(self, database_url: str) -> None:
        self.engine = create_engine(database_url, future=True)
        self.init_db()

    def init_db(self) -> None:
        with self.engine.begin() as conn:
            conn.execute(
                text(
                    """
                    CREATE TABLE IF NOT EXISTS bench_runs (
                        id INTEGER PRIMARY KEY AUTOINCREMENT,
                        created_at TEXT NOT NULL,
                        w INTEGER NOT NULL,
                        trials INTEGER NOT NULL,
                        warmup INTEGER NOT NULL,
                        note TEXT
                    )
                    """
                )
            )
            conn.execute(
                text(
                    """
                    CREATE TABLE IF NOT EXISTS timing_records (
                        id INTEGER PRIMARY KEY AUTOINCREMENT,
                        run_id INTEGER NOT NULL,
                        scheme TEXT NOT NULL,
                        paramset TEXT NOT NULL,
                        operation TEXT NOT NULL,
                        mode TEXT NOT NULL,
                        trial INTEGER NOT NULL,
                        duration_ns INTEGER NOT NULL,
                        FOREIGN KEY (run_id) REFERENCES bench_runs(id)
                    )
                    """
                )
            )

    def store_run(self, records: Sequence[TimingRecord], w: int, trials: int, warmup: int,
                  note: Optional[str] = None) -> int:
        """保存一次运行，返回 run_id"""
        with self.engine.begin() as conn:
            cursor = conn.execute(
                text(
                    """
                    INSERT INTO bench_runs (created_at, w, trials, warmup, note)
                    VALUES (:created_at, :w, :trials, :warmup, :note)
                    """
                ),
                {
                    "created_at": datetime.now(timezone.utc).isoformat(),
                    "w": w,
                    "trials": trials,
                    "warmup": warmup,
                    "note": note,
                },
            )
            run_id = cursor.lastrowid
            if records:
                conn.execute(
                    text(
                        """
                        INSERT INTO timing_records (run_id, scheme, paramset, operation, mode, trial, duration_ns)
                        VALUES (:run_id, :scheme, :paramset, :operation, :mode, :trial, :duration_ns)
                        """
                    ),
                    [
                        {
                            "run_id": run_id,
                            "scheme": r.scheme,
                            "paramset": r.paramset,
                            "operation": r.operation,
                            "mode": r.mode,
                            "trial": r.trial,
                            "duration_ns": r.duration_ns,
                        }
                        for r in records
                    ],
                )
        logger.info(f"Archived bench run {run_id} with {len(records)} records")
        return run_id  # type: ignore[return-value]

    def load_run(self, run_id: int) -> List[TimingRecord]:
        with self.engine.begin() as conn:
            exists = conn.execute(
                text("SELECT id FROM bench_runs WHERE id = :run_id"), {"run_id": run_id}
            ).scalar_one_or_none()
            if exists is None:
                raise BenchConfigurationError(f"No archived bench run with id {run_id}")
            rows = conn.execute(
                text(
                    """
                    SELECT scheme, paramset, operation, trial, duration_ns, mode
                    FROM timing_records WHERE run_id = :run_id ORDER BY id
                    """
                ),
                {"run_id": run_id},
            ).mappings().all()
        return [TimingRecord(**dict(row)) for row in rows]

    def list_runs(self) -> List[Dict]:
        with self.engine.begin() as conn:
            rows = conn.execute(
                text(
                    """
                    SELECT r.id, r.created_at, r.w, r.trials, r.warmup, r.note,
                           COUNT(t.id) AS records
                    FROM bench_runs r LEFT JOIN timing_records t ON t.run_id = r.id
                    GROUP BY r.id ORDER BY r.id
                    """
                )
            ).mappings().all()
        return [dict(row) for row in rows]
